#pragma once

#include <optional>
#include <vector>

namespace pmh {

/// Observations y_1..y_T plus, when known, the latent states x_0..x_T.
struct TimeSeries {
  std::vector<double> observations;           // y_1..y_T
  std::optional<std::vector<double>> states;  // x_0..x_T (length T + 1)
  double initial_state = 0.0;                 // x_0

  int length() const { return static_cast<int>(observations.size()); }
};

}  // namespace pmh
