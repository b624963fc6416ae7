#pragma once

// File formats used by the command-line driver. All files are UTF-8, LF,
// comma-separated with dot decimals. Numeric output uses shortest
// round-trip formatting, so generate -> load -> write is lossless.
//
//   price series:  header "date,close"; ISO-8601 dates, strictly increasing.
//   state series:  header "t,x,y" (synthetic, y empty at t = 0) or "t,y".
//   chain trace:   header "iteration,<param names...>,loglik,accepted".
//   covariance:    p rows of p comma-separated entries, no header.
//   summary:       "key value" lines, keys dot-namespaced.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pmh/errors.hpp"
#include "pmh/sampler.hpp"
#include "pmh/time_series.hpp"

namespace pmh {

/// Shortest decimal string that parses back to exactly the same double.
inline std::string format_double(double value) {
  char buffer[32];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

inline double parse_double(std::string_view text, const std::string& context, int line) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto result = std::from_chars(first, last, value);
  if (result.ec != std::errc{} || result.ptr != last)
    throw InputError(context + ": non-numeric cell '" + std::string(text) + "' at line " +
                     std::to_string(line));
  return value;
}

inline long parse_integer(std::string_view text, const std::string& context, int line) {
  long value = 0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc{} || result.ptr != text.data() + text.size())
    throw InputError(context + ": non-integer cell '" + std::string(text) + "' at line " +
                     std::to_string(line));
  return value;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string::size_type start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  if (!cells.empty() && !cells.back().empty() && cells.back().back() == '\r')
    cells.back().pop_back();
  return cells;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open input file '" + path + "'");
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // LF line endings everywhere
  if (!out) throw InputError("cannot open output file '" + path + "'");
  return out;
}

/// Daily closing prices with their dates.
struct PriceSeries {
  std::vector<std::string> dates;  // ISO-8601, strictly increasing
  std::vector<double> closes;     // > 0
};

inline bool plausible_iso_date(const std::string& s) {
  if (s.size() < 10) return false;
  for (int i : {0, 1, 2, 3, 5, 6, 8, 9})
    if (s[i] < '0' || s[i] > '9') return false;
  return s[4] == '-' && s[7] == '-';
}

inline PriceSeries load_price_csv(const std::string& path) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw InputError(path + ": empty file");
  if (auto header = split_csv_line(line); header != std::vector<std::string>{"date", "close"})
    throw InputError(path + ": expected header 'date,close'");

  PriceSeries series;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 2)
      throw InputError(path + ": expected 2 cells at line " + std::to_string(line_no));
    if (!plausible_iso_date(cells[0]))
      throw InputError(path + ": invalid ISO-8601 date '" + cells[0] + "' at line " +
                       std::to_string(line_no));
    if (!series.dates.empty() && cells[0] <= series.dates.back())
      throw InputError(path + ": dates must be strictly increasing at line " +
                       std::to_string(line_no));
    const double close = parse_double(cells[1], path, line_no);
    if (!(close > 0.0))
      throw InputError(path + ": non-positive price at line " + std::to_string(line_no));
    series.dates.push_back(cells[0]);
    series.closes.push_back(close);
  }
  if (series.closes.empty()) throw InputError(path + ": no data rows");
  return series;
}

/// y_t = 100 (log s_t - log s_{t-1}): T log-returns from T+1 prices.
inline TimeSeries compute_log_returns(const PriceSeries& prices) {
  if (prices.closes.size() < 2)
    throw InputError("compute_log_returns: need at least two prices");
  TimeSeries series;
  series.observations.reserve(prices.closes.size() - 1);
  for (std::size_t t = 0; t < prices.closes.size(); ++t) {
    if (!(prices.closes[t] > 0.0))
      throw InputError("compute_log_returns: non-positive price at row " + std::to_string(t));
    if (t > 0)
      series.observations.push_back(
          100.0 * (std::log(prices.closes[t]) - std::log(prices.closes[t - 1])));
  }
  return series;
}

inline void write_series_csv(const std::string& path, const TimeSeries& series) {
  auto out = open_output(path);
  if (series.states) {
    const auto& x = *series.states;
    if (x.size() != series.observations.size() + 1)
      throw InputError("write_series_csv: states must have length T + 1");
    out << "t,x,y\n";
    out << "0," << format_double(x[0]) << ",\n";
    for (std::size_t t = 1; t < x.size(); ++t)
      out << t << ',' << format_double(x[t]) << ',' << format_double(series.observations[t - 1])
          << '\n';
  } else {
    out << "t,y\n";
    for (std::size_t t = 0; t < series.observations.size(); ++t)
      out << t + 1 << ',' << format_double(series.observations[t]) << '\n';
  }
}

inline TimeSeries load_series_csv(const std::string& path) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw InputError(path + ": empty file");
  const auto header = split_csv_line(line);
  const bool has_states = header == std::vector<std::string>{"t", "x", "y"};
  if (!has_states && header != std::vector<std::string>{"t", "y"})
    throw InputError(path + ": expected header 't,x,y' or 't,y'");

  TimeSeries series;
  std::vector<double> states;
  int line_no = 1;
  long expected_t = has_states ? 0 : 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw InputError(path + ": expected " + std::to_string(header.size()) +
                       " cells at line " + std::to_string(line_no));
    const long t = parse_integer(cells[0], path, line_no);
    if (t != expected_t)
      throw InputError(path + ": unexpected time index at line " + std::to_string(line_no));
    ++expected_t;
    if (has_states) {
      states.push_back(parse_double(cells[1], path, line_no));
      if (t == 0) {
        if (!cells[2].empty())
          throw InputError(path + ": expected empty observation at t = 0, line " +
                           std::to_string(line_no));
      } else {
        series.observations.push_back(parse_double(cells[2], path, line_no));
      }
    } else {
      series.observations.push_back(parse_double(cells[1], path, line_no));
    }
  }
  if (series.observations.empty()) throw InputError(path + ": no observations");
  if (has_states) {
    series.initial_state = states.front();
    series.states = std::move(states);
  }
  return series;
}

/// Peeks at the header to distinguish a price file from a state series.
inline bool looks_like_price_csv(const std::string& path) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw InputError(path + ": empty file");
  return split_csv_line(line) == std::vector<std::string>{"date", "close"};
}

inline void write_trace_csv(const std::string& path, const ChainTrace& trace,
                            const std::vector<std::string>& parameter_names) {
  if (static_cast<int>(parameter_names.size()) != trace.dimension())
    throw InputError("write_trace_csv: parameter name count mismatch");
  auto out = open_output(path);
  out << "iteration";
  for (const auto& name : parameter_names) out << ',' << name;
  out << ",loglik,accepted\n";
  for (int k = 0; k < trace.iterations(); ++k) {
    out << k;
    for (int j = 0; j < trace.dimension(); ++j)
      out << ',' << format_double(trace.parameters(k, j));
    out << ',' << format_double(trace.log_likelihoods[k]) << ','
        << static_cast<int>(trace.accepted[k]) << '\n';
  }
}

struct LoadedTrace {
  ChainTrace trace;
  std::vector<std::string> parameter_names;
};

inline LoadedTrace load_trace_csv(const std::string& path) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw InputError(path + ": empty file");
  const auto header = split_csv_line(line);
  if (header.size() < 4 || header.front() != "iteration" ||
      header[header.size() - 2] != "loglik" || header.back() != "accepted")
    throw InputError(path + ": expected header 'iteration,<params...>,loglik,accepted'");

  LoadedTrace loaded;
  loaded.parameter_names.assign(header.begin() + 1, header.end() - 2);
  const int p = static_cast<int>(loaded.parameter_names.size());

  std::vector<std::vector<double>> rows;
  std::vector<double> logliks;
  std::vector<std::uint8_t> accepted;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw InputError(path + ": expected " + std::to_string(header.size()) +
                       " cells at line " + std::to_string(line_no));
    std::vector<double> row(p);
    for (int j = 0; j < p; ++j) row[j] = parse_double(cells[1 + j], path, line_no);
    rows.push_back(std::move(row));
    logliks.push_back(parse_double(cells[p + 1], path, line_no));
    const long flag = parse_integer(cells[p + 2], path, line_no);
    if (flag != 0 && flag != 1)
      throw InputError(path + ": accepted flag must be 0 or 1 at line " +
                       std::to_string(line_no));
    accepted.push_back(static_cast<std::uint8_t>(flag));
  }
  if (rows.empty()) throw InputError(path + ": no data rows");

  loaded.trace.parameters.resize(static_cast<int>(rows.size()), p);
  for (std::size_t k = 0; k < rows.size(); ++k)
    for (int j = 0; j < p; ++j) loaded.trace.parameters(static_cast<int>(k), j) = rows[k][j];
  loaded.trace.log_likelihoods = std::move(logliks);
  loaded.trace.accepted = std::move(accepted);
  return loaded;
}

inline void write_covariance_csv(const std::string& path, const Eigen::MatrixXd& matrix) {
  auto out = open_output(path);
  for (int i = 0; i < matrix.rows(); ++i) {
    for (int j = 0; j < matrix.cols(); ++j) {
      if (j > 0) out << ',';
      out << format_double(matrix(i, j));
    }
    out << '\n';
  }
}

inline Eigen::MatrixXd load_covariance_csv(const std::string& path) {
  auto in = open_input(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    std::vector<double> row;
    for (const auto& cell : cells) row.push_back(parse_double(cell, path, line_no));
    if (!rows.empty() && row.size() != rows.front().size())
      throw InputError(path + ": ragged matrix at line " + std::to_string(line_no));
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows.size() != rows.front().size())
    throw InputError(path + ": expected a square numeric matrix");
  Eigen::MatrixXd matrix(rows.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.size(); ++j)
      matrix(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
  return matrix;
}

/// Key/value summary file, one "key value" pair per line.
class SummaryWriter {
public:
  void add(const std::string& key, const std::string& value) { lines_.emplace_back(key, value); }
  void add(const std::string& key, double value) { add(key, format_double(value)); }
  void add(const std::string& key, long value) { add(key, std::to_string(value)); }
  void add(const std::string& key, int value) { add(key, std::to_string(value)); }

  void write(const std::string& path) const {
    auto out = open_output(path);
    for (const auto& [key, value] : lines_) out << key << ' ' << value << '\n';
  }

  std::string str() const {
    std::ostringstream out;
    for (const auto& [key, value] : lines_) out << key << ' ' << value << '\n';
    return out.str();
  }

private:
  std::vector<std::pair<std::string, std::string>> lines_;
};

}  // namespace pmh
