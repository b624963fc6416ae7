#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "pmh/rng.hpp"
#include "support/oracles.hpp"

using pmh::RngStream;

TEST_CASE("identical (seed, stream) pairs reproduce the same draws") {
  RngStream a(42, 3);
  RngStream b(42, 3);
  for (int i = 0; i < 1000; ++i) {
    REQUIRE(a.next_u64() == b.next_u64());
  }
  RngStream c(42, 3);
  RngStream d(42, 3);
  for (int i = 0; i < 1000; ++i) {
    REQUIRE(c.normal() == d.normal());
  }
}

TEST_CASE("distinct streams of one seed are distinct") {
  RngStream a(42, 0);
  RngStream b(42, 1);
  int equal = 0;
  for (int i = 0; i < 64; ++i) equal += a.next_u64() == b.next_u64();
  REQUIRE(equal == 0);
}

TEST_CASE("uniform draws live in [0, 1)") {
  RngStream rng(7);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("normal draws have standard moments") {
  RngStream rng(11);
  std::vector<double> xs(200000);
  for (double& x : xs) x = rng.normal();
  // Monte Carlo error ~ 1/sqrt(n); bounds are ~4 sigma wide.
  REQUIRE(oracles::mean(xs) == Catch::Approx(0.0).margin(0.01));
  REQUIRE(oracles::sample_variance(xs) == Catch::Approx(1.0).margin(0.015));
}

TEST_CASE("scaled normal applies mean and standard deviation") {
  RngStream a(5);
  RngStream b(5);
  for (int i = 0; i < 100; ++i) {
    REQUIRE(a.normal(2.0, 3.0) == Catch::Approx(2.0 + 3.0 * b.normal()).epsilon(1e-15));
  }
}
