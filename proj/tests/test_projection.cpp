#include "doctest.h"

#include "p2pchp/projection.hpp"
#include "support.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

using namespace p2pchp;

namespace {

double sum_of(const std::vector<double>& x) {
  return std::accumulate(x.begin(), x.end(), 0.0);
}

bool feasible(const std::vector<double>& x, double lo, double hi,
              SignConstraint sc, double slack) {
  for (double v : x) {
    if (sc == SignConstraint::NonNegative && v < -slack) return false;
    if (sc == SignConstraint::NonPositive && v > slack) return false;
  }
  const double s = sum_of(x);
  return s >= lo - slack && s <= hi + slack;
}

double dist2(const std::vector<double>& x, const std::vector<double>& z) {
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) d += (x[i] - z[i]) * (x[i] - z[i]);
  return d;
}

// Exhaustive grid minimizer of ||x - z||^2 over the same feasible set.
std::vector<double> brute_project(const std::vector<double>& z, double lo,
                                  double hi, SignConstraint sc, double h,
                                  double radius) {
  const int dim = static_cast<int>(z.size());
  const int steps = static_cast<int>(std::round(2.0 * radius / h));
  std::vector<int> idx(dim, 0);
  std::vector<double> best;
  double best_d = 0.0;
  std::vector<double> x(dim);
  for (;;) {
    for (int d = 0; d < dim; ++d) x[d] = -radius + idx[d] * h;
    if (feasible(x, lo, hi, sc, 1e-12)) {
      const double d2 = dist2(x, z);
      if (best.empty() || d2 < best_d) {
        best = x;
        best_d = d2;
      }
    }
    int d = 0;
    while (d < dim && ++idx[d] > steps) idx[d++] = 0;
    if (d == dim) break;
  }
  REQUIRE(!best.empty());
  return best;
}

}  // namespace

TEST_CASE("single-coordinate buyer saturates its cap") {
  const auto x = project_sum_box({0.3}, 0.0, 0.254, SignConstraint::NonNegative);
  REQUIRE(x.size() == 1);
  CHECK(x[0] == doctest::Approx(0.254).epsilon(1e-9));
}

TEST_CASE("equal split when two equal coordinates exceed the cap") {
  const auto x =
      project_sum_box({0.2, 0.2}, 0.0, 0.254, SignConstraint::NonNegative);
  REQUIRE(x.size() == 2);
  CHECK(x[0] == doctest::Approx(0.127).epsilon(1e-9));
  CHECK(x[1] == doctest::Approx(0.127).epsilon(1e-9));
  CHECK(sum_of(x) == doctest::Approx(0.254).epsilon(1e-9));
}

TEST_CASE("interior points are returned unchanged") {
  const std::vector<double> z = {0.05, 0.1, 0.02};
  const auto x = project_sum_box(z, 0.0, 0.5, SignConstraint::NonNegative);
  CHECK(x == z);
}

TEST_CASE("wrong-sign coordinates are clamped to zero") {
  const auto x =
      project_sum_box({-0.4, 0.1}, 0.0, 0.5, SignConstraint::NonNegative);
  CHECK(x[0] == 0.0);
  CHECK(x[1] == doctest::Approx(0.1).epsilon(1e-12));

  const auto y =
      project_sum_box({0.4, -0.1}, -0.5, 0.0, SignConstraint::NonPositive);
  CHECK(y[0] == 0.0);
  CHECK(y[1] == doctest::Approx(-0.1).epsilon(1e-12));
}

TEST_CASE("seller mirror of the equal-split case") {
  const auto x =
      project_sum_box({-0.2, -0.2}, -0.254, 0.0, SignConstraint::NonPositive);
  CHECK(x[0] == doctest::Approx(-0.127).epsilon(1e-9));
  CHECK(x[1] == doctest::Approx(-0.127).epsilon(1e-9));
}

TEST_CASE("free sign with a two-sided window shifts the whole vector") {
  // Projection of (1, 1) onto sum <= 1 without sign constraints moves both
  // coordinates by the same amount: (0.5, 0.5).
  const auto x = project_sum_box({1.0, 1.0}, -1.0, 1.0, SignConstraint::Free);
  CHECK(x[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(x[1] == doctest::Approx(0.5).epsilon(1e-9));
  // And raising the floor forces the sum up.
  const auto y = project_sum_box({0.0, 0.0}, 1.0, 2.0, SignConstraint::Free);
  CHECK(sum_of(y) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(y[0] == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("empty input stays empty") {
  CHECK(project_sum_box({}, 0.0, 1.0, SignConstraint::NonNegative).empty());
}

TEST_CASE("infeasible descriptions are rejected") {
  CHECK_THROWS_AS(project_sum_box({0.1}, 1.0, 0.0, SignConstraint::Free),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      project_sum_box({0.1}, -2.0, -1.0, SignConstraint::NonNegative),
      std::invalid_argument);
  CHECK_THROWS_AS(
      project_sum_box({0.1}, 1.0, 2.0, SignConstraint::NonPositive),
      std::invalid_argument);
}

TEST_CASE("projection is idempotent") {
  testsup::Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const int dim = rng.uniform_int(1, 5);
    std::vector<double> z(dim);
    for (double& v : z) v = rng.uniform(-1.0, 1.0);
    const double hi = rng.uniform(0.0, 0.8);
    const auto x = project_sum_box(z, 0.0, hi, SignConstraint::NonNegative);
    const auto xx = project_sum_box(x, 0.0, hi, SignConstraint::NonNegative);
    CHECK(testsup::max_abs_diff(x, xx) < 1e-9);
    CHECK(feasible(x, 0.0, hi, SignConstraint::NonNegative, 1e-9));
  }
}

TEST_CASE("projection matches an exhaustive grid search") {
  testsup::Rng rng(4242);
  const double h = 0.02;
  for (int trial = 0; trial < 40; ++trial) {
    const int dim = rng.uniform_int(1, 3);
    const SignConstraint sc = trial % 3 == 0   ? SignConstraint::Free
                              : trial % 3 == 1 ? SignConstraint::NonNegative
                                               : SignConstraint::NonPositive;
    // Grid-aligned bounds so the brute force sees exact boundary points.
    double lo, hi;
    if (sc == SignConstraint::NonNegative) {
      lo = 0.0;
      hi = h * rng.uniform_int(5, 30);
    } else if (sc == SignConstraint::NonPositive) {
      hi = 0.0;
      lo = -h * rng.uniform_int(5, 30);
    } else {
      lo = -h * rng.uniform_int(0, 20);
      hi = h * rng.uniform_int(0, 20);
    }
    std::vector<double> z(dim);
    for (double& v : z) v = rng.uniform(-0.9, 0.9);

    const auto x = project_sum_box(z, lo, hi, sc);
    const auto bf = brute_project(z, lo, hi, sc, h, 1.0);
    CHECK(feasible(x, lo, hi, sc, 1e-9));
    // The grid result cannot beat the true projection by more than the
    // resolution allows, and componentwise they agree to ~2h.
    CHECK(dist2(x, z) <= dist2(bf, z) + 1e-9);
    CHECK(testsup::max_abs_diff(x, bf) <= 2.0 * h + 1e-9);
  }
}
