#include "p2pchp/projection.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace p2pchp {

namespace {

double clamp_sign(double w, SignConstraint sc) {
  switch (sc) {
    case SignConstraint::NonNegative: return std::max(w, 0.0);
    case SignConstraint::NonPositive: return std::min(w, 0.0);
    case SignConstraint::Free: return w;
  }
  return w;
}

double shifted_sum(const std::vector<double>& z, double nu,
                   SignConstraint sc) {
  double s = 0.0;
  for (double zi : z) s += clamp_sign(zi - nu, sc);
  return s;
}

}  // namespace

std::vector<double> project_sum_box(const std::vector<double>& z, double lo,
                                    double hi, SignConstraint sc) {
  if (!(lo <= hi))
    throw std::invalid_argument("project_sum_box: lo > hi");
  if (sc == SignConstraint::NonNegative && hi < 0.0)
    throw std::invalid_argument(
        "project_sum_box: sum <= hi < 0 unreachable on the nonnegative orthant");
  if (sc == SignConstraint::NonPositive && lo > 0.0)
    throw std::invalid_argument(
        "project_sum_box: sum >= lo > 0 unreachable on the nonpositive orthant");
  if (z.empty()) return {};

  std::vector<double> x(z.size());
  auto fill = [&](double nu) {
    for (std::size_t i = 0; i < z.size(); ++i) x[i] = clamp_sign(z[i] - nu, sc);
  };

  const double s0 = shifted_sum(z, 0.0, sc);
  double target;
  if (s0 > hi) {
    target = hi;
  } else if (s0 < lo) {
    target = lo;
  } else {
    fill(0.0);
    return x;
  }

  // sum(x(nu)) is continuous and non-increasing in nu; bracket the root.
  double nlo = 0.0, nhi = 0.0, step = 1.0;
  if (target == hi) {  // need nu > 0
    nhi = step;
    while (shifted_sum(z, nhi, sc) > target) {
      nlo = nhi;
      nhi *= 2.0;
      if (nhi > 1e18) break;
    }
  } else {  // need nu < 0
    nlo = -step;
    while (shifted_sum(z, nlo, sc) < target) {
      nhi = nlo;
      nlo *= 2.0;
      if (nlo < -1e18) break;
    }
  }
  for (int it = 0; it < 128; ++it) {
    const double mid = 0.5 * (nlo + nhi);
    if (shifted_sum(z, mid, sc) > target)
      nlo = mid;
    else
      nhi = mid;
  }
  double nu = 0.5 * (nlo + nhi);

  // Exact correction: with the active set fixed by nu, the optimal shift is
  // the mean surplus over the components still free.
  for (int pass = 0; pass < 8; ++pass) {
    double free_sum = 0.0;
    int free_count = 0;
    for (double zi : z) {
      if (clamp_sign(zi - nu, sc) != 0.0 || sc == SignConstraint::Free) {
        free_sum += zi;
        ++free_count;
      }
    }
    if (free_count == 0) break;
    const double cand = (free_sum - target) / free_count;
    if (cand == nu) break;
    nu = cand;
  }
  if (shifted_sum(z, nu, sc) > hi + 1e-12 || shifted_sum(z, nu, sc) < lo - 1e-12)
    nu = 0.5 * (nlo + nhi);  // correction overshot; keep the bisection value

  fill(nu);
  return x;
}

}  // namespace p2pchp
