#pragma once

#include <vector>

namespace p2pchp {

enum class SignConstraint { NonNegative, NonPositive, Free };

// Euclidean projection of z onto
//   { x : sign constraint holds componentwise, lo <= sum(x) <= hi }.
// Computed by clamping to the orthant and, if the sum constraint is
// violated, bisecting on the scalar shift nu in x(nu) = clamp(z - nu*1),
// whose sum is monotone non-increasing in nu. Requires lo <= hi and,
// for a sign-constrained orthant, that the box admits a feasible point
// (hi >= 0 for NonNegative, lo <= 0 for NonPositive).
std::vector<double> project_sum_box(const std::vector<double>& z, double lo,
                                    double hi, SignConstraint sc);

}  // namespace p2pchp
