#pragma once

// Closed-form geometry for the "academic" fixture (x1' = 1 - x2^2, x2' = u,
// |u| <= 1, a_lower <= x1 <= a_upper), used as the independent oracle in
// tests. Final time normalised to 0.
//
// Barrier branches (cubic expressions in x2):
//   from (a_lower, +1), u = -1:  x1 = a_lower + (1/3)(1-x2)^2(2+x2), x2 >= 1
//   from (a_lower, -1), u = +1:  x1 = a_lower + (1/3)(1+x2)^2(2-x2), x2 <= -1
//   from (a_upper, -1), u = -1:  x1 = a_upper - (1/3)(1+x2)^2(2-x2)
//   from (a_upper, +1), u = +1:  x1 = a_upper - (1/3)(1-x2)^2(2+x2)
// The upper-face formulas solve the Hamiltonian system until the switching
// function crosses zero (backward time -2, i.e. |x2| <= 1).

#include <cmath>
#include <vector>

namespace academic_exact {

inline double cubic_plus(double x2) { return (1.0 - x2) * (1.0 - x2) * (2.0 + x2) / 3.0; }
inline double cubic_minus(double x2) { return (1.0 + x2) * (1.0 + x2) * (2.0 - x2) / 3.0; }

inline double branch_lower_pos(double a_lower, double x2) { return a_lower + cubic_plus(x2); }
inline double branch_lower_neg(double a_lower, double x2) { return a_lower + cubic_minus(x2); }
inline double branch_upper_from_minus1(double a_upper, double x2) {
  return a_upper - cubic_minus(x2);
}
inline double branch_upper_from_plus1(double a_upper, double x2) {
  return a_upper - cubic_plus(x2);
}

/// Membership in the admissible set (union of the four closed-form subsets).
inline bool admissible(double a_lower, double a_upper, double x1, double x2) {
  if (x2 <= -1.0) return branch_lower_neg(a_lower, x2) <= x1 && x1 <= a_upper;
  if (x2 <= 0.0) return a_lower <= x1 && x1 <= branch_upper_from_minus1(a_upper, x2);
  if (x2 <= 1.0) return a_lower <= x1 && x1 <= branch_upper_from_plus1(a_upper, x2);
  return branch_lower_pos(a_lower, x2) <= x1 && x1 <= a_upper;
}

/// True when a disk of the given radius around (x1,x2) straddles the region
/// boundary (membership differs somewhere on the ring). Used to exclude
/// boundary-adjacent cells from agreement counts.
inline bool near_boundary(double a_lower, double a_upper, double x1, double x2, double radius) {
  const bool center = admissible(a_lower, a_upper, x1, x2);
  const int k = 32;
  for (int i = 0; i < k; ++i) {
    const double th = 2.0 * M_PI * i / k;
    for (double r : {radius, 0.5 * radius}) {
      if (admissible(a_lower, a_upper, x1 + r * std::cos(th), x2 + r * std::sin(th)) != center)
        return true;
    }
  }
  return false;
}

}  // namespace academic_exact
