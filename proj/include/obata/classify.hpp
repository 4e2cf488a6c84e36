#pragma once

// Sign cases of (kappa, h) and the closed-form solutions of
// f'' = -kappa f, (f')^2 + kappa f^2 = h along gradient geodesics.

#include <string>

#include "obata/expr.hpp"

namespace obata {

enum class Sign { negative, zero, positive };

Sign sign_of(double v, double tol);
std::string to_string(Sign s);

struct CaseLabel {
  Sign kappa_sign = Sign::zero;
  Sign h_sign = Sign::zero;
  std::string omega_type;   // row of the type table, verbatim
  std::string structure;    // constant-curvature, warped-split, ...
  bool riemannian_possible = false;
  std::string range;        // closure of omega(M) for complete Riemannian M
  double range_lo = 0.0;
  double range_hi = 0.0;
};

CaseLabel classify_case(double kappa, double h, double tol = 1e-9);

struct SolutionFamily {
  int branch = 0;           // 1..5
  double kappa = 0.0;
  double h = 0.0;
  Expression f;             // in t, dimension 1
  Expression alpha;         // associated warping function
  double t_lo = 0.0;        // natural grid interval
  double t_hi = 0.0;
  double range_lo = 0.0;    // analytic range of f over all admissible t
  double range_hi = 0.0;
};

/// Branch for (kappa, h): cos (kappa > 0, h > 0), sinh (kappa < 0, h > 0),
/// cosh (kappa < 0, h < 0), exp (kappa < 0, h = 0), linear (kappa = 0, h > 0).
/// DomainError for any other sign pair.
SolutionFamily solution_family(double kappa, double h, double tol = 1e-12);
double closed_form_f(double kappa, double h, double t);

}  // namespace obata
