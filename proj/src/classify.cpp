#include "obata/classify.hpp"

#include <cmath>
#include <numbers>

#include "obata/errors.hpp"
#include "obata/manifold.hpp"

namespace obata {

Sign sign_of(double v, double tol) {
  if (v > tol) return Sign::positive;
  if (v < -tol) return Sign::negative;
  return Sign::zero;
}

std::string to_string(Sign s) {
  switch (s) {
    case Sign::negative: return "-";
    case Sign::zero: return "0";
    case Sign::positive: return "+";
  }
  return "?";
}

namespace {

struct Row {
  Sign k;
  Sign h;
  const char* type;
  const char* structure;
};

constexpr Row kTable[] = {
    {Sign::positive, Sign::positive, "depends", "constant-curvature"},
    {Sign::positive, Sign::negative, "timelike", "warped-split"},
    {Sign::positive, Sign::zero, "timelike or null", "asymptotically-flat-split"},
    {Sign::negative, Sign::positive, "spacelike", "warped-split"},
    {Sign::negative, Sign::negative, "depends", "constant-curvature"},
    {Sign::negative, Sign::zero, "spacelike or null", "asymptotically-flat-split"},
    {Sign::zero, Sign::positive, "spacelike", "direct-product"},
    {Sign::zero, Sign::negative, "timelike", "direct-product"},
    {Sign::zero, Sign::zero, "null", "null-killing"},
};

}  // namespace

CaseLabel classify_case(double kappa, double h, double tol) {
  CaseLabel c;
  c.kappa_sign = sign_of(kappa, tol);
  c.h_sign = sign_of(h, tol);
  for (const Row& r : kTable) {
    if (r.k == c.kappa_sign && r.h == c.h_sign) {
      c.omega_type = r.type;
      c.structure = r.structure;
    }
  }
  // In a Riemannian metric |grad omega|^2 = h - kappa omega^2 >= 0.
  const double ak = std::fabs(kappa);
  const double ah = std::fabs(h);
  c.riemannian_possible = true;
  if (c.kappa_sign == Sign::positive && c.h_sign == Sign::positive) {
    const double a = std::sqrt(ah / ak);
    c.range_lo = -a;
    c.range_hi = a;
    c.range = "[-sqrt(h/kappa), sqrt(h/kappa)]";
  } else if (c.kappa_sign == Sign::negative && c.h_sign != Sign::positive) {
    const double a = c.h_sign == Sign::zero ? 0.0 : std::sqrt(ah / ak);
    c.range_lo = a;
    c.range_hi = kInf;
    c.range = c.h_sign == Sign::zero ? "[0, inf) or (-inf, 0]" : "[sqrt(|h|/|kappa|), inf) or (-inf, -sqrt(|h|/|kappa|)]";
  } else if (c.kappa_sign != Sign::positive && c.h_sign == Sign::positive) {
    c.range_lo = -kInf;
    c.range_hi = kInf;
    c.range = "(-inf, inf)";
  } else {
    c.riemannian_possible = false;
    c.range = "empty";
    c.range_lo = 0.0;
    c.range_hi = 0.0;
  }
  return c;
}

SolutionFamily solution_family(double kappa, double h, double tol) {
  if (!std::isfinite(kappa) || !std::isfinite(h)) throw DomainError("kappa and h must be finite");
  const Sign ks = sign_of(kappa, tol);
  const Sign hs = sign_of(h, tol);
  const double ak = std::fabs(kappa);
  const double ah = std::fabs(h);
  const double rk = std::sqrt(ak);
  const Expression t = Expression::variable(0, 1);
  auto c = [](double v) { return Expression::constant(v, 1); };
  const Expression arg = c(rk) * t;

  SolutionFamily s;
  s.kappa = kappa;
  s.h = h;
  if (ks == Sign::positive && hs == Sign::positive) {
    s.branch = 1;
    s.f = c(std::sqrt(ah / ak)) * apply(Op::cos, arg);
    s.alpha = c(std::sqrt(ah)) * apply(Op::sin, arg);
    s.t_lo = 0.0;
    s.t_hi = std::numbers::pi / rk;
    s.range_lo = -std::sqrt(ah / ak);
    s.range_hi = std::sqrt(ah / ak);
  } else if (ks == Sign::negative && hs == Sign::positive) {
    s.branch = 2;
    s.f = c(std::sqrt(ah / ak)) * apply(Op::sinh, arg);
    s.alpha = c(std::sqrt(ah)) * apply(Op::cosh, arg);
    s.t_lo = -2.0 / rk;
    s.t_hi = 2.0 / rk;
    s.range_lo = -kInf;
    s.range_hi = kInf;
  } else if (ks == Sign::negative && hs == Sign::negative) {
    s.branch = 3;
    s.f = c(std::sqrt(ah / ak)) * apply(Op::cosh, arg);
    s.alpha = c(std::sqrt(ah)) * apply(Op::sinh, arg);
    s.t_lo = -2.0 / rk;
    s.t_hi = 2.0 / rk;
    s.range_lo = std::sqrt(ah / ak);
    s.range_hi = kInf;
  } else if (ks == Sign::negative && hs == Sign::zero) {
    s.branch = 4;
    s.f = c(1.0 / rk) * apply(Op::exp, arg);
    s.alpha = apply(Op::exp, arg);
    s.t_lo = -2.0 / rk;
    s.t_hi = 2.0 / rk;
    s.range_lo = 0.0;
    s.range_hi = kInf;
  } else if (ks == Sign::zero && hs == Sign::positive) {
    s.branch = 5;
    s.f = c(std::sqrt(ah)) * t;
    s.alpha = c(std::sqrt(ah));
    s.t_lo = -2.0;
    s.t_hi = 2.0;
    s.range_lo = -kInf;
    s.range_hi = kInf;
  } else {
    throw DomainError("no closed-form branch for kappa sign " + to_string(ks) + " and h sign " + to_string(hs));
  }
  return s;
}

double closed_form_f(double kappa, double h, double t) {
  Vec p(1);
  p[0] = t;
  return eval(solution_family(kappa, h).f, p);
}

}  // namespace obata
