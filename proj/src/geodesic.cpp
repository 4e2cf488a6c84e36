#include "obata/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "obata/errors.hpp"
#include "obata/json_format.hpp"
#include "obata/random.hpp"

namespace obata {

namespace {

Vec acceleration(const MetricModel& m, const Vec& x, const Vec& v) {
  const MetricJet jet = m.metric_jet(x);
  const Christoffel gamma = christoffel(jet, invert_metric(jet.g));
  const int n = m.dim();
  Vec a(n);
  for (int k = 0; k < n; ++k) a[k] = -v.dot(gamma[k] * v);
  return a;
}

void check_options(double s_max, const GeodesicOptions& opt) {
  if (!(s_max > 0.0) || !std::isfinite(s_max)) throw ModelError("s_max must be positive and finite");
  if (!(opt.tol >= 1e-12 && opt.tol <= 1e-4)) throw ModelError("tolerance must lie in [1e-12, 1e-4]");
  if (!(opt.sample_ds > 0.0)) throw ModelError("sample spacing must be positive");
}

}  // namespace

Vec geodesic_rhs(const MetricModel& m, const GeodesicState& state) {
  if (!m.in_domain(state.x)) throw DomainError("geodesic state left the chart domain");
  const int n = m.dim();
  Vec out(2 * n);
  out.head(n) = state.v;
  out.tail(n) = acceleration(m, state.x, state.v);
  return out;
}

GeodesicTrajectory integrate(const MetricModel& m, const GeodesicState& start, double s_max,
                             const GeodesicOptions& opt) {
  check_options(s_max, opt);
  const int n = m.dim();
  if (start.x.size() != n || start.v.size() != n) throw ModelError("initial state dimension does not match the model");
  if (!start.x.allFinite() || !start.v.allFinite()) throw ModelError("initial state must be finite");
  if (!m.in_domain(start.x)) {
    DomainError e("initial point is outside the chart domain");
    e.set_point(std::vector<double>(start.x.data(), start.x.data() + n));
    throw e;
  }
  Vec y0(2 * n);
  y0 << start.x, start.v;
  OdeOptions oo;
  oo.tol = opt.tol;
  oo.sample_dt = opt.sample_ds;
  const OdeResult r = dopri5(
      [&](double, const Vec& y) {
        Vec d(2 * n);
        d.head(n) = y.tail(n);
        d.tail(n) = acceleration(m, y.head(n), y.tail(n));
        return d;
      },
      start.s, y0, start.s + s_max, [&](const Vec& y) { return m.in_domain(y.head(n)); }, oo);

  GeodesicTrajectory tr;
  tr.termination = r.termination;
  tr.s_end = r.s_end;
  for (std::size_t i = 0; i < r.s.size(); ++i) {
    GeodesicState st{r.y[i].head(n), r.y[i].tail(n), r.s[i]};
    double nv = 0.0;
    double scale = 0.0;
    try {
      const Mat g = m.metric(st.x);
      nv = inner(g, st.v, st.v);
      scale = inner_scale(g, st.v, st.v);
    } catch (const DomainError&) {
      nv = std::nan("");
    }
    if (i == 0) tr.norm0 = nv;
    if (std::isfinite(nv)) {
      const double d = std::fabs(nv - tr.norm0);
      tr.norm_drift = std::max(tr.norm_drift, d);
      if (scale > 0.0) tr.norm_drift_rel = std::max(tr.norm_drift_rel, d / scale);
    }
    tr.norms.push_back(nv);
    tr.samples.push_back(std::move(st));
  }
  tr.last = tr.samples.back();
  return tr;
}

GeodesicTrajectory integrate_ambient(const MetricModel& m, const Vec& x0, const Vec& v0, double s_max,
                                     const GeodesicOptions& opt) {
  check_options(s_max, opt);
  const auto& q = m.quadric_data();
  const int big_n = m.dim() + 1;
  if (x0.size() != big_n || v0.size() != big_n) throw ModelError("ambient state dimension does not match the quadric");
  const double c = q.level;
  const double tol_c = 1e-10 * (1.0 + std::fabs(c));
  if (std::fabs(ambient_inner(m, x0, x0) - c) > tol_c) throw ModelError("initial point is not on the quadric");
  if (std::fabs(ambient_inner(m, x0, v0)) > 1e-10 * (1.0 + v0.norm())) {
    throw ModelError("initial velocity is not tangent to the quadric");
  }
  Vec y0(2 * big_n);
  y0 << x0, v0;
  OdeOptions oo;
  oo.tol = opt.tol;
  oo.sample_dt = opt.sample_ds;
  const OdeResult r = dopri5(
      [&](double, const Vec& y) {
        Vec d(2 * big_n);
        const Vec v = y.tail(big_n);
        d.head(big_n) = v;
        d.tail(big_n) = -(ambient_inner(m, v, v) / c) * y.head(big_n);
        return d;
      },
      0.0, y0, s_max, [](const Vec&) { return true; }, oo);

  GeodesicTrajectory tr;
  tr.ambient = true;
  tr.termination = r.termination;
  tr.s_end = r.s_end;
  for (std::size_t i = 0; i < r.s.size(); ++i) {
    GeodesicState st{r.y[i].head(big_n), r.y[i].tail(big_n), r.s[i]};
    const double nv = ambient_inner(m, st.v, st.v);
    if (i == 0) tr.norm0 = nv;
    const double d = std::fabs(nv - tr.norm0);
    tr.norm_drift = std::max(tr.norm_drift, d);
    double scale = 0.0;
    for (int k = 0; k < big_n; ++k) scale += st.v[k] * st.v[k];
    if (scale > 0.0) tr.norm_drift_rel = std::max(tr.norm_drift_rel, d / scale);
    tr.constraint_drift = std::max(tr.constraint_drift, std::fabs(ambient_inner(m, st.x, st.x) - c));
    tr.norms.push_back(nv);
    tr.samples.push_back(std::move(st));
  }
  tr.last = tr.samples.back();
  return tr;
}

double norm_evolution(double alpha0, double x0sq, double c, double alpha) {
  if (!(alpha > 0.0)) throw DomainError("warping function must be positive");
  return alpha0 * alpha0 * (x0sq - c) / (alpha * alpha) + c;
}

double affine_time(double kappa, double t0, double tdot0, double c, double t) {
  if (!(kappa > 0.0)) throw DomainError("kappa must be positive");
  if (!(t < t0)) throw DomainError("t must lie below t0");
  const double rk = std::sqrt(kappa);
  // u = alpha(t) turns the integral into (1/sqrt(kappa)) int du / sqrt(P^2 - C u^2).
  const double a0 = std::exp(rk * t0);
  const double lo = std::isinf(t) ? 0.0 : std::exp(rk * t);
  const double p2 = a0 * a0 * (tdot0 * tdot0 + c);
  const double base = a0 * a0 * tdot0 * tdot0;
  auto radicand = [&](double u, double dist_to_a0) {
    // P^2 - C u^2 = C (a0 - u)(a0 + u) + a0^2 tdot0^2
    return c * dist_to_a0 * (a0 + u) + base;
  };
  if (!(p2 - c * lo * lo > 0.0) || base < 0.0 || (c <= 0.0 && !(p2 > 0.0))) {
    throw DomainError("radicand is not positive on the integration interval");
  }
  if (base == 0.0 && c <= 0.0) throw DomainError("radicand vanishes at the start point");
  boost::math::quadrature::tanh_sinh<double> integrator;
  const double mid = 0.5 * (lo + a0);
  auto f = [&](double u, double uc) {
    const double dist = u > mid ? uc : a0 - u;
    const double r = radicand(u, dist);
    return r > 0.0 ? 1.0 / std::sqrt(r) : 0.0;
  };
  double err = 0.0;
  const double value = integrator.integrate(f, lo, a0, 1e-10, &err);
  return value / rk;
}

std::string to_string(CausalClass c) {
  switch (c) {
    case CausalClass::spacelike: return "spacelike";
    case CausalClass::timelike: return "timelike";
    case CausalClass::lightlike: return "lightlike";
  }
  return "?";
}

double boundary_distance(double kappa, double v_or_tdot0, CausalClass cls) {
  if (!(kappa > 0.0)) throw DomainError("kappa must be positive");
  const double rk = std::sqrt(kappa);
  const double a = std::fabs(v_or_tdot0);
  switch (cls) {
    case CausalClass::lightlike:
      if (!(v_or_tdot0 > 0.0)) throw DomainError("lightlike boundary distance needs v > 0");
      return 1.0 / (rk * v_or_tdot0);
    case CausalClass::timelike:
      if (!(a > 1.0)) throw DomainError("timelike geodesic with |tdot0| <= 1 does not reach the boundary");
      return std::log(std::sqrt((a + 1.0) / (a - 1.0))) / rk;
    case CausalClass::spacelike:
      return std::asin(1.0 / std::sqrt(v_or_tdot0 * v_or_tdot0 + 1.0)) / rk;
  }
  return 0.0;
}

double escape_parameter(double kappa, double tdot0, double fiber_speed2) {
  if (!(kappa > 0.0)) throw DomainError("kappa must be positive");
  const double c = -tdot0 * tdot0 + fiber_speed2;
  const double scale = tdot0 * tdot0 + std::fabs(fiber_speed2);
  if (!(scale > 0.0)) throw DomainError("zero velocity");
  if (std::fabs(c) <= 1e-12 * scale) {
    return tdot0 < 0.0 ? boundary_distance(kappa, -tdot0, CausalClass::lightlike) : kInf;
  }
  const double lambda = std::sqrt(std::fabs(c));
  const double tau = tdot0 / lambda;
  if (c < 0.0) {
    if (tau >= 0.0 || std::fabs(tau) <= 1.0) return kInf;
    return boundary_distance(kappa, tau, CausalClass::timelike) / lambda;
  }
  const double d = boundary_distance(kappa, tau, CausalClass::spacelike);
  if (tau <= 0.0) return d / lambda;
  return (std::numbers::pi / std::sqrt(kappa) - d) / lambda;
}

double attach_first_integral(GeodesicTrajectory& tr, const MetricModel& m, const ScalarField& f) {
  tr.first_integrals.assign(tr.samples.size(), std::nan(""));
  std::optional<double> h0;
  double drift = 0.0;
  for (std::size_t i = 0; i < tr.samples.size(); ++i) {
    Vec p = tr.samples[i].x;
    if (tr.ambient) {
      const auto& q = m.quadric_data();
      if (q.branch * p[q.solved_axis] <= 0.0) continue;
      p = quadric_chart_point(m, p);
    }
    if (!m.in_domain(p)) continue;
    const double h = first_integral(m, p, f);
    tr.first_integrals[i] = h;
    if (!h0) h0 = h;
    drift = std::max(drift, std::fabs(h - *h0));
  }
  if (!h0) throw DomainError("no trajectory sample lies in the chart domain");
  tr.integral_drift = drift;
  return drift;
}

ProbeSummary completeness_probe(const MetricModel& m, const ProbeSpec& spec) {
  const int n = m.dim();
  const std::size_t dirs = spec.both_directions ? 2 : 1;
  struct Slot {
    bool complete = true;
    double drift = 0.0;
    std::vector<EscapeRecord> escapes;
  };
  std::vector<Slot> slots(spec.count);
  GeodesicOptions opt;
  opt.tol = spec.tol;
  opt.sample_ds = std::max(0.01, spec.s_budget / 1000.0);
  for_each_index(spec.count, spec.exec, [&](std::size_t i) {
    const Vec x0 = m.sample_point(spec.seed, i);
    Rng rng = Rng::stream(spec.seed ^ 0x5bd1e995ULL, i);
    Vec v(n);
    for (int k = 0; k < n; ++k) v[k] = rng.normal();
    const Mat g = metric_at(m, x0);
    const double nv = inner(g, v, v);
    const VectorType ty = classify_vector(g, v, 1e-9);
    if (ty == VectorType::null) {
      v /= v.norm();
    } else {
      v /= std::sqrt(std::fabs(nv));
    }
    const CausalClass cls = ty == VectorType::spacelike  ? CausalClass::spacelike
                            : ty == VectorType::timelike ? CausalClass::timelike
                                                         : CausalClass::lightlike;
    Slot& slot = slots[i];
    for (std::size_t d = 0; d < dirs; ++d) {
      const int sign = d == 0 ? 1 : -1;
      const GeodesicTrajectory tr = integrate(m, GeodesicState{x0, sign * v, 0.0}, spec.s_budget, opt);
      if (tr.termination == Termination::budget_reached) {
        slot.drift = std::max(slot.drift, tr.norm_drift);
      } else {
        slot.complete = false;
        slot.escapes.push_back(EscapeRecord{i, sign, x0, sign * v, tr.s_end, cls, tr.termination});
      }
    }
  });
  ProbeSummary out;
  out.geodesics = spec.count;
  for (const Slot& s : slots) {
    if (s.complete) ++out.complete;
    out.max_norm_drift = std::max(out.max_norm_drift, s.drift);
    out.escapes.insert(out.escapes.end(), s.escapes.begin(), s.escapes.end());
  }
  out.complete_fraction = spec.count ? static_cast<double>(out.complete) / static_cast<double>(spec.count) : 1.0;
  return out;
}

void write_trajectory_csv(std::ostream& os, const GeodesicTrajectory& tr) {
  const int n = tr.samples.empty() ? 0 : static_cast<int>(tr.samples.front().x.size());
  const bool with_h = !tr.first_integrals.empty();
  os << "s";
  for (int i = 0; i < n; ++i) os << ",x" << i;
  for (int i = 0; i < n; ++i) os << ",v" << i;
  os << ",norm";
  if (with_h) os << ",first_integral";
  os << '\n';
  for (std::size_t k = 0; k < tr.samples.size(); ++k) {
    const GeodesicState& st = tr.samples[k];
    os << format_number(st.s);
    for (int i = 0; i < n; ++i) os << ',' << format_number(st.x[i]);
    for (int i = 0; i < n; ++i) os << ',' << format_number(st.v[i]);
    os << ',' << format_number(tr.norms[k]);
    if (with_h) os << ',' << format_number(tr.first_integrals[k]);
    os << '\n';
  }
}

}  // namespace obata
