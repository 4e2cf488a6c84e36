#include "obata/instances.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "obata/errors.hpp"
#include "obata/geodesic.hpp"
#include "obata/random.hpp"

namespace obata {

namespace {

Expression cst(double v, int n) { return Expression::constant(v, n); }

Expression t_var() { return Expression::variable(0, 1); }

void require(bool ok, const std::string& msg) {
  if (!ok) throw ModelError(msg);
}

constexpr double kSignTol = 1e-12;

void check_fiber_curvature(const MetricModel& fiber, double target, const std::string& tag) {
  require(fiber.dim() >= 2, tag + " needs a fiber of dimension >= 2");
  const std::vector<Vec> pts = fiber.sample_points(8, 11);
  std::size_t checked = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec& q = pts[i];
    double k = 0.0;
    try {
      if (fiber.dim() == 2) {
        k = gaussian_curvature(fiber, q);
      } else {
        Rng rng = Rng::stream(13, i);
        Vec x(fiber.dim());
        Vec y(fiber.dim());
        for (int a = 0; a < fiber.dim(); ++a) {
          x[a] = rng.normal();
          y[a] = rng.normal();
        }
        k = sectional(fiber, q, x, y);
      }
    } catch (const DomainError&) {
      continue;
    } catch (const DegenerateError&) {
      continue;
    }
    ++checked;
    if (std::fabs(k - target) > 1e-4 * std::max(1.0, std::fabs(target))) {
      throw ModelError(tag + " needs a fiber of constant curvature " + std::to_string(target) +
                       ", found " + std::to_string(k));
    }
  }
  require(checked > 0, tag + ": could not evaluate the fiber curvature");
}

}  // namespace

const std::vector<std::string>& instance_tags() {
  static const std::vector<std::string> tags = {"thm4.1a", "thm4.1b", "thm4.2",     "thm4.3",
                                                "thm4.5i", "thm4.5ii", "nullkilling"};
  return tags;
}

MetricModel gaussian_bump_fiber(double amplitude) {
  const Expression f = parse("1 + " + std::to_string(amplitude) + " * exp(-(x0^2 + x1^2))", 2);
  const Expression zero = cst(0.0, 2);
  return MetricModel::custom(Signature{0, 2}, {{f, zero}, {zero, f}});
}

MetricModel default_fiber(const std::string& tag, double kappa, double h) {
  if (tag == "thm4.1a") return MetricModel::quadric(Signature{1, 2}, 1.0 / (kappa * h), 2, 1);
  if (tag == "thm4.1b") return MetricModel::quadric(Signature{1, 2}, -1.0 / (kappa * h), 0, 1);
  if (tag == "thm4.5i") return MetricModel::flat(Signature{1, 1});
  return MetricModel::flat(Signature{0, 2});
}

InstanceBundle build_instance(const std::string& tag, const InstanceOptions& opt) {
  const double k = opt.kappa;
  const double h = opt.h;
  require(std::isfinite(k) && std::isfinite(h), "kappa and h must be finite");
  const Sign ks = sign_of(k, kSignTol);
  const Sign hs = sign_of(h, kSignTol);
  InstanceBundle b{tag, MetricModel::flat(Signature{0, 1}), {}, h, {}, {}, false};

  if (tag == "nullkilling") {
    require(ks == Sign::zero && hs == Sign::zero, "nullkilling needs kappa = 0 and h = 0");
    const int n = 3;
    const Expression a = parse("sin(x0)", n);
    const Expression zero = cst(0.0, n);
    const Expression one = cst(1.0, n);
    b.model = MetricModel::custom(Signature{1, 2}, {{a, one, zero}, {one, zero, zero}, {zero, zero, one}});
    b.field = ScalarField{Expression::variable(0, n), 0.0};
    b.expected_h = 0.0;
    b.killing = {zero, one, zero};
  } else {
    const auto& tags = instance_tags();
    require(std::find(tags.begin(), tags.end(), tag) != tags.end(), "unknown instance case '" + tag + "'");
    const MetricModel fiber = opt.fiber ? *opt.fiber : default_fiber(tag, k, h);
    require(fiber.dim() >= 1, "fiber must have dimension >= 1");
    const int n = fiber.dim() + 1;
    const double rk = std::sqrt(std::fabs(k));
    const Expression arg = cst(rk, 1) * t_var();
    int eps = 1;
    Expression alpha;
    Expression omega;
    double t_lo = -kInf;
    double t_hi = kInf;
    if (tag == "thm4.1a") {
      require(ks == Sign::positive && hs == Sign::positive, "thm4.1a needs kappa > 0 and h > 0");
      check_fiber_curvature(fiber, k * h, tag);
      alpha = cst(std::sqrt(h), 1) * apply(Op::sin, arg);
      omega = cst(std::sqrt(h / k), 1) * apply(Op::cos, arg);
      t_lo = 0.0;
      t_hi = std::numbers::pi / rk;
    } else if (tag == "thm4.1b") {
      require(ks == Sign::positive && hs == Sign::positive, "thm4.1b needs kappa > 0 and h > 0");
      check_fiber_curvature(fiber, -k * h, tag);
      eps = -1;
      alpha = cst(std::sqrt(h), 1) * apply(Op::sinh, arg);
      omega = cst(std::sqrt(h / k), 1) * apply(Op::cosh, arg);
      t_lo = 0.0;
    } else if (tag == "thm4.2") {
      require(ks == Sign::positive && hs == Sign::negative, "thm4.2 needs kappa > 0 and h < 0");
      eps = -1;
      alpha = cst(std::sqrt(-h), 1) * apply(Op::cosh, arg);
      omega = cst(std::sqrt(-h / k), 1) * apply(Op::sinh, arg);
    } else if (tag == "thm4.3") {
      require(ks == Sign::positive && hs == Sign::zero, "thm4.3 needs kappa > 0 and h = 0");
      require(opt.half == 1 || opt.half == -1, "thm4.3 half must be +1 or -1");
      eps = -1;
      alpha = apply(Op::exp, arg);
      omega = cst(opt.half / rk, 1) * apply(Op::exp, arg);
    } else if (tag == "thm4.5i") {
      require(ks == Sign::zero && hs == Sign::positive, "thm4.5i needs kappa = 0 and h > 0");
      alpha = cst(std::sqrt(h), 1);
      omega = cst(std::sqrt(h), 1) * t_var();
    } else {
      require(ks == Sign::zero && hs == Sign::negative, "thm4.5ii needs kappa = 0 and h < 0");
      eps = -1;
      alpha = cst(std::sqrt(-h), 1);
      omega = cst(std::sqrt(-h), 1) * t_var();
    }
    b.model = MetricModel::warped(eps, alpha, fiber, t_lo, t_hi);
    b.field = ScalarField{omega.with_dim(n), k};
    b.expected_h = hs == Sign::zero ? 0.0 : h;
  }
  if (b.model.kind() == MetricModel::Kind::custom) b.field.kappa = k;
  validate_model(b.model);
  b.report = obata_verify(b.model, b.field, opt.samples, opt.seed);
  b.verified = b.report.max_residual <= 1e-8 && std::fabs(b.report.h_mean - b.expected_h) <= 1e-7 &&
               b.report.h_spread <= 1e-7;
  return b;
}

double killing_check(const MetricModel& m, const std::vector<Expression>& field, std::size_t samples,
                     std::uint64_t seed, Execution exec) {
  const int n = m.dim();
  if (static_cast<int>(field.size()) != n) throw ModelError("vector field dimension does not match the model");
  for (const auto& z : field) {
    if (!z.valid() || z.dim() != n) throw ModelError("vector field component dimension does not match the model");
  }
  std::vector<double> worst(samples, 0.0);
  for_each_index(samples, exec, [&](std::size_t s) {
    const Vec p = m.sample_point(seed, s);
    try {
      const MetricJet jet = m.metric_jet(p);
      Vec z(n);
      Mat dz(n, n);  // dz(k, i) = d_i Z^k
      for (int k = 0; k < n; ++k) {
        const Jet2 j = eval_jet2(field[k], p);
        z[k] = j.value;
        dz.row(k) = j.grad.transpose();
      }
      Mat lie = Mat::Zero(n, n);
      for (int k = 0; k < n; ++k) lie += z[k] * jet.dg[k];
      lie += dz.transpose() * jet.g + jet.g * dz;
      worst[s] = lie.cwiseAbs().maxCoeff();
    } catch (Error& e) {
      e.set_point(std::vector<double>(p.data(), p.data() + n));
      throw;
    }
  });
  return *std::max_element(worst.begin(), worst.end());
}

TotallyGeodesicReport totally_geodesic_check(const MetricModel& m, const ScalarField& f, std::size_t samples,
                                             double s_len, std::uint64_t seed, Execution exec) {
  const int n = m.dim();
  struct Slot {
    bool found = false;
    double deviation = 0.0;
    double reached = 0.0;
  };
  std::vector<Slot> slots(samples);
  GeodesicOptions gopt;
  for_each_index(samples, exec, [&](std::size_t i) {
    for (std::uint64_t attempt = 0; attempt < 64; ++attempt) {
      const std::uint64_t idx = i * 64 + attempt;
      Vec p = m.sample_point(seed, idx);
      bool ok = false;
      for (int it = 0; it < 100; ++it) {
        const Jet2 w = eval_jet2(f.omega, p);
        if (std::fabs(w.value) <= 1e-15) {
          ok = true;
          break;
        }
        const double gg = w.grad.squaredNorm();
        if (!(gg > 0.0)) break;
        p -= (w.value / gg) * w.grad;
        if (!m.in_domain(p)) break;
      }
      if (!ok || !m.in_domain(p)) continue;
      const Jet2 w = eval_jet2(f.omega, p);
      const Mat g = metric_at(m, p);
      Rng rng = Rng::stream(seed ^ 0x27d4eb2fULL, idx);
      Vec v(n);
      for (int a = 0; a < n; ++a) v[a] = rng.normal();
      v -= (w.grad.dot(v) / w.grad.squaredNorm()) * w.grad;
      const double nv = inner(g, v, v);
      if (classify_vector(g, v, 1e-9) == VectorType::null) {
        v /= v.norm();
      } else {
        v /= std::sqrt(std::fabs(nv));
      }
      const GeodesicTrajectory tr = integrate(m, GeodesicState{p, v, 0.0}, s_len, gopt);
      double dev = 0.0;
      for (const auto& st : tr.samples) {
        if (!m.in_domain(st.x)) continue;
        dev = std::max(dev, std::fabs(eval(f.omega, st.x)));
      }
      slots[i] = Slot{true, dev, tr.s_end};
      return;
    }
  });
  TotallyGeodesicReport r;
  r.min_reached_s = s_len;
  for (const Slot& s : slots) {
    if (!s.found) continue;
    ++r.geodesics;
    r.max_deviation = std::max(r.max_deviation, s.deviation);
    r.min_reached_s = std::min(r.min_reached_s, s.reached);
  }
  if (r.geodesics == 0) throw DomainError("no zero-level points found in the chart domain");
  return r;
}

namespace {

double fiber_curvature(const MetricModel& fiber, const Vec& q) {
  if (fiber.dim() == 2) return gaussian_curvature(fiber, q);
  Vec x = Vec::Zero(fiber.dim());
  Vec y = Vec::Zero(fiber.dim());
  x[0] = 1.0;
  y[1] = 1.0;
  return sectional(fiber, q, x, y);
}

}  // namespace

DecayReport asymptotic_flatness_probe(const MetricModel& fiber, double kappa, const std::vector<double>& sigma_grid,
                                      double fit_from, int directions, double t_min, Execution exec) {
  if (fiber.dim() < 2) throw ModelError("fiber must have dimension >= 2");
  if (sigma_grid.empty()) throw ModelError("empty sigma grid");
  if (!(kappa > 0.0)) throw ModelError("kappa must be positive");
  const int nf = fiber.dim();
  const double sigma_max = *std::max_element(sigma_grid.begin(), sigma_grid.end());
  const Vec origin = Vec::Zero(nf);
  if (!fiber.in_domain(origin)) throw DomainError("fiber origin is outside its chart domain");
  const Mat g0 = metric_at(fiber, origin);

  std::vector<std::vector<double>> table(static_cast<std::size_t>(directions));
  GeodesicOptions gopt;
  gopt.sample_ds = 0.01;
  for_each_index(static_cast<std::size_t>(directions), exec, [&](std::size_t d) {
    const double th = 2.0 * std::numbers::pi * static_cast<double>(d) / directions;
    Vec v = Vec::Zero(nf);
    v[0] = std::cos(th);
    v[1] = std::sin(th);
    v /= std::sqrt(std::fabs(inner(g0, v, v)));
    const GeodesicTrajectory tr = integrate(fiber, GeodesicState{origin, v, 0.0}, sigma_max + 0.05, gopt);
    if (tr.termination != Termination::budget_reached) {
      throw DomainError("probe geodesic left the fiber domain at s = " + std::to_string(tr.s_end));
    }
    auto& row = table[d];
    for (double sg : sigma_grid) {
      const auto it = std::min_element(tr.samples.begin(), tr.samples.end(), [&](const auto& a, const auto& b) {
        return std::fabs(a.s - sg) < std::fabs(b.s - sg);
      });
      row.push_back(std::fabs(fiber_curvature(fiber, it->x)));
    }
  });

  DecayReport r;
  r.fit_from = fit_from;
  r.sigma = sigma_grid;
  r.max_curvature.assign(sigma_grid.size(), 0.0);
  for (const auto& row : table) {
    for (std::size_t k = 0; k < row.size(); ++k) r.max_curvature[k] = std::max(r.max_curvature[k], row[k]);
  }
  // Monotone envelope from the right, then least squares in log-log.
  std::vector<std::pair<double, double>> env;
  double run = 0.0;
  std::vector<std::size_t> order(sigma_grid.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sigma_grid[a] > sigma_grid[b]; });
  for (std::size_t k : order) {
    run = std::max(run, r.max_curvature[k]);
    if (sigma_grid[k] >= fit_from && run > 0.0) env.emplace_back(std::log(sigma_grid[k]), std::log(run));
  }
  if (env.size() >= 2) {
    double mx = 0.0, my = 0.0;
    for (const auto& [x, y] : env) {
      mx += x;
      my += y;
    }
    mx /= static_cast<double>(env.size());
    my /= static_cast<double>(env.size());
    double sxy = 0.0, sxx = 0.0;
    for (const auto& [x, y] : env) {
      sxy += (x - mx) * (y - my);
      sxx += (x - mx) * (x - mx);
    }
    r.envelope_exponent = sxy / sxx;
  } else {
    r.envelope_exponent = -kInf;
  }

  // Total space: -dt^2 + exp(2 sqrt(kappa) t) g_fiber, timelike geodesic heading to t = -inf.
  const double rk = std::sqrt(kappa);
  const MetricModel total = MetricModel::warped(-1, apply(Op::exp, Expression::constant(rk, 1) * Expression::variable(0, 1)), fiber);
  const double tdot0 = -5.0 / 3.0;
  Vec u = Vec::Zero(nf);
  u[0] = 1.0;
  u[1] = 1.0;
  u *= std::sqrt((tdot0 * tdot0 - 1.0) / inner(g0, u, u));
  Vec x0 = Vec::Zero(nf + 1);
  Vec v0(nf + 1);
  v0 << tdot0, u;
  const GeodesicTrajectory tr = integrate(total, GeodesicState{x0, v0, 0.0}, 10.0, gopt);
  Vec e1 = Vec::Zero(nf + 1);
  Vec e2 = Vec::Zero(nf + 1);
  e1[1] = 1.0;
  e2[2] = 1.0;
  double next_t = -1.0;
  for (const auto& st : tr.samples) {
    if (next_t < t_min - 1e-12) break;
    if (st.x[0] > next_t) continue;
    const Vec q = st.x.tail(nf);
    const double a = std::exp(rk * st.x[0]);
    const double kf = fiber.kind() == MetricModel::Kind::flat ? 0.0 : fiber_curvature(fiber, q);
    r.t.push_back(st.x[0]);
    r.total_curvature.push_back((kf + kappa * a * a) / (a * a));
    next_t -= 1.0;
  }
  if (r.t.empty() || r.t.back() > t_min + 0.5) {
    throw DomainError("timelike probe geodesic did not reach t = " + std::to_string(t_min));
  }
  r.limit_error = std::fabs(r.total_curvature.back() - kappa);
  return r;
}

}  // namespace obata
