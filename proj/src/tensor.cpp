#include "obata/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "obata/errors.hpp"

namespace obata {

Christoffel christoffel(const MetricJet& jet, const Mat& ginv) {
  const int n = static_cast<int>(jet.g.rows());
  Christoffel gamma(n, Mat::Zero(n, n));
  std::vector<Mat> t(n, Mat::Zero(n, n));
  for (int l = 0; l < n; ++l) {
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        const double v = jet.dg[i](j, l) + jet.dg[j](i, l) - jet.dg[l](i, j);
        t[l](i, j) = v;
      }
    }
  }
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        double s = 0.0;
        for (int l = 0; l < n; ++l) s += ginv(k, l) * t[l](i, j);
        gamma[k](i, j) = 0.5 * s;
        gamma[k](j, i) = 0.5 * s;
      }
    }
  }
  return gamma;
}

namespace {

void require_domain(const MetricModel& m, const Vec& p) {
  if (!m.in_domain(p)) {
    DomainError e("point is outside the chart domain");
    e.set_point(std::vector<double>(p.data(), p.data() + p.size()));
    throw e;
  }
}

Christoffel christoffel_unchecked(const MetricModel& m, const Vec& p) {
  const MetricJet jet = m.metric_jet(p);
  return christoffel(jet, invert_metric(jet.g));
}

}  // namespace

Christoffel christoffel(const MetricModel& m, const Vec& p) {
  require_domain(m, p);
  return christoffel_unchecked(m, p);
}

FieldEval evaluate_field(const MetricModel& m, const Vec& p, const ScalarField& f) {
  require_domain(m, p);
  const int n = m.dim();
  if (f.omega.dim() != n) throw ModelError("field dimension does not match the model");
  const MetricJet jet = m.metric_jet(p);
  if (inertia(jet.g) != m.signature()) throw DegenerateError("metric inertia differs from the declared signature");
  const Mat ginv = invert_metric(jet.g);
  const Christoffel gamma = christoffel(jet, ginv);
  const Jet2 w = eval_jet2(f.omega, p);

  FieldEval out;
  out.omega = w.value;
  out.domega = w.grad;
  out.grad = ginv * w.grad;
  out.g = jet.g;
  out.hessian = w.hess;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      double c = 0.0;
      for (int k = 0; k < n; ++k) c += gamma[k](i, j) * w.grad[k];
      out.hessian(i, j) = w.hess(i, j) - c;
      out.hessian(j, i) = out.hessian(i, j);
    }
  }
  out.norm2 = out.grad.dot(w.grad);
  out.residual = (out.hessian + f.kappa * w.value * jet.g).cwiseAbs().maxCoeff();
  out.first_integral = out.norm2 + f.kappa * w.value * w.value;
  return out;
}

Vec gradient(const MetricModel& m, const Vec& p, const ScalarField& f) { return evaluate_field(m, p, f).grad; }

Mat hessian(const MetricModel& m, const Vec& p, const ScalarField& f) { return evaluate_field(m, p, f).hessian; }

double obata_residual(const MetricModel& m, const Vec& p, const ScalarField& f) {
  return evaluate_field(m, p, f).residual;
}

double first_integral(const MetricModel& m, const Vec& p, const ScalarField& f) {
  return evaluate_field(m, p, f).first_integral;
}

double RiemannTensor::max_abs() const {
  double s = 0.0;
  for (double v : data_) s = std::max(s, std::fabs(v));
  return s;
}

namespace {

// d_c Gamma by the 4th-order central stencil, halving the step from
// 1e-4 (1 + |x_c|) until two successive estimates agree. Near a chart edge
// the metric varies on a short length scale and the first step is too coarse.
std::vector<Mat> christoffel_derivative(const MetricModel& m, const Vec& p, int c) {
  const int n = m.dim();
  double h = 1e-4 * (1.0 + std::fabs(p[c]));
  std::vector<Mat> prev;
  std::vector<Mat> best;
  double best_diff = kInf;
  for (int halving = 0; halving < 10; ++halving, h *= 0.5) {
    Vec q[4] = {p, p, p, p};
    q[0][c] += h;
    q[1][c] -= h;
    q[2][c] += 2 * h;
    q[3][c] -= 2 * h;
    bool inside = true;
    for (const Vec& x : q) inside = inside && m.in_domain(x);
    if (!inside) {
      prev.clear();
      continue;
    }
    const Christoffel g1 = christoffel_unchecked(m, q[0]);
    const Christoffel gm1 = christoffel_unchecked(m, q[1]);
    const Christoffel g2 = christoffel_unchecked(m, q[2]);
    const Christoffel gm2 = christoffel_unchecked(m, q[3]);
    std::vector<Mat> cur(n);
    double scale = 0.0;
    for (int a = 0; a < n; ++a) {
      cur[a] = (8.0 * (g1[a] - gm1[a]) - (g2[a] - gm2[a])) / (12.0 * h);
      scale = std::max(scale, cur[a].cwiseAbs().maxCoeff());
    }
    if (!prev.empty()) {
      double diff = 0.0;
      for (int a = 0; a < n; ++a) diff = std::max(diff, (cur[a] - prev[a]).cwiseAbs().maxCoeff());
      if (diff < best_diff) {
        best_diff = diff;
        best = cur;
      }
      if (diff <= 1e-9 * (1.0 + scale)) return cur;
    }
    prev = std::move(cur);
  }
  if (best.empty()) {
    if (prev.empty()) {
      DomainError e("curvature stencil leaves the chart domain");
      e.set_point(std::vector<double>(p.data(), p.data() + p.size()));
      throw e;
    }
    return prev;
  }
  return best;
}

}  // namespace

RiemannTensor riemann(const MetricModel& m, const Vec& p) {
  require_domain(m, p);
  const int n = m.dim();
  const Christoffel gamma = christoffel_unchecked(m, p);
  std::vector<Christoffel> dgamma(n);
  for (int c = 0; c < n; ++c) dgamma[c] = christoffel_derivative(m, p, c);
  RiemannTensor r(n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      for (int c = 0; c < n; ++c) {
        for (int d = 0; d < n; ++d) {
          double v = dgamma[c][a](d, b) - dgamma[d][a](c, b);
          for (int e = 0; e < n; ++e) v += gamma[a](c, e) * gamma[e](d, b) - gamma[a](d, e) * gamma[e](c, b);
          r(a, b, c, d) = v;
        }
      }
    }
  }
  return r;
}

RiemannTensor lower_first(const RiemannTensor& r, const Mat& g) {
  const int n = r.dim();
  RiemannTensor out(n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      for (int c = 0; c < n; ++c) {
        for (int d = 0; d < n; ++d) {
          double v = 0.0;
          for (int e = 0; e < n; ++e) v += g(a, e) * r(e, b, c, d);
          out(a, b, c, d) = v;
        }
      }
    }
  }
  return out;
}

namespace {

double plane_area(const Mat& g, const Vec& x, const Vec& y) {
  const double xx = inner(g, x, x);
  const double yy = inner(g, y, y);
  const double xy = inner(g, x, y);
  const double area = xx * yy - xy * xy;
  const double scale = inner_scale(g, x, x) * inner_scale(g, y, y);
  if (!(std::fabs(area) > 1e-8 * scale)) throw DegenerateError("plane is degenerate");
  return area;
}

}  // namespace

double sectional(const RiemannTensor& lowered, const Mat& g, const Vec& x, const Vec& y) {
  const double area = plane_area(g, x, y);
  const int n = lowered.dim();
  double num = 0.0;
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      for (int c = 0; c < n; ++c) {
        for (int d = 0; d < n; ++d) num += lowered(a, b, c, d) * x[a] * y[b] * x[c] * y[d];
      }
    }
  }
  return num / area;
}

double sectional(const MetricModel& m, const Vec& p, const Vec& x, const Vec& y) {
  const Mat g = metric_at(m, p);
  plane_area(g, x, y);
  return sectional(lower_first(riemann(m, p), g), g, x, y);
}

double gaussian_curvature(const MetricModel& m, const Vec& p) {
  if (m.dim() != 2) throw Error("gaussian_curvature needs a 2-dimensional model");
  if (m.kind() == MetricModel::Kind::flat) return 0.0;
  if (m.kind() != MetricModel::Kind::custom) {
    Vec x = Vec::Zero(2);
    Vec y = Vec::Zero(2);
    x[0] = 1.0;
    y[1] = 1.0;
    return sectional(m, p, x, y);
  }
  if (!m.in_domain(p)) throw DomainError("point is outside the chart domain");
  const auto& c = m.custom_data();
  const Jet2 je = eval_jet2(c.entries[0], p);
  const Jet2 jf = eval_jet2(c.entries[1], p);
  const Jet2 jg = eval_jet2(c.entries[3], p);
  const double e = je.value, f = jf.value, g = jg.value;
  const double eu = je.grad[0], ev = je.grad[1];
  const double fu = jf.grad[0], fv = jf.grad[1];
  const double gu = jg.grad[0], gv = jg.grad[1];
  const double evv = je.hess(1, 1), fuv = jf.hess(0, 1), guu = jg.hess(0, 0);
  Eigen::Matrix3d a;
  a << -0.5 * evv + fuv - 0.5 * guu, 0.5 * eu, fu - 0.5 * ev, fv - 0.5 * gu, e, f, 0.5 * gv, f, g;
  Eigen::Matrix3d bm;
  bm << 0.0, 0.5 * ev, 0.5 * gu, 0.5 * ev, e, f, 0.5 * gu, f, g;
  const double det = e * g - f * f;
  if (det == 0.0) throw DegenerateError("metric is degenerate");
  return (a.determinant() - bm.determinant()) / (det * det);
}

double warped_sectional(const MetricModel& m, const Vec& p, WarpedPlane which, const Vec& x, const Vec& y) {
  const auto& w = m.warped_data();
  require_domain(m, p);
  const int nf = m.dim() - 1;
  Vec t(1);
  t[0] = p[0];
  const Jet2 a = eval_jet2(w.alpha, t);
  const Vec q = p.tail(nf);
  const Mat gf = w.fiber->metric(q);
  if (which == WarpedPlane::base_fiber) {
    const Vec v = y.tail(nf);
    if (x[0] == 0.0) throw DegenerateError("base direction is zero");
    const double vv = inner(gf, v, v);
    if (!(std::fabs(vv) > 1e-8 * inner_scale(gf, v, v))) throw DegenerateError("plane is degenerate");
    return -a.hess(0, 0) / (w.base_sign * a.value);
  }
  const Vec u = x.tail(nf);
  const Vec v = y.tail(nf);
  plane_area(gf, u, v);
  double kf = 0.0;
  if (w.fiber->kind() != MetricModel::Kind::flat) {
    kf = nf == 2 ? gaussian_curvature(*w.fiber, q) : sectional(*w.fiber, q, u, v);
  }
  const double da = a.grad[0];
  return (kf - w.base_sign * da * da) / (a.value * a.value);
}

namespace {

VectorType field_type(const FieldEval& e, double tol) { return classify_vector(e.g, e.grad, tol); }

FieldEval annotated_eval(const MetricModel& m, const Vec& p, const ScalarField& f) {
  try {
    return evaluate_field(m, p, f);
  } catch (Error& e) {
    if (e.point().empty()) e.set_point(std::vector<double>(p.data(), p.data() + p.size()));
    throw;
  }
}

std::optional<std::pair<Vec, FieldEval>> bisect_null(const MetricModel& m, const ScalarField& f, const Vec& a,
                                                     const Vec& b, double sign_a, double tol) {
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const Vec p = (1.0 - mid) * a + mid * b;
    if (!m.in_domain(p)) return std::nullopt;
    FieldEval e = evaluate_field(m, p, f);
    const VectorType ty = field_type(e, tol);
    if (ty == VectorType::null) return std::make_pair(p, std::move(e));
    if ((e.norm2 > 0) == (sign_a > 0)) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-17) break;
  }
  return std::nullopt;
}

}  // namespace

ObataReport obata_verify(const MetricModel& m, const ScalarField& f, std::size_t samples, std::uint64_t seed,
                         const VerifyOptions& opt) {
  if (samples < 1) throw Error("obata_verify needs at least one sample");
  std::vector<Vec> pts(samples);
  std::vector<FieldEval> evals(samples);
  for_each_index(samples, opt.exec, [&](std::size_t i) {
    pts[i] = m.sample_point(seed, i);
    evals[i] = annotated_eval(m, pts[i], f);
  });

  std::vector<std::size_t> pairs;
  if (opt.refine_null) {
    const std::size_t cap = std::max<std::size_t>(1, samples / 10);
    for (std::size_t i = 0; i + 1 < samples && pairs.size() < cap; ++i) {
      const VectorType a = field_type(evals[i], opt.census_tol);
      const VectorType b = field_type(evals[i + 1], opt.census_tol);
      if (a != VectorType::null && b != VectorType::null && a != b) pairs.push_back(i);
    }
  }
  std::vector<std::optional<std::pair<Vec, FieldEval>>> extra(pairs.size());
  for_each_index(pairs.size(), opt.exec, [&](std::size_t k) {
    const std::size_t i = pairs[k];
    extra[k] = bisect_null(m, f, pts[i], pts[i + 1], evals[i].norm2, opt.census_tol);
  });
  for (auto& e : extra) {
    if (e) {
      pts.push_back(e->first);
      evals.push_back(std::move(e->second));
    }
  }

  ObataReport r;
  r.kappa = f.kappa;
  r.samples = samples;
  r.total = evals.size();
  r.refined = r.total - samples;
  double h_min = evals[0].first_integral;
  double h_max = h_min;
  double h_sum = 0.0;
  r.omega_min = evals[0].omega;
  r.omega_max = evals[0].omega;
  r.worst_point = pts[0];
  r.max_residual = evals[0].residual;
  for (std::size_t i = 0; i < evals.size(); ++i) {
    const FieldEval& e = evals[i];
    if (e.residual > r.max_residual) {
      r.max_residual = e.residual;
      r.worst_point = pts[i];
    }
    h_min = std::min(h_min, e.first_integral);
    h_max = std::max(h_max, e.first_integral);
    h_sum += e.first_integral;
    r.omega_min = std::min(r.omega_min, e.omega);
    r.omega_max = std::max(r.omega_max, e.omega);
    switch (field_type(e, opt.census_tol)) {
      case VectorType::spacelike: ++r.census.spacelike; break;
      case VectorType::timelike: ++r.census.timelike; break;
      case VectorType::null: ++r.census.null; break;
    }
  }
  r.h_mean = h_sum / static_cast<double>(evals.size());
  r.h_spread = h_max - h_min;
  r.label = classify_case(f.kappa, r.h_mean, opt.case_tol);
  return r;
}

double fit_kappa(const MetricModel& m, const Expression& omega, std::size_t samples, std::uint64_t seed) {
  const ScalarField f{omega, 0.0};
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const Vec p = m.sample_point(seed, i);
    const FieldEval e = evaluate_field(m, p, f);
    const Mat wg = e.omega * e.g;
    num += (e.hessian.array() * wg.array()).sum();
    den += wg.squaredNorm();
  }
  if (!(den > 0.0)) throw DegenerateError("omega vanishes at every sample");
  return -num / den;
}

}  // namespace obata
