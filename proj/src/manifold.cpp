#include "obata/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "obata/errors.hpp"
#include "obata/random.hpp"

namespace obata {

Box Box::unbounded(int n) {
  return Box{std::vector<double>(n, -kInf), std::vector<double>(n, kInf)};
}

Box Box::cube(int n, double half_width) {
  return Box{std::vector<double>(n, -half_width), std::vector<double>(n, half_width)};
}

bool Box::contains(const Vec& p) const {
  if (p.size() != dim()) return false;
  for (int i = 0; i < dim(); ++i) {
    if (!(p[i] > lo[i] && p[i] < hi[i])) return false;
  }
  return true;
}

Box Box::intersect(const Box& other) const {
  if (other.dim() != dim()) throw Error("box dimension mismatch");
  Box out = *this;
  for (int i = 0; i < dim(); ++i) {
    out.lo[i] = std::max(lo[i], other.lo[i]);
    out.hi[i] = std::min(hi[i], other.hi[i]);
  }
  return out;
}

bool Box::finite() const {
  for (int i = 0; i < dim(); ++i) {
    if (!std::isfinite(lo[i]) || !std::isfinite(hi[i])) return false;
  }
  return true;
}

std::string to_string(VectorType t) {
  switch (t) {
    case VectorType::spacelike: return "spacelike";
    case VectorType::timelike: return "timelike";
    case VectorType::null: return "null";
  }
  return "?";
}

double QuadricData::radicand(const Vec& u) const {
  double q = 0.0;
  for (std::size_t j = 0; j < free_axes.size(); ++j) q += eps[free_axes[j]] * u[j] * u[j];
  return (level - q) / eps[solved_axis];
}

MetricModel MetricModel::flat(Signature sig) {
  if (sig.r < 0 || sig.p < 0 || sig.dim() < 1) throw ModelError("invalid flat signature");
  MetricModel m;
  m.kind_ = Kind::flat;
  m.sig_ = sig;
  m.data_ = FlatData{};
  m.domain_ = Box::unbounded(sig.dim());
  return m;
}

MetricModel MetricModel::quadric(Signature ambient, double level, int solved_axis, int branch,
                                 double min_radicand_fraction) {
  const int big_n = ambient.dim();
  if (ambient.r < 0 || ambient.p < 0 || big_n < 2) throw ModelError("quadric ambient must have dimension >= 2");
  if (level == 0.0 || !std::isfinite(level)) throw ModelError("quadric level must be finite and nonzero");
  if (solved_axis < 0 || solved_axis >= big_n) throw ModelError("quadric solved_axis out of range");
  if (branch != 1 && branch != -1) throw ModelError("quadric branch must be +1 or -1");

  QuadricData q;
  q.ambient = ambient;
  q.level = level;
  q.solved_axis = solved_axis;
  q.branch = branch;
  q.min_radicand = min_radicand_fraction * std::fabs(level);
  q.eps.assign(big_n, 1.0);
  for (int i = 0; i < ambient.r; ++i) q.eps[i] = -1.0;
  for (int i = 0; i < big_n; ++i) {
    if (i != solved_axis) q.free_axes.push_back(i);
  }

  const int n = big_n - 1;
  Expression quad = Expression::constant(0.0, n);
  bool first = true;
  for (int j = 0; j < n; ++j) {
    Expression sq = pow(Expression::variable(j, n), Expression::constant(2.0, n));
    Expression term = q.eps[q.free_axes[j]] > 0 ? sq : -sq;
    quad = first ? term : quad + term;
    first = false;
  }
  Expression c = Expression::constant(level, n);
  Expression rad = q.eps[solved_axis] > 0 ? c - quad : quad - c;
  Expression root = apply(Op::sqrt, rad);
  q.solved = branch > 0 ? root : -root;

  Signature sig = ambient;
  if (level > 0) {
    if (ambient.p < 1) throw ModelError("positive level needs a spacelike ambient direction");
    sig.p -= 1;
  } else {
    if (ambient.r < 1) throw ModelError("negative level needs a timelike ambient direction");
    sig.r -= 1;
  }

  MetricModel m;
  m.kind_ = Kind::quadric;
  m.sig_ = sig;
  m.data_ = std::move(q);
  m.domain_ = Box::unbounded(n);
  return m;
}

MetricModel MetricModel::warped(int base_sign, Expression alpha, MetricModel fiber, double t_lo, double t_hi) {
  if (base_sign != 1 && base_sign != -1) throw ModelError("warped base_sign must be +1 or -1");
  if (!alpha.valid() || alpha.dim() != 1) throw ModelError("warping function must be an expression in t only");
  if (!(t_lo < t_hi)) throw ModelError("empty t interval");
  WarpedData w;
  w.base_sign = base_sign;
  w.alpha = std::move(alpha);
  w.t_lo = t_lo;
  w.t_hi = t_hi;
  Signature sig = fiber.signature();
  if (base_sign < 0) {
    sig.r += 1;
  } else {
    sig.p += 1;
  }
  Box domain;
  domain.lo.push_back(t_lo);
  domain.hi.push_back(t_hi);
  for (int i = 0; i < fiber.dim(); ++i) {
    domain.lo.push_back(fiber.domain_box().lo[i]);
    domain.hi.push_back(fiber.domain_box().hi[i]);
  }
  w.fiber = std::make_shared<const MetricModel>(std::move(fiber));

  MetricModel m;
  m.kind_ = Kind::warped;
  m.sig_ = sig;
  m.data_ = std::move(w);
  m.domain_ = std::move(domain);
  return m;
}

MetricModel MetricModel::custom(Signature sig, const std::vector<std::vector<Expression>>& entries) {
  const int n = sig.dim();
  if (sig.r < 0 || sig.p < 0 || n < 1) throw ModelError("invalid custom signature");
  if (static_cast<int>(entries.size()) != n) throw ModelError("custom entries must be an n x n matrix");
  CustomData c;
  c.entries.resize(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(entries[i].size()) != n) throw ModelError("custom entries must be an n x n matrix");
    for (int j = 0; j < n; ++j) {
      if (!entries[i][j].valid() || entries[i][j].dim() != n) {
        throw ModelError("custom entry dimension does not match the model");
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      c.entries[i * n + j] = entries[i][j];
      c.entries[j * n + i] = entries[i][j];
      if (i == j || print(entries[i][j]) == print(entries[j][i])) continue;
      for (std::uint64_t k = 0; k < 16; ++k) {
        Rng rng = Rng::stream(991, k);
        Vec p(n);
        for (int a = 0; a < n; ++a) p[a] = rng.uniform(-2.0, 2.0);
        double a_ij = 0.0;
        double a_ji = 0.0;
        try {
          a_ij = eval(entries[i][j], p);
          a_ji = eval(entries[j][i], p);
        } catch (const DomainError&) {
          continue;
        }
        if (std::fabs(a_ij - a_ji) > 1e-12 * (1.0 + std::fabs(a_ij))) {
          throw ModelError("custom metric entries (" + std::to_string(i) + "," + std::to_string(j) +
                           ") and (" + std::to_string(j) + "," + std::to_string(i) + ") differ");
        }
      }
    }
  }
  MetricModel m;
  m.kind_ = Kind::custom;
  m.sig_ = sig;
  m.data_ = std::move(c);
  m.domain_ = Box::unbounded(n);
  return m;
}

MetricModel MetricModel::with_domain(Box box) const {
  if (box.dim() != dim()) throw ModelError("domain box dimension mismatch");
  MetricModel m = *this;
  m.domain_ = domain_.intersect(box);
  if (kind_ == Kind::warped) {
    auto& w = std::get<WarpedData>(m.data_);
    w.t_lo = m.domain_.lo[0];
    w.t_hi = m.domain_.hi[0];
  }
  return m;
}

MetricModel MetricModel::with_sample_box(Box box) const {
  if (box.dim() != dim()) throw ModelError("sample box dimension mismatch");
  if (!box.finite()) throw ModelError("sample box must be finite");
  MetricModel m = *this;
  m.sample_box_ = std::move(box);
  return m;
}

const QuadricData& MetricModel::quadric_data() const {
  if (kind_ != Kind::quadric) throw Error("model is not a quadric");
  return std::get<QuadricData>(data_);
}

const WarpedData& MetricModel::warped_data() const {
  if (kind_ != Kind::warped) throw Error("model is not a warped product");
  return std::get<WarpedData>(data_);
}

const CustomData& MetricModel::custom_data() const {
  if (kind_ != Kind::custom) throw Error("model is not a custom metric");
  return std::get<CustomData>(data_);
}

bool MetricModel::in_domain(const Vec& p) const {
  if (p.size() != dim() || !p.allFinite()) return false;
  if (!domain_.contains(p)) return false;
  switch (kind_) {
    case Kind::flat:
    case Kind::custom:
      return true;
    case Kind::quadric: {
      const auto& q = std::get<QuadricData>(data_);
      return q.radicand(p) >= q.min_radicand && q.radicand(p) > 0.0;
    }
    case Kind::warped: {
      const auto& w = std::get<WarpedData>(data_);
      Vec t(1);
      t[0] = p[0];
      double a = 0.0;
      try {
        a = eval(w.alpha, t);
      } catch (const DomainError&) {
        return false;
      }
      if (!(a > 0.0)) return false;
      return w.fiber->in_domain(p.tail(dim() - 1));
    }
  }
  return false;
}

Box MetricModel::sample_box() const {
  if (sample_box_) return *sample_box_;
  if (kind_ == Kind::warped) {
    const auto& w = std::get<WarpedData>(data_);
    Box fb = w.fiber->sample_box();
    Box b;
    b.lo.push_back(std::max(domain_.lo[0], -2.0));
    b.hi.push_back(std::min(domain_.hi[0], 2.0));
    for (int i = 0; i < fb.dim(); ++i) {
      b.lo.push_back(std::max(fb.lo[i], domain_.lo[i + 1]));
      b.hi.push_back(std::min(fb.hi[i], domain_.hi[i + 1]));
    }
    return b;
  }
  return domain_.intersect(Box::cube(dim(), 2.0));
}

Vec MetricModel::sample_point(std::uint64_t seed, std::uint64_t index) const {
  const Box box = sample_box();
  Rng rng = Rng::stream(seed, index);
  Vec p(dim());
  for (int attempt = 0; attempt < 100000; ++attempt) {
    for (int i = 0; i < dim(); ++i) p[i] = rng.uniform(box.lo[i], box.hi[i]);
    if (in_domain(p)) return p;
  }
  throw DomainError("could not draw a sample point inside the chart domain");
}

std::vector<Vec> MetricModel::sample_points(std::size_t count, std::uint64_t seed) const {
  std::vector<Vec> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(sample_point(seed, i));
  return out;
}

MetricJet MetricModel::metric_jet(const Vec& p) const {
  const int n = dim();
  if (p.size() != n) throw Error("point dimension does not match the model");
  MetricJet jet;
  jet.g = Mat::Zero(n, n);
  jet.dg.assign(n, Mat::Zero(n, n));
  switch (kind_) {
    case Kind::flat:
      for (int i = 0; i < sig_.r; ++i) jet.g(i, i) = -1.0;
      for (int i = sig_.r; i < n; ++i) jet.g(i, i) = 1.0;
      break;
    case Kind::quadric: {
      const auto& q = std::get<QuadricData>(data_);
      if (!(q.radicand(p) > 0.0)) throw DomainError("quadric radicand is not positive");
      const Jet2 s = eval_jet2(q.solved, p);
      const double ek = q.eps[q.solved_axis];
      for (int a = 0; a < n; ++a) {
        for (int b = a; b < n; ++b) {
          double v = ek * s.grad[a] * s.grad[b];
          if (a == b) v += q.eps[q.free_axes[a]];
          jet.g(a, b) = v;
          jet.g(b, a) = v;
          for (int c = 0; c < n; ++c) {
            const double d = ek * (s.hess(a, c) * s.grad[b] + s.grad[a] * s.hess(b, c));
            jet.dg[c](a, b) = d;
            jet.dg[c](b, a) = d;
          }
        }
      }
      break;
    }
    case Kind::warped: {
      const auto& w = std::get<WarpedData>(data_);
      Vec t(1);
      t[0] = p[0];
      const Jet2 a = eval_jet2(w.alpha, t);
      if (!(a.value > 0.0)) throw DomainError("warping function is not positive");
      const MetricJet f = w.fiber->metric_jet(p.tail(n - 1));
      const double a2 = a.value * a.value;
      const double da2 = 2.0 * a.value * a.grad[0];
      jet.g(0, 0) = w.base_sign;
      jet.g.bottomRightCorner(n - 1, n - 1) = a2 * f.g;
      jet.dg[0].bottomRightCorner(n - 1, n - 1) = da2 * f.g;
      for (int k = 1; k < n; ++k) jet.dg[k].bottomRightCorner(n - 1, n - 1) = a2 * f.dg[k - 1];
      break;
    }
    case Kind::custom: {
      const auto& c = std::get<CustomData>(data_);
      for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
          const Jet2 e = eval_jet2(c.entries[i * n + j], p);
          jet.g(i, j) = e.value;
          jet.g(j, i) = e.value;
          for (int k = 0; k < n; ++k) {
            jet.dg[k](i, j) = e.grad[k];
            jet.dg[k](j, i) = e.grad[k];
          }
        }
      }
      break;
    }
  }
  return jet;
}

Mat MetricModel::metric(const Vec& p) const { return metric_jet(p).g; }

namespace {
// D g D with D = diag(max_j |g_ij|)^(-1/2). A congruence, so the inertia is
// unchanged, and warped metrics with tiny fiber factors stay well scaled.
Vec balance(const Mat& g) {
  Vec d(g.rows());
  for (int i = 0; i < g.rows(); ++i) {
    const double r = g.row(i).cwiseAbs().maxCoeff();
    if (!(r > 0.0) || !std::isfinite(r)) throw DegenerateError("metric has a zero or non-finite row");
    d[i] = 1.0 / std::sqrt(r);
  }
  return d;
}
}  // namespace

Signature inertia(const Mat& g) {
  const Vec d = balance(g);
  const Mat b = d.asDiagonal() * g * d.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Mat> solver(b, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw DegenerateError("eigenvalue computation failed");
  const Vec& lambda = solver.eigenvalues();
  const double scale = lambda.cwiseAbs().maxCoeff();
  Signature s;
  for (int i = 0; i < lambda.size(); ++i) {
    if (!(std::fabs(lambda[i]) > 1e-12 * scale)) throw DegenerateError("metric is degenerate");
    if (lambda[i] < 0) {
      ++s.r;
    } else {
      ++s.p;
    }
  }
  return s;
}

namespace {
std::string describe_point(const Vec& p) {
  std::string s = "(";
  for (int i = 0; i < p.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(p[i]);
  }
  return s + ")";
}
}  // namespace

Mat metric_at(const MetricModel& m, const Vec& p) {
  if (!m.in_domain(p)) throw DomainError("point " + describe_point(p) + " is outside the chart domain");
  Mat g = m.metric(p);
  if (inertia(g) != m.signature()) {
    throw DegenerateError("metric inertia at " + describe_point(p) + " differs from the declared signature");
  }
  return g;
}

Mat invert_metric(const Mat& g) {
  const Vec d = balance(g);
  Eigen::FullPivLU<Mat> lu(d.asDiagonal() * g * d.asDiagonal());
  if (!lu.isInvertible()) throw DegenerateError("metric is singular");
  Mat inv = d.asDiagonal() * lu.inverse() * d.asDiagonal();
  if (!inv.allFinite()) throw DegenerateError("metric is singular");
  return 0.5 * (inv + inv.transpose());
}

Mat inverse_metric_at(const MetricModel& m, const Vec& p) { return invert_metric(metric_at(m, p)); }

double inner(const Mat& g, const Vec& u, const Vec& v) { return u.dot(g * v); }

double inner_scale(const Mat& g, const Vec& u, const Vec& v) {
  return u.cwiseAbs().dot(g.cwiseAbs() * v.cwiseAbs());
}

VectorType classify_vector(const Mat& g, const Vec& v, double tol) {
  const double n2 = inner(g, v, v);
  const double s = inner_scale(g, v, v);
  if (n2 < -tol * s) return VectorType::timelike;
  if (n2 > tol * s) return VectorType::spacelike;
  return VectorType::null;
}

VectorType classify_vector(const MetricModel& m, const Vec& p, const Vec& v, double tol) {
  return classify_vector(m.metric(p), v, tol);
}

Vec quadric_embed(const MetricModel& m, const Vec& p) {
  const auto& q = m.quadric_data();
  const double rho = q.radicand(p);
  if (rho < 0.0) throw DomainError("quadric radicand is negative at " + describe_point(p));
  Vec x(m.dim() + 1);
  for (int j = 0; j < m.dim(); ++j) x[q.free_axes[j]] = p[j];
  x[q.solved_axis] = q.branch * std::sqrt(rho);
  return x;
}

Vec quadric_pushforward(const MetricModel& m, const Vec& p, const Vec& v) {
  const auto& q = m.quadric_data();
  const Jet2 s = eval_jet2(q.solved, p);
  Vec out(m.dim() + 1);
  for (int j = 0; j < m.dim(); ++j) out[q.free_axes[j]] = v[j];
  out[q.solved_axis] = s.grad.dot(v);
  return out;
}

Vec quadric_chart_point(const MetricModel& m, const Vec& x) {
  const auto& q = m.quadric_data();
  Vec p(m.dim());
  for (int j = 0; j < m.dim(); ++j) p[j] = x[q.free_axes[j]];
  return p;
}

Expression restrict_linear(const MetricModel& m, const std::vector<double>& coeffs) {
  const auto& q = m.quadric_data();
  const int n = m.dim();
  if (static_cast<int>(coeffs.size()) != n + 1) throw ModelError("linear function needs one coefficient per ambient axis");
  std::optional<Expression> sum;
  auto add = [&](double c, const Expression& e) {
    if (c == 0.0) return;
    Expression term = c == 1.0 ? e : (c == -1.0 ? -e : Expression::constant(c, n) * e);
    sum = sum ? *sum + term : term;
  };
  for (int axis = 0; axis <= n; ++axis) {
    if (!std::isfinite(coeffs[axis])) throw ModelError("linear function coefficients must be finite");
    if (axis == q.solved_axis) {
      add(coeffs[axis], q.solved);
    } else {
      const int j = static_cast<int>(std::find(q.free_axes.begin(), q.free_axes.end(), axis) - q.free_axes.begin());
      add(coeffs[axis], Expression::variable(j, n));
    }
  }
  return sum ? *sum : Expression::constant(0.0, n);
}

double ambient_inner(const MetricModel& m, const Vec& a, const Vec& b) {
  const auto& q = m.quadric_data();
  double s = 0.0;
  for (int i = 0; i < a.size(); ++i) s += q.eps[i] * a[i] * b[i];
  return s;
}

void validate_model(const MetricModel& m, std::size_t samples, std::uint64_t seed) {
  if (m.kind() == MetricModel::Kind::warped) {
    const auto& w = m.warped_data();
    validate_model(*w.fiber, samples, seed);
    const Box box = m.sample_box();
    for (int k = 0; k <= 64; ++k) {
      Vec t(1);
      t[0] = box.lo[0] + (box.hi[0] - box.lo[0]) * (0.005 + 0.99 * k / 64.0);
      double a = 0.0;
      try {
        a = eval(w.alpha, t);
      } catch (const DomainError& e) {
        throw ModelError(std::string("warping function undefined on the t interval: ") + e.what());
      }
      if (!(a > 0.0)) throw ModelError("warping function is not positive at t = " + std::to_string(t[0]));
    }
  }
  std::vector<Vec> pts;
  try {
    pts = m.sample_points(samples, seed);
  } catch (const DomainError& e) {
    throw ModelError(std::string("model has no usable sample points: ") + e.what());
  }
  for (const Vec& p : pts) {
    try {
      Signature s = inertia(m.metric(p));
      if (s != m.signature()) {
        throw ModelError("metric inertia (" + std::to_string(s.r) + "," + std::to_string(s.p) + ") at " +
                         describe_point(p) + " differs from the declared signature (" +
                         std::to_string(m.signature().r) + "," + std::to_string(m.signature().p) + ")");
      }
    } catch (const DegenerateError& e) {
      throw ModelError(std::string("degenerate metric at ") + describe_point(p) + ": " + e.what());
    } catch (const DomainError& e) {
      throw ModelError(std::string("metric undefined at ") + describe_point(p) + ": " + e.what());
    }
  }
}

}  // namespace obata
