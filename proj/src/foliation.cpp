#include "obata/foliation.hpp"

#include <algorithm>
#include <cmath>

#include "obata/errors.hpp"
#include "obata/random.hpp"

namespace obata {

Mat gradient_derivative(const MetricModel& m, const Vec& p, const Expression& omega) {
  const int n = m.dim();
  const MetricJet jet = m.metric_jet(p);
  const Mat ginv = invert_metric(jet.g);
  const Jet2 w = eval_jet2(omega, p);
  const Vec up = ginv * w.grad;
  Mat d(n, n);
  for (int j = 0; j < n; ++j) d.col(j) = -ginv * (jet.dg[j] * up) + ginv * w.hess.col(j);
  return d;
}

namespace {

void annotate(Error& e, const Vec& p) {
  if (e.point().empty()) e.set_point(std::vector<double>(p.data(), p.data() + p.size()));
}

}  // namespace

double bracket_check(const MetricModel& m, const Expression& w1, const Expression& w2, double kappa,
                     std::size_t samples, std::uint64_t seed, Execution exec) {
  std::vector<double> worst(samples, 0.0);
  for_each_index(samples, exec, [&](std::size_t i) {
    const Vec p = m.sample_point(seed, i);
    try {
      const Mat ginv = inverse_metric_at(m, p);
      const Jet2 j1 = eval_jet2(w1, p);
      const Jet2 j2 = eval_jet2(w2, p);
      const Vec o1 = ginv * j1.grad;
      const Vec o2 = ginv * j2.grad;
      const Vec bracket = gradient_derivative(m, p, w2) * o1 - gradient_derivative(m, p, w1) * o2;
      const Vec r = bracket + kappa * j2.value * o1 - kappa * j1.value * o2;
      worst[i] = r.cwiseAbs().maxCoeff();
    } catch (Error& e) {
      annotate(e, p);
      throw;
    }
  });
  return *std::max_element(worst.begin(), worst.end());
}

PairConstant pair_constant_check(const MetricModel& m, const Expression& w1, const Expression& w2, double kappa,
                                 std::size_t samples, std::uint64_t seed, Execution exec) {
  std::vector<double> c(samples, 0.0);
  for_each_index(samples, exec, [&](std::size_t i) {
    const Vec p = m.sample_point(seed, i);
    try {
      const Mat ginv = inverse_metric_at(m, p);
      const Jet2 j1 = eval_jet2(w1, p);
      const Jet2 j2 = eval_jet2(w2, p);
      c[i] = j1.grad.dot(ginv * j2.grad) + kappa * j1.value * j2.value;
    } catch (Error& e) {
      annotate(e, p);
      throw;
    }
  });
  PairConstant out;
  double sum = 0.0;
  for (double v : c) sum += v;
  out.c = sum / static_cast<double>(samples);
  const auto [lo, hi] = std::minmax_element(c.begin(), c.end());
  out.spread = *hi - *lo;
  return out;
}

namespace {

int rank_of(const Mat& a) {
  if (a.cols() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(a);
  const Vec& s = svd.singularValues();
  if (s.size() == 0 || !(s[0] > 0.0)) return 0;
  int r = 0;
  for (int i = 0; i < s.size(); ++i) {
    if (s[i] > 1e-9 * s[0]) ++r;
  }
  return r;
}

}  // namespace

RankReport gradient_rank(const MetricModel& m, const std::vector<Expression>& system, std::size_t samples,
                         std::uint64_t seed) {
  const int n = m.dim();
  const int k = static_cast<int>(system.size());
  RankReport r;
  r.samples = samples;
  r.ranks.assign(samples, 0);
  std::vector<char> subsets(samples, 0);
  for_each_index(samples, Execution::parallel, [&](std::size_t i) {
    const Vec p = m.sample_point(seed, i);
    const Mat ginv = inverse_metric_at(m, p);
    Mat cols(n, k);
    for (int a = 0; a < k; ++a) cols.col(a) = ginv * eval_jet2(system[a], p).grad;
    r.ranks[i] = rank_of(cols);
    bool all = k >= n;
    if (all && k > n) {
      // every n-subset of k columns, enumerated by bitmask
      for (unsigned mask = 0; mask < (1u << k) && all; ++mask) {
        if (__builtin_popcount(mask) != n) continue;
        Mat sub(n, n);
        int c = 0;
        for (int a = 0; a < k; ++a) {
          if (mask & (1u << a)) sub.col(c++) = cols.col(a);
        }
        all = rank_of(sub) == n;
      }
    } else if (all) {
      all = r.ranks[i] == n;
    }
    subsets[i] = all ? 1 : 0;
  });
  for (std::size_t i = 0; i < samples; ++i) {
    if (r.ranks[i] == n) ++r.full_rank;
    if (subsets[i]) ++r.subsets_full;
  }
  r.full_rank_fraction = samples ? static_cast<double>(r.full_rank) / static_cast<double>(samples) : 0.0;
  return r;
}

std::vector<Expression> maximal_system(const MetricModel& m) {
  const int big_n = m.quadric_data().ambient.dim();
  std::vector<Expression> out;
  for (int a = 0; a < big_n; ++a) {
    std::vector<double> c(big_n, 0.0);
    c[a] = 1.0;
    out.push_back(restrict_linear(m, c));
  }
  return out;
}

double span_curvature(const MetricModel& m, const Vec& p, const Expression& w1, const Expression& w2) {
  const Mat ginv = inverse_metric_at(m, p);
  const Vec o1 = ginv * eval_jet2(w1, p).grad;
  const Vec o2 = ginv * eval_jet2(w2, p).grad;
  return sectional(m, p, o1, o2);
}

namespace {

struct LevelFrame {
  Mat g;
  Mat grads;    // columns Omega_i
  Mat dws;      // columns d omega_i
  Mat ginv_g;   // G^{-1}
  Vec values;
};

bool level_frame(const MetricModel& m, const std::vector<Expression>& system, const Vec& p, LevelFrame& f) {
  const int n = m.dim();
  const int k = static_cast<int>(system.size());
  f.g = m.metric(p);
  const Mat ginv = invert_metric(f.g);
  f.grads.resize(n, k);
  f.dws.resize(n, k);
  f.values.resize(k);
  for (int a = 0; a < k; ++a) {
    const Jet2 j = eval_jet2(system[a], p);
    f.values[a] = j.value;
    f.dws.col(a) = j.grad;
    f.grads.col(a) = ginv * j.grad;
  }
  const Mat gram = f.grads.transpose() * f.g * f.grads;
  for (int a = 0; a < k; ++a) {
    if (!(std::fabs(gram(a, a)) > 1e-8 * inner_scale(f.g, f.grads.col(a), f.grads.col(a)))) return false;
  }
  Eigen::FullPivLU<Mat> lu(gram);
  if (!lu.isInvertible()) return false;
  f.ginv_g = lu.inverse();
  return true;
}

// v minus its component along the gradients.
Vec project(const LevelFrame& f, const Vec& v) { return v - f.grads * (f.ginv_g * (f.dws.transpose() * v)); }

Vec normal_part(const LevelFrame& f, const Vec& v) { return f.grads * (f.ginv_g * (f.dws.transpose() * v)); }

}  // namespace

UmbilicReport umbilic_check(const MetricModel& m, const std::vector<Expression>& system, double kappa,
                            std::size_t samples, std::uint64_t seed, const std::vector<double>& levels,
                            std::uint64_t frame_seed) {
  const int n = m.dim();
  const int k = static_cast<int>(system.size());
  if (k < 1 || k >= n) throw ModelError("umbilic_check needs between 1 and dim-1 functions");
  if (!levels.empty() && static_cast<int>(levels.size()) != k) throw ModelError("one level per function expected");
  struct Slot {
    bool ok = false;
    double dev = 0.0;
  };
  std::vector<Slot> slots(samples);
  for_each_index(samples, Execution::parallel, [&](std::size_t i) {
    Vec p = m.sample_point(seed, i);
    if (!levels.empty()) {
      bool converged = false;
      for (int it = 0; it < 60; ++it) {
        Mat jac(k, n);
        Vec r(k);
        for (int a = 0; a < k; ++a) {
          const Jet2 j = eval_jet2(system[a], p);
          r[a] = j.value - levels[a];
          jac.row(a) = j.grad.transpose();
        }
        if (r.cwiseAbs().maxCoeff() <= 1e-14) {
          converged = true;
          break;
        }
        const Mat jjt = jac * jac.transpose();
        p -= jac.transpose() * jjt.fullPivLu().solve(r);
        if (!m.in_domain(p)) break;
      }
      if (!converged || !m.in_domain(p)) return;
    }
    LevelFrame f;
    if (!level_frame(m, system, p, f)) return;

    // Pseudo-orthonormal tangent frame by Gram-Schmidt in g.
    std::vector<Vec> frame;
    Rng rng = Rng::stream(frame_seed, i);
    for (int c = 0; c < n + 20 && static_cast<int>(frame.size()) < n - k; ++c) {
      Vec cand = Vec::Zero(n);
      if (frame_seed == 0 && c < n) {
        cand[c] = 1.0;
      } else {
        for (int a = 0; a < n; ++a) cand[a] = rng.normal();
      }
      Vec w = project(f, cand);
      for (const Vec& e : frame) w -= (inner(f.g, w, e) / inner(f.g, e, e)) * e;
      const double ww = inner(f.g, w, w);
      if (!(std::fabs(ww) > 1e-6 * inner_scale(f.g, w, w)) || w.norm() < 1e-8) continue;
      frame.push_back(w / std::sqrt(std::fabs(ww)));
    }
    if (static_cast<int>(frame.size()) != n - k) return;

    const Christoffel gamma = christoffel(m, p);
    const Vec expected_dir = f.grads * (f.ginv_g * f.values);
    // d/dX of the projected Y, 4th-order stencil (central difference when the
    // wide points leave the domain); false if a stencil point is unusable.
    auto derivatives = [&](double step, std::vector<Vec>& d) {
      d.clear();
      for (const Vec& x : frame) {
        LevelFrame f1p, f1m, f2p, f2m;
        const Vec q1p = p + step * x, q1m = p - step * x, q2p = p + 2 * step * x, q2m = p - 2 * step * x;
        if (!m.in_domain(q1p) || !m.in_domain(q1m)) return false;
        if (!level_frame(m, system, q1p, f1p) || !level_frame(m, system, q1m, f1m)) return false;
        const bool wide = m.in_domain(q2p) && m.in_domain(q2m) && level_frame(m, system, q2p, f2p) &&
                          level_frame(m, system, q2m, f2m);
        for (const Vec& y : frame) {
          d.push_back(wide ? Vec((8.0 * (project(f1p, y) - project(f1m, y)) - (project(f2p, y) - project(f2m, y))) /
                                 (12.0 * step))
                           : Vec((project(f1p, y) - project(f1m, y)) / (2.0 * step)));
        }
      }
      return true;
    };
    // Step 1e-4 (1 + |p|), halved until successive estimates agree.
    double step = 1e-4 * (1.0 + p.cwiseAbs().maxCoeff());
    std::vector<Vec> cur, next;
    if (!derivatives(step, cur)) return;
    for (int halving = 0; halving < 12; ++halving) {
      if (!derivatives(0.5 * step, next)) break;
      double diff = 0.0, scale = 0.0;
      for (std::size_t c = 0; c < cur.size(); ++c) {
        diff = std::max(diff, (next[c] - cur[c]).cwiseAbs().maxCoeff());
        scale = std::max(scale, next[c].cwiseAbs().maxCoeff());
      }
      cur.swap(next);
      step *= 0.5;
      if (diff <= 1e-10 * (1.0 + scale)) break;
    }
    double dev = 0.0;
    std::size_t c = 0;
    for (const Vec& x : frame) {
      for (const Vec& y : frame) {
        Vec cov = cur[c++];
        for (int a = 0; a < n; ++a) cov[a] += x.dot(gamma[a] * y);
        const Vec measured = normal_part(f, cov);
        const Vec expected = kappa * inner(f.g, x, y) * expected_dir;
        dev = std::max(dev, (measured - expected).cwiseAbs().maxCoeff());
      }
    }
    slots[i] = Slot{true, dev};
  });
  UmbilicReport r;
  for (const Slot& s : slots) {
    if (s.ok) {
      ++r.checked;
      r.max_deviation = std::max(r.max_deviation, s.dev);
    } else {
      ++r.skipped;
    }
  }
  return r;
}

CombinationReport linear_combination_search(const MetricModel& m, const Expression& omega,
                                            const std::vector<Expression>& candidates, double kappa,
                                            std::size_t samples, std::uint64_t seed) {
  const int n = m.dim();
  const int nc = static_cast<int>(candidates.size());
  if (nc < 2) throw ModelError("need at least two candidate functions");
  const int per = n * (n + 1) / 2;
  Mat stacked(static_cast<Eigen::Index>(samples) * per, nc);
  std::vector<Vec> points(samples);
  for (std::size_t s = 0; s < samples; ++s) {
    points[s] = m.sample_point(seed, s);
    for (int c = 0; c < nc; ++c) {
      const FieldEval e = evaluate_field(m, points[s], ScalarField{candidates[c], kappa});
      const Mat r = e.hessian + kappa * e.omega * e.g;
      int row = static_cast<int>(s) * per;
      for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) stacked(row++, c) = r(i, j);
      }
    }
  }
  Eigen::JacobiSVD<Mat> svd(stacked, Eigen::ComputeThinV);
  const Vec& sv = svd.singularValues();
  CombinationReport out;
  out.coefficients = svd.matrixV().col(nc - 1);
  int lead = 0;
  out.coefficients.cwiseAbs().maxCoeff(&lead);
  if (out.coefficients[lead] < 0) out.coefficients = -out.coefficients;
  out.smallest_singular = sv[nc - 1];
  out.second_singular = sv[nc - 2];
  for (std::size_t s = 0; s < samples; ++s) {
    const Mat ginv = inverse_metric_at(m, points[s]);
    Mat pair(n, 2);
    pair.col(0) = ginv * eval_jet2(omega, points[s]).grad;
    Vec gc = Vec::Zero(n);
    for (int c = 0; c < nc; ++c) gc += out.coefficients[c] * (ginv * eval_jet2(candidates[c], points[s]).grad);
    pair.col(1) = gc;
    Eigen::JacobiSVD<Mat> ps(pair);
    const Vec& psv = ps.singularValues();
    const double defect = psv[0] > 0.0 ? psv[1] / psv[0] : 1.0;
    out.max_rank_defect = std::max(out.max_rank_defect, defect);
  }
  return out;
}

}  // namespace obata
