#pragma once

// Identities for systems of Obata functions sharing one kappa: brackets of
// gradients, the pair constants c_ij, maximal systems on quadrics, the
// second fundamental form of joint level sets, and curvature of gradient spans.

#include <cstdint>
#include <vector>

#include "obata/manifold.hpp"
#include "obata/parallel.hpp"
#include "obata/tensor.hpp"

namespace obata {

/// d_j Omega^k as a matrix (k, j), from jets of omega and of the metric.
Mat gradient_derivative(const MetricModel& m, const Vec& p, const Expression& omega);

/// max over samples of |[Omega1, Omega2] + kappa w2 Omega1 - kappa w1 Omega2|.
double bracket_check(const MetricModel& m, const Expression& w1, const Expression& w2, double kappa,
                     std::size_t samples, std::uint64_t seed, Execution exec = Execution::parallel);

struct PairConstant {
  double c = 0.0;       // mean of <Omega1, Omega2> + kappa w1 w2
  double spread = 0.0;  // max - min
};

PairConstant pair_constant_check(const MetricModel& m, const Expression& w1, const Expression& w2, double kappa,
                                 std::size_t samples, std::uint64_t seed, Execution exec = Execution::parallel);

struct RankReport {
  std::size_t samples = 0;
  std::size_t full_rank = 0;        // gradient rank equal to dim at the sample
  std::size_t subsets_full = 0;     // samples where every dim-subset has rank dim
  double full_rank_fraction = 0.0;
  std::vector<int> ranks;
};

/// Rank of {Omega_i} at seeded samples (relative singular value threshold 1e-9).
RankReport gradient_rank(const MetricModel& m, const std::vector<Expression>& system, std::size_t samples,
                         std::uint64_t seed);

/// Restrictions of the ambient coordinates of a quadric.
std::vector<Expression> maximal_system(const MetricModel& m);

/// Sectional curvature of span(Omega1, Omega2) at p.
double span_curvature(const MetricModel& m, const Vec& p, const Expression& w1, const Expression& w2);

struct UmbilicReport {
  double max_deviation = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;   // degenerate samples: null gradient, dependent gradients or null level set
};

/// Measures the normal part of nabla_X Y on the joint level set through each
/// sample (Y extended by projecting a fixed vector, derivative by a 4th-order central
/// stencil, step halved until successive estimates agree) and compares with kappa <X,Y> sum_ij (G^-1)_ij w_j Omega_i,
/// G_ij = <Omega_i, Omega_j>. With `levels`, samples are first moved onto
/// w_i = levels_i. frame_seed != 0 starts Gram-Schmidt from random vectors.
UmbilicReport umbilic_check(const MetricModel& m, const std::vector<Expression>& system, double kappa,
                            std::size_t samples, std::uint64_t seed, const std::vector<double>& levels = {},
                            std::uint64_t frame_seed = 0);

struct CombinationReport {
  Vec coefficients;        // unit null vector of the stacked residuals
  double smallest_singular = 0.0;
  double second_singular = 0.0;
  double max_rank_defect = 0.0;  // max over samples of sigma2/sigma1 of [Omega, Omega_candidate]
};

/// Finds the combination of `candidates` with the smallest Obata residual
/// (smallest right singular vector of stacked residuals) and checks that its
/// gradient is parallel to the gradient of `omega` at every sample.
CombinationReport linear_combination_search(const MetricModel& m, const Expression& omega,
                                            const std::vector<Expression>& candidates, double kappa,
                                            std::size_t samples, std::uint64_t seed);

}  // namespace obata
