#pragma once

// Levi-Civita connection, covariant Hessian, curvature and the Obata
// residual on a MetricModel. Index conventions:
//   gamma[k](i, j)   = Gamma^k_ij
//   R^a_bcd          = d_c Gamma^a_db - d_d Gamma^a_cb
//                      + Gamma^a_ce Gamma^e_db - Gamma^a_de Gamma^e_cb
//   R(X,Y)Y          = R^a_bcd Y^b X^c Y^d
//   K(X,Y)           = R_abcd X^a Y^b X^c Y^d / (<X,X><Y,Y> - <X,Y>^2)

#include <cstdint>
#include <vector>

#include "obata/classify.hpp"
#include "obata/expr.hpp"
#include "obata/manifold.hpp"
#include "obata/parallel.hpp"

namespace obata {

/// omega with the constant kappa of H^omega = -kappa omega g.
struct ScalarField {
  Expression omega;
  double kappa = 0.0;
};

using Christoffel = std::vector<Mat>;

Christoffel christoffel(const MetricJet& jet, const Mat& ginv);
/// Checked: p must lie in the chart domain.
Christoffel christoffel(const MetricModel& m, const Vec& p);

/// Everything about a field at one point, from a single metric and jet evaluation.
struct FieldEval {
  double omega = 0.0;
  Vec domega;          // d_i omega
  Vec grad;            // Omega^i
  Mat hessian;         // H_ij
  Mat g;
  double norm2 = 0.0;  // <Omega, Omega>
  double residual = 0.0;
  double first_integral = 0.0;
};

FieldEval evaluate_field(const MetricModel& m, const Vec& p, const ScalarField& f);

Vec gradient(const MetricModel& m, const Vec& p, const ScalarField& f);
Mat hessian(const MetricModel& m, const Vec& p, const ScalarField& f);
/// max |H_ij + kappa omega g_ij|
double obata_residual(const MetricModel& m, const Vec& p, const ScalarField& f);
/// <Omega, Omega> + kappa omega^2
double first_integral(const MetricModel& m, const Vec& p, const ScalarField& f);

/// R^a_bcd stored densely, a fastest-varying last.
class RiemannTensor {
 public:
  explicit RiemannTensor(int n) : n_(n), data_(static_cast<std::size_t>(n) * n * n * n, 0.0) {}
  int dim() const { return n_; }
  double& operator()(int a, int b, int c, int d) { return data_[((b * n_ + c) * n_ + d) * n_ + a]; }
  double operator()(int a, int b, int c, int d) const { return data_[((b * n_ + c) * n_ + d) * n_ + a]; }
  double max_abs() const;

 private:
  int n_;
  std::vector<double> data_;
};

/// Derivatives of Gamma by 4th-order central differences, step 1e-4 (1 + |x_c|)
/// halved until successive estimates agree.
/// DomainError if a stencil point leaves the chart domain.
RiemannTensor riemann(const MetricModel& m, const Vec& p);
/// R_abcd = g_ae R^e_bcd.
RiemannTensor lower_first(const RiemannTensor& r, const Mat& g);

/// DegenerateError when |<X,X><Y,Y> - <X,Y>^2| <= 1e-8 * scale.
double sectional(const RiemannTensor& lowered, const Mat& g, const Vec& x, const Vec& y);
double sectional(const MetricModel& m, const Vec& p, const Vec& x, const Vec& y);

/// Exact Gaussian curvature of a 2-dimensional custom model from second-order
/// jets of the metric entries (Brioschi formula); other 2D models use sectional().
double gaussian_curvature(const MetricModel& m, const Vec& p);

enum class WarpedPlane { base_fiber, fiber_fiber };

/// Closed-form sectional curvature of a warped product with 1-dimensional base:
/// base-fiber K = -alpha'' / (eps alpha); fiber-fiber K = (K^F - eps alpha'^2) / alpha^2.
/// For base_fiber, x is the base direction (only the t component is used) and
/// y a fiber direction (t component ignored); for fiber_fiber both are fiber vectors.
double warped_sectional(const MetricModel& m, const Vec& p, WarpedPlane which, const Vec& x, const Vec& y);

struct TypeCensus {
  std::size_t spacelike = 0;
  std::size_t timelike = 0;
  std::size_t null = 0;
};

struct ObataReport {
  double kappa = 0.0;
  double max_residual = 0.0;
  Vec worst_point;
  double h_mean = 0.0;
  double h_spread = 0.0;
  double omega_min = 0.0;
  double omega_max = 0.0;
  TypeCensus census;
  std::size_t samples = 0;   // random samples
  std::size_t refined = 0;   // null points found between sign changes of <Omega,Omega>
  std::size_t total = 0;     // samples + refined
  CaseLabel label;
};

struct VerifyOptions {
  double census_tol = 1e-9;
  double case_tol = 1e-6;
  bool refine_null = true;
  Execution exec = Execution::parallel;
};

/// Evaluates the field at `samples` seeded domain points. Consecutive samples
/// whose gradients are spacelike and timelike are bisected along the chord for
/// a null point (at most samples/10 extra points). Reduction is by index, so
/// serial and parallel execution give identical reports.
ObataReport obata_verify(const MetricModel& m, const ScalarField& f, std::size_t samples, std::uint64_t seed,
                         const VerifyOptions& opt = {});

/// Least-squares kappa fitting H^omega = -kappa omega g over seeded samples.
/// Exploration aid only.
double fit_kappa(const MetricModel& m, const Expression& omega, std::size_t samples, std::uint64_t seed);

}  // namespace obata
