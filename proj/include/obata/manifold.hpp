#pragma once

// Metric models: flat pseudo-Euclidean space, quadric hypersurfaces of a flat
// ambient space in a graph chart, warped products over a 1-dimensional base,
// and custom coordinate metrics. Models are immutable values; every
// evaluation is reentrant.

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "obata/expr.hpp"

namespace obata {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// r negative and p positive eigenvalues.
struct Signature {
  int r = 0;
  int p = 0;
  int dim() const { return r + p; }
  bool operator==(const Signature&) const = default;
};

/// Axis-aligned box, open on each side. Infinite bounds are allowed.
struct Box {
  std::vector<double> lo;
  std::vector<double> hi;

  static Box unbounded(int n);
  static Box cube(int n, double half_width);
  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const Vec& p) const;
  Box intersect(const Box& other) const;
  bool finite() const;
};

enum class VectorType { spacelike, timelike, null };
std::string to_string(VectorType t);

/// Metric and its first coordinate derivatives at a point: dg[k](i,j) = d_k g_ij.
struct MetricJet {
  Mat g;
  std::vector<Mat> dg;
};

class MetricModel;

struct FlatData {};

struct QuadricData {
  Signature ambient;
  double level = 1.0;
  int solved_axis = 0;
  int branch = 1;
  double min_radicand = 0.0;     // absolute; radicand must stay >= this
  std::vector<double> eps;       // ambient metric diagonal, -1 then +1
  std::vector<int> free_axes;    // ambient index of chart coordinate j
  Expression solved;             // solved ambient coordinate over the chart

  double radicand(const Vec& u) const;
};

struct WarpedData {
  int base_sign = 1;
  Expression alpha;              // function of t = x0, dimension 1
  std::shared_ptr<const MetricModel> fiber;
  double t_lo = -kInf;
  double t_hi = kInf;
};

struct CustomData {
  std::vector<Expression> entries;   // row-major n*n, entries(i,j) == entries(j,i)
};

class MetricModel {
 public:
  enum class Kind { flat, quadric, warped, custom };

  static MetricModel flat(Signature sig);
  /// Level set sum eps_i x_i^2 = level in flat space of signature `ambient`,
  /// in the graph chart solving `solved_axis` with sign `branch` (+1 / -1).
  static MetricModel quadric(Signature ambient, double level, int solved_axis, int branch,
                             double min_radicand_fraction = 0.01);
  static MetricModel warped(int base_sign, Expression alpha, MetricModel fiber,
                            double t_lo = -kInf, double t_hi = kInf);
  static MetricModel custom(Signature sig, const std::vector<std::vector<Expression>>& entries);

  MetricModel with_domain(Box box) const;
  MetricModel with_sample_box(Box box) const;

  Kind kind() const { return kind_; }
  int dim() const { return sig_.dim(); }
  Signature signature() const { return sig_; }

  const QuadricData& quadric_data() const;
  const WarpedData& warped_data() const;
  const CustomData& custom_data() const;
  const Box& domain_box() const { return domain_; }
  const std::optional<Box>& explicit_sample_box() const { return sample_box_; }

  bool in_domain(const Vec& p) const;
  /// Box used for random sampling: the explicit sample box, or the domain
  /// clipped to [-2, 2] per coordinate.
  Box sample_box() const;
  /// Deterministic rejection sampling inside sample_box() and the domain.
  std::vector<Vec> sample_points(std::size_t count, std::uint64_t seed) const;
  Vec sample_point(std::uint64_t seed, std::uint64_t index) const;

  /// Metric with first derivatives. Does not check the chart domain; throws
  /// DomainError only where the formulas themselves break down.
  MetricJet metric_jet(const Vec& p) const;
  Mat metric(const Vec& p) const;

 private:
  MetricModel() = default;

  Kind kind_ = Kind::flat;
  Signature sig_;
  std::variant<FlatData, QuadricData, WarpedData, CustomData> data_;
  Box domain_;
  std::optional<Box> sample_box_;
};

/// Inertia of a symmetric matrix; DegenerateError if it has a (relative) zero eigenvalue.
Signature inertia(const Mat& g);

/// Checked metric: point in domain and inertia equal to the declared signature.
Mat metric_at(const MetricModel& m, const Vec& p);
Mat inverse_metric_at(const MetricModel& m, const Vec& p);
/// Inverse of an already evaluated metric; DegenerateError if singular.
Mat invert_metric(const Mat& g);

double inner(const Mat& g, const Vec& u, const Vec& v);
/// Positive scale proxy sum |g_ij||u_i||v_j| used for relative tolerances.
double inner_scale(const Mat& g, const Vec& u, const Vec& v);

VectorType classify_vector(const Mat& g, const Vec& v, double tol);
VectorType classify_vector(const MetricModel& m, const Vec& p, const Vec& v, double tol);

/// Ambient point of a quadric chart point.
Vec quadric_embed(const MetricModel& m, const Vec& p);
/// Push-forward of a chart tangent vector to the ambient space.
Vec quadric_pushforward(const MetricModel& m, const Vec& p, const Vec& v);
/// Chart coordinates of an ambient point (drops the solved axis).
Vec quadric_chart_point(const MetricModel& m, const Vec& x);
/// sum coeffs_i * X_i restricted to the quadric, as a chart expression.
Expression restrict_linear(const MetricModel& m, const std::vector<double>& coeffs);
/// Flat ambient inner product of the quadric's ambient space.
double ambient_inner(const MetricModel& m, const Vec& a, const Vec& b);

/// Samples the model and throws ModelError if the metric inertia differs
/// from the declared signature anywhere, or a warped alpha is not positive.
void validate_model(const MetricModel& m, std::size_t samples = 32, std::uint64_t seed = 7);

}  // namespace obata
