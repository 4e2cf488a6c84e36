#pragma once

// Geodesics in a chart and, for quadrics, in ambient coordinates; closed
// forms for the warped exponential model -dt^2 + exp(2 sqrt(kappa) t) g_F.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "obata/manifold.hpp"
#include "obata/ode.hpp"
#include "obata/parallel.hpp"
#include "obata/tensor.hpp"

namespace obata {

struct GeodesicState {
  Vec x;
  Vec v;
  double s = 0.0;
};

struct GeodesicOptions {
  double tol = 1e-10;
  double sample_ds = 0.01;
};

struct GeodesicTrajectory {
  std::vector<GeodesicState> samples;
  std::vector<double> norms;             // <v, v> at each sample
  std::vector<double> first_integrals;   // filled by attach_first_integral
  Termination termination = Termination::budget_reached;
  double s_end = 0.0;
  GeodesicState last;
  double norm0 = 0.0;
  double norm_drift = 0.0;               // max |<v,v> - <v0,v0>|
  double norm_drift_rel = 0.0;           // same, over sum |g_ij v^i v^j|
  double constraint_drift = 0.0;         // ambient mode: max |<x,x> - c|
  std::optional<double> integral_drift;
  bool ambient = false;
};

/// (v, -Gamma(v, v)) for the state, stacked into one vector of length 2n.
Vec geodesic_rhs(const MetricModel& m, const GeodesicState& state);

GeodesicTrajectory integrate(const MetricModel& m, const GeodesicState& start, double s_max,
                             const GeodesicOptions& opt = {});

/// gamma'' = -(<gamma', gamma'> / c) gamma in the flat ambient space of a quadric.
GeodesicTrajectory integrate_ambient(const MetricModel& m, const Vec& x0, const Vec& v0, double s_max,
                                     const GeodesicOptions& opt = {});

/// Base part of the squared speed along a warped geodesic:
/// alpha0^2 (X0sq - C) / alpha^2 + C.
double norm_evolution(double alpha0, double x0sq, double c, double alpha);

/// Affine parameter elapsed while t decreases from t0 to t (t may be -inf) on
/// -dt^2 + exp(2 sqrt(kappa) t) g_F, by tanh-sinh quadrature.
double affine_time(double kappa, double t0, double tdot0, double c, double t);

enum class CausalClass { spacelike = 1, timelike = -1, lightlike = 0 };
std::string to_string(CausalClass c);

/// d_l = 1/(sqrt(kappa) v), d_t = ln sqrt((|tdot0|+1)/(|tdot0|-1)) / sqrt(kappa),
/// d_s = arcsin(1/sqrt(tdot0^2+1)) / sqrt(kappa). tdot0 is for a unit-speed geodesic.
double boundary_distance(double kappa, double v_or_tdot0, CausalClass cls);

/// Forward escape parameter on the exponential model for the velocity with base
/// component tdot0 and alpha^2 |V|_F^2 = fiber_speed2; +inf if complete forward.
double escape_parameter(double kappa, double tdot0, double fiber_speed2);

/// Evaluates the first integral at every sample (ambient samples through the
/// chart, skipping those outside it) and returns the max deviation from the first.
double attach_first_integral(GeodesicTrajectory& tr, const MetricModel& m, const ScalarField& f);

struct ProbeSpec {
  std::size_t count = 50;
  std::uint64_t seed = 0;
  double s_budget = 50.0;
  double tol = 1e-10;
  bool both_directions = true;
  Execution exec = Execution::parallel;
};

struct EscapeRecord {
  std::size_t index = 0;
  int direction = 1;
  Vec x0;
  Vec v0;
  double s_star = 0.0;
  CausalClass cls = CausalClass::spacelike;
  Termination cause = Termination::domain_escape;
};

struct ProbeSummary {
  std::size_t geodesics = 0;
  std::size_t complete = 0;
  double complete_fraction = 0.0;
  double max_norm_drift = 0.0;   // over trajectories that reached the budget
  std::vector<EscapeRecord> escapes;
};

/// Seeded starts and directions normalized to |<v,v>| = 1; a geodesic counts
/// as complete when every integrated direction reaches the budget.
ProbeSummary completeness_probe(const MetricModel& m, const ProbeSpec& spec);

/// Columns s, x..., v..., norm[, first_integral].
void write_trajectory_csv(std::ostream& os, const GeodesicTrajectory& tr);

}  // namespace obata
