#pragma once

// Manifold-plus-field instances for each (kappa, h) structure, and the
// checks that go with them: Killing fields, totally geodesic zero levels,
// curvature decay of the asymptotically flat split.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "obata/manifold.hpp"
#include "obata/parallel.hpp"
#include "obata/tensor.hpp"

namespace obata {

struct InstanceOptions {
  double kappa = 1.0;
  double h = 1.0;
  std::optional<MetricModel> fiber;   // default fiber per case when empty
  int half = 1;                       // thm4.3: sign of omega (the two halves)
  std::size_t samples = 100;
  std::uint64_t seed = 0;
};

struct InstanceBundle {
  std::string tag;
  MetricModel model;
  ScalarField field;
  double expected_h = 0.0;
  std::vector<Expression> killing;    // nullkilling: the field d/dxi
  ObataReport report;
  bool verified = false;              // residual <= 1e-8 and h within 1e-7
};

/// Tags: thm4.1a, thm4.1b, thm4.2, thm4.3, thm4.5i, thm4.5ii, nullkilling.
/// ModelError when (kappa, h) or the fiber do not fit the case. Fibers for
/// thm4.1a / thm4.1b must have constant curvature kappa*h / -kappa*h.
InstanceBundle build_instance(const std::string& tag, const InstanceOptions& opt);
const std::vector<std::string>& instance_tags();

/// Default fiber used by build_instance for a case.
MetricModel default_fiber(const std::string& tag, double kappa, double h);

/// 2D custom metric (1 + a exp(-(x0^2 + x1^2))) (dx0^2 + dx1^2).
MetricModel gaussian_bump_fiber(double amplitude = 0.5);

/// max over samples of |(L_Z g)_ij|.
double killing_check(const MetricModel& m, const std::vector<Expression>& field, std::size_t samples,
                     std::uint64_t seed, Execution exec = Execution::parallel);

struct TotallyGeodesicReport {
  double max_deviation = 0.0;   // max |omega| along the geodesics
  std::size_t geodesics = 0;
  double min_reached_s = 0.0;   // shortest length integrated before leaving the chart
};

/// Projects seeded samples onto omega = 0 by Newton steps, launches geodesics
/// tangent to the level set and records how far omega drifts up to s_len.
TotallyGeodesicReport totally_geodesic_check(const MetricModel& m, const ScalarField& f, std::size_t samples,
                                             double s_len, std::uint64_t seed,
                                             Execution exec = Execution::parallel);

struct DecayReport {
  std::vector<double> sigma;
  std::vector<double> max_curvature;    // max |K^fiber| at fiber distance sigma
  double fit_from = 5.0;
  double envelope_exponent = 0.0;       // slope of log envelope vs log sigma
  std::vector<double> t;                // along an escaping timelike geodesic
  std::vector<double> total_curvature;  // fiber-fiber sectional curvature of M
  double limit_error = 0.0;             // |K - kappa| at the last t
};

/// Fiber geodesics from the origin in `directions` directions give the decay
/// table; the total-space curvature (K^fiber + alpha'^2)/alpha^2 is followed
/// along a timelike geodesic of -dt^2 + exp(2 sqrt(kappa) t) g_fiber down to t_min.
DecayReport asymptotic_flatness_probe(const MetricModel& fiber, double kappa, const std::vector<double>& sigma_grid,
                                      double fit_from = 5.0, int directions = 16, double t_min = -6.0,
                                      Execution exec = Execution::parallel);

}  // namespace obata
