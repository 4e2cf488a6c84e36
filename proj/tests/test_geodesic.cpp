#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "obata/errors.hpp"
#include "obata/geodesic.hpp"
#include "obata/instances.hpp"
#include "obata/random.hpp"

using namespace obata;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Vec v3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

MetricModel sphere() { return MetricModel::quadric(Signature{0, 3}, 1.0, 2, 1); }
MetricModel de_sitter() { return MetricModel::quadric(Signature{1, 2}, 1.0, 2, 1); }
MetricModel exp_warp() { return MetricModel::warped(-1, parse("exp(t)", 1), MetricModel::flat(Signature{0, 2})); }
MetricModel sin_warp() { return MetricModel::warped(1, parse("2 + sin(t)", 1), MetricModel::flat(Signature{0, 2})); }

}  // namespace

TEST_CASE("geodesic right-hand side examples") {
  Vec r = geodesic_rhs(MetricModel::flat(Signature{1, 2}), GeodesicState{v3(0, 1, 2), v3(1, 2, 3), 0});
  CHECK((r.tail(3)).norm() == 0.0);
  CHECK((r.head(3) - v3(1, 2, 3)).norm() == 0.0);

  const MetricModel polar =
      MetricModel::custom(Signature{0, 2}, {{parse("1", 2), parse("0", 2)}, {parse("0", 2), parse("sin(x0)^2", 2)}});
  r = geodesic_rhs(polar, GeodesicState{v2(M_PI / 2, 0.3), v2(0, 1), 0});
  CHECK(r.tail(2).norm() <= 1e-15);

  // -dt^2 + e^{2t} |dx|^2: t'' = -e^{2t} |x'|^2.
  r = geodesic_rhs(exp_warp(), GeodesicState{v3(0.5, 0, 0), v3(0.2, 1.0, 2.0), 0});
  CHECK(r[3] == doctest::Approx(-std::exp(1.0) * 5.0).epsilon(1e-14));
}

TEST_CASE("straight lines in flat space") {
  const auto tr = integrate(MetricModel::flat(Signature{0, 2}), GeodesicState{v2(0, 0), v2(1, 0), 0}, 5.0);
  CHECK(tr.termination == Termination::budget_reached);
  CHECK(tr.s_end == 5.0);
  CHECK((tr.last.x - v2(5, 0)).norm() <= 1e-12);
  CHECK(tr.norm_drift <= 1e-10);
  for (std::size_t i = 1; i < tr.samples.size(); ++i) CHECK(tr.samples[i].s > tr.samples[i - 1].s);
}

TEST_CASE("input validation") {
  const MetricModel flat = MetricModel::flat(Signature{0, 2});
  CHECK_THROWS_AS(integrate(flat, GeodesicState{v2(0, 0), v2(1, 0), 0}, 0.0), ModelError);
  GeodesicOptions bad;
  bad.tol = 1e-3;
  CHECK_THROWS_AS(integrate(flat, GeodesicState{v2(0, 0), v2(1, 0), 0}, 1.0, bad), ModelError);
  CHECK_THROWS_AS(integrate(sphere(), GeodesicState{v2(0.99, 0.5), v2(1, 0), 0}, 1.0), DomainError);
  CHECK_THROWS_AS(integrate_ambient(sphere(), v3(0, 0, 1.1), v3(1, 0, 0), 1.0), ModelError);
  CHECK_THROWS_AS(integrate_ambient(sphere(), v3(0, 0, 1), v3(1, 0, 0.1), 1.0), ModelError);
}

TEST_CASE("ambient geodesics follow the closed forms") {
  const auto circle = integrate_ambient(sphere(), v3(0, 0, 1), v3(1, 0, 0), 2 * M_PI);
  CHECK((circle.last.x - v3(0, 0, 1)).norm() <= 1e-6);
  for (const auto& s : circle.samples) {
    if (std::fabs(s.s - M_PI) < 1e-12) CHECK((s.x - v3(0, 0, -1)).norm() <= 1e-7);
    REQUIRE((s.x - v3(std::sin(s.s), 0, std::cos(s.s))).norm() <= 1e-7);
  }

  // de Sitter timelike: cosh(s) x0 + sinh(s) v0.
  const Vec x0 = v3(0, 0, 1);
  const Vec v0 = v3(1, 0, 0);
  const auto hyp = integrate_ambient(de_sitter(), x0, v0, 2.0);
  CHECK((hyp.last.x - (std::cosh(2.0) * x0 + std::sinh(2.0) * v0)).norm() <= 1e-6);

  // Null: a straight line on the quadric.
  const auto line = integrate_ambient(de_sitter(), x0, v3(1, 1, 0), 3.0);
  CHECK((line.last.x - (x0 + 3.0 * v3(1, 1, 0))).norm() <= 1e-9);
  CHECK(line.constraint_drift <= 1e-9);

  const auto longrun = integrate_ambient(sphere(), v3(0.6, 0, 0.8), v3(0, 1, 0), 100.0);
  CHECK(longrun.constraint_drift <= 1e-8);
}

TEST_CASE("norm conservation") {
  Rng rng(3);
  for (const MetricModel& m : {de_sitter(), exp_warp(), sin_warp(), gaussian_bump_fiber()}) {
    for (const Vec& p : m.sample_points(5, 2)) {
      Vec v(m.dim());
      for (int i = 0; i < m.dim(); ++i) v[i] = rng.normal();
      const auto tr = integrate(m, GeodesicState{p, v, 0}, 50.0);
      if (tr.termination == Termination::budget_reached) {
        CHECK(tr.norm_drift <= 1e-7 * (1.0 + std::fabs(tr.norm0)));
      }
      CHECK(tr.norm_drift_rel <= 1e-7);
    }
  }
}

TEST_CASE("affine reparametrization") {
  const MetricModel m = sin_warp();
  const Vec p = v3(0.3, 0.1, -0.2);
  const Vec v = v3(0.4, 0.7, -0.5);
  const auto ref = integrate(m, GeodesicState{p, v, 0}, 4.0);
  for (double lambda : {0.5, 2.0}) {
    const auto tr = integrate(m, GeodesicState{p, lambda * v, 0}, 4.0 / lambda);
    CHECK((tr.last.x - ref.last.x).norm() <= 1e-7);
  }
}

TEST_CASE("chart and ambient integration agree") {
  Rng rng(8);
  for (const MetricModel& m : {sphere(), de_sitter()}) {
    for (const Vec& p : m.sample_points(6, 4)) {
      const Vec v = v2(rng.normal(), rng.normal());
      const auto chart = integrate(m, GeodesicState{p, v, 0}, 2.0);
      const auto amb = integrate_ambient(m, quadric_embed(m, p), quadric_pushforward(m, p, v), 2.0);
      const std::size_t k = std::min(chart.samples.size(), amb.samples.size());
      double worst = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        if (chart.samples[i].s != amb.samples[i].s) break;  // chart exit
        worst = std::max(worst, (quadric_embed(m, chart.samples[i].x) - amb.samples[i].x).norm());
      }
      CHECK(worst <= 1e-6);
    }
  }
}

TEST_CASE("norm evolution examples") {
  CHECK(norm_evolution(1.0, 1.0, 0.0, 2.0) == 0.25);
  CHECK(norm_evolution(1.7, 0.3, -1.0, 1.7) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(norm_evolution(1.0, 1.0, 1.0, 5.0) == 1.0);
}

TEST_CASE("norm evolution along warped trajectories") {
  Rng rng(12);
  for (const MetricModel& m : {sin_warp(), exp_warp()}) {
    const auto& w = m.warped_data();
    for (int k = 0; k < 6; ++k) {
      const Vec p = v3(rng.uniform(-0.5, 0.5), 0, 0);
      const Vec v = v3(rng.normal(), rng.normal(), rng.normal());
      const auto tr = integrate(m, GeodesicState{p, v, 0}, 3.0);
      const double a0 = eval(w.alpha, p.head(1));
      const double x0sq = w.base_sign * v[0] * v[0];
      for (const auto& s : tr.samples) {
        const double a = eval(w.alpha, s.x.head(1));
        const double xsq = w.base_sign * s.v[0] * s.v[0];
        REQUIRE(std::fabs(xsq - norm_evolution(a0, x0sq, tr.norm0, a)) <= 1e-6 * (1 + std::fabs(xsq)));
      }
    }
  }
}

TEST_CASE("affine time quadrature") {
  // Lightlike: s(t) = (e^{t0} - e^{t}) / (e^{t0} |tdot0|) in closed form.
  CHECK(affine_time(1.0, 0.0, 2.0, 0.0, -1.0) == doctest::Approx((1 - std::exp(-1.0)) / 2.0).epsilon(1e-12));
  CHECK(affine_time(1.0, 0.0, 2.0, 0.0, -kInf) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(affine_time(1.0, 0.0, 5.0 / 3.0, -1.0, -kInf) == doctest::Approx(std::log(2.0)).epsilon(1e-10));
  CHECK(affine_time(1.0, 0.0, 0.0, 1.0, -kInf) == doctest::Approx(std::numbers::pi / 2).epsilon(1e-10));
  CHECK(affine_time(4.0, 0.3, 5.0 / 3.0, -1.0, -kInf) == doctest::Approx(std::log(2.0) / 2).epsilon(1e-10));
  CHECK_THROWS_AS(affine_time(1.0, 0.0, 0.5, -1.0, -kInf), DomainError);
}

TEST_CASE("boundary distances") {
  CHECK(boundary_distance(1.0, 2.0, CausalClass::lightlike) == 0.5);
  CHECK(boundary_distance(1.0, 5.0 / 3.0, CausalClass::timelike) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(boundary_distance(1.0, -5.0 / 3.0, CausalClass::timelike) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(boundary_distance(1.0, 0.0, CausalClass::spacelike) == doctest::Approx(std::numbers::pi / 2).epsilon(1e-15));
  CHECK(boundary_distance(4.0, 2.0, CausalClass::lightlike) == 0.25);
  CHECK_THROWS_AS(boundary_distance(1.0, 0.8, CausalClass::timelike), DomainError);
  CHECK_THROWS_AS(boundary_distance(1.0, 0.0, CausalClass::lightlike), DomainError);
}

TEST_CASE("boundary distance homogeneity") {
  // Rescaling the velocity by lambda multiplies affine parameters by 1/lambda.
  // d_l is homogeneous of degree -1 in v; d_t and d_s depend on tdot0 of the
  // unit-speed geodesic only, so the rescaled escape parameter is d / lambda.
  for (double lambda : {0.5, 2.0, 10.0}) {
    CHECK(std::fabs(boundary_distance(1.0, 2.0 * lambda, CausalClass::lightlike) -
                    boundary_distance(1.0, 2.0, CausalClass::lightlike) / lambda) <= 1e-10);
    const double tt = 5.0 / 3.0, ts = 0.7;
    CHECK(std::fabs(escape_parameter(1.0, -tt * lambda, lambda * lambda * (tt * tt - 1)) * lambda -
                    boundary_distance(1.0, tt, CausalClass::timelike)) <= 1e-10);
    CHECK(std::fabs(escape_parameter(1.0, -ts * lambda, lambda * lambda * (ts * ts + 1)) * lambda -
                    boundary_distance(1.0, ts, CausalClass::spacelike)) <= 1e-10);
  }
}

TEST_CASE("measured escapes match the closed forms") {
  const MetricModel m = exp_warp();
  auto measured = [&](const Vec& x, const Vec& v) {
    const auto tr = integrate(m, GeodesicState{x, v, 0}, 20.0);
    return std::pair{tr.termination, tr.s_end};
  };
  auto [c1, s1] = measured(v3(0, 0, 0), v3(-5.0 / 3.0, 4.0 / 3.0, 0));
  CHECK(c1 == Termination::domain_escape);
  CHECK(std::fabs(s1 - std::log(2.0)) <= 1e-4);
  auto [c2, s2] = measured(v3(0, 0, 0), v3(0, 1, 0));
  CHECK(c2 == Termination::domain_escape);
  CHECK(std::fabs(s2 - std::numbers::pi / 2) <= 1e-4);
  auto [c3, s3] = measured(v3(0, 0, 0), v3(0, -1, 0));
  CHECK(std::fabs(s3 - std::numbers::pi / 2) <= 1e-4);
  auto [c4, s4] = measured(v3(0, 0, 0), v3(-2, 2, 0));
  CHECK(std::fabs(s4 - 0.5) <= 1e-4);

  // Twenty seeded initial conditions across the three causal classes.
  Rng rng(31);
  int checked = 0;
  for (int i = 0; i < 20; ++i) {
    const double t0 = rng.uniform(-1, 1);
    const double a0 = std::exp(t0);
    const double phi = rng.uniform(0, 2 * M_PI);
    double tdot = 0.0, speed = 0.0;
    switch (i % 3) {
      case 0:  // timelike, heading to t -> -inf
        tdot = -rng.uniform(1.2, 3.0);
        speed = std::sqrt(tdot * tdot - 1.0);
        break;
      case 1:  // spacelike, either direction
        tdot = rng.uniform(-2, 2);
        speed = std::sqrt(tdot * tdot + 1.0);
        break;
      default:  // lightlike
        tdot = -rng.uniform(0.5, 3.0);
        speed = std::fabs(tdot);
        break;
    }
    const Vec x = v3(t0, rng.normal(), rng.normal());
    const Vec v = v3(tdot, speed * std::cos(phi) / a0, speed * std::sin(phi) / a0);
    const double expected = escape_parameter(1.0, tdot, speed * speed);
    REQUIRE(std::isfinite(expected));
    const auto tr = integrate(m, GeodesicState{x, v, 0}, 20.0);
    CHECK(tr.termination == Termination::domain_escape);
    CHECK(std::fabs(tr.s_end - expected) <= 1e-4);
    ++checked;
  }
  CHECK(checked == 20);
}

TEST_CASE("forward complete directions on the exponential model") {
  CHECK(std::isinf(escape_parameter(1.0, 5.0 / 3.0, 16.0 / 9.0)));
  CHECK(std::isinf(escape_parameter(1.0, 2.0, 4.0)));
  const auto tr = integrate(exp_warp(), GeodesicState{v3(0, 0, 0), v3(5.0 / 3.0, 4.0 / 3.0, 0), 0}, 5.0);
  CHECK(tr.termination == Termination::budget_reached);
}

TEST_CASE("escape quadrature matches the measured parameter") {
  const auto tr = integrate(exp_warp(), GeodesicState{v3(0.2, 0, 0), v3(-1.5, 0.5, 0.4), 0}, 20.0);
  const double a0 = std::exp(0.2);
  const double c = -1.5 * 1.5 + a0 * a0 * (0.25 + 0.16);
  CHECK(std::fabs(tr.s_end - affine_time(1.0, 0.2, 1.5, c, -kInf)) <= 1e-6);
}

TEST_CASE("completeness probes") {
  ProbeSpec spec;
  spec.count = 20;
  const ProbeSummary flat = completeness_probe(MetricModel::flat(Signature{1, 2}), spec);
  CHECK(flat.complete_fraction == 1.0);

  const ProbeSummary sw = completeness_probe(sin_warp(), spec);
  CHECK(sw.complete_fraction == 1.0);
  CHECK(sw.escapes.empty());
  CHECK(sw.max_norm_drift <= 1e-7);

  spec.s_budget = 20.0;
  const ProbeSummary ew = completeness_probe(exp_warp(), spec);
  CHECK(ew.complete_fraction < 1.0);
  // Every spacelike start escapes in both directions.
  std::map<std::size_t, int> spacelike_dirs;
  for (const EscapeRecord& e : ew.escapes) {
    if (e.cls == CausalClass::spacelike) spacelike_dirs[e.index] += 1;
    const double fs2 = e.v0.tail(2).squaredNorm() * std::exp(2 * e.x0[0]);
    CHECK(std::fabs(e.s_star - escape_parameter(1.0, e.v0[0], fs2)) <= 1e-4);
  }
  CHECK(!spacelike_dirs.empty());
  for (const auto& [idx, dirs] : spacelike_dirs) CHECK(dirs == 2);

  spec.exec = Execution::serial;
  const ProbeSummary again = completeness_probe(exp_warp(), spec);
  REQUIRE(again.escapes.size() == ew.escapes.size());
  for (std::size_t i = 0; i < ew.escapes.size(); ++i) CHECK(again.escapes[i].s_star == ew.escapes[i].s_star);
}

TEST_CASE("first integral along geodesics") {
  const MetricModel ds = de_sitter();
  const ScalarField x{restrict_linear(ds, {0, 1, 0}), 1};
  auto amb = integrate_ambient(ds, v3(0, 0, 1), v3(0, 1, 0), 10.0);
  CHECK(attach_first_integral(amb, ds, x) <= 1e-7);

  const MetricModel flat = MetricModel::flat(Signature{0, 2});
  auto line = integrate(flat, GeodesicState{v2(0, 0), v2(1, 2), 0}, 5.0);
  CHECK(attach_first_integral(line, flat, ScalarField{parse("x0", 2), 0}) <= 1e-14);

  InstanceOptions opt;
  opt.kappa = 1;
  opt.h = -1;
  const InstanceBundle b = build_instance("thm4.2", opt);
  auto tl = integrate(b.model, GeodesicState{v3(0.2, 0, 0), v3(1.2, 0.3, 0.1), 0}, 3.0);
  CHECK(tl.norm0 < 0.0);
  CHECK(attach_first_integral(tl, b.model, b.field) <= 1e-7);
}

TEST_CASE("trajectory csv") {
  auto tr = integrate(MetricModel::flat(Signature{0, 2}), GeodesicState{v2(0, 0), v2(1, 0), 0}, 0.02);
  std::ostringstream os;
  write_trajectory_csv(os, tr);
  const std::string text = os.str();
  CHECK(text.rfind("s,x0,x1,v0,v1,norm\n", 0) == 0);
  CHECK(text.find("\n0.01,0.0099999999999999985,0,1,0,1\n") != std::string::npos);
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
}
