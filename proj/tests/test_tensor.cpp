#include <doctest.h>

#include <cmath>

#include "obata/errors.hpp"
#include "obata/geodesic.hpp"
#include "obata/instances.hpp"
#include "obata/random.hpp"
#include "obata/tensor.hpp"

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
MetricModel polar_sphere() {
  return MetricModel::custom(Signature{0, 2}, {{parse("1", 2), parse("0", 2)}, {parse("0", 2), parse("sin(x0)^2", 2)}})
      .with_domain(Box{{0.1, -kInf}, {M_PI - 0.1, kInf}});
}
MetricModel exp_warp() { return MetricModel::warped(-1, parse("exp(t)", 1), MetricModel::flat(Signature{0, 2})); }

std::vector<MetricModel> models() {
  return {MetricModel::flat(Signature{1, 2}),
          sphere(),
          de_sitter(),
          polar_sphere(),
          MetricModel::quadric(Signature{2, 1}, -1.0, 0, 1),
          exp_warp(),
          MetricModel::warped(1, parse("2 + sin(t)", 1), MetricModel::flat(Signature{0, 2})),
          MetricModel::warped(-1, parse("cosh(t)", 1), sphere()),
          gaussian_bump_fiber()};
}

Vec random_vector(Rng& rng, int n) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

}  // namespace

TEST_CASE("christoffel examples") {
  const Christoffel flat = christoffel(MetricModel::flat(Signature{1, 2}), v3(0.3, -1, 2));
  for (const Mat& g : flat) CHECK(g.cwiseAbs().maxCoeff() == 0.0);

  const Christoffel s = christoffel(polar_sphere(), v2(M_PI / 4, 0.3));
  CHECK(s[0](1, 1) == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(s[1](0, 1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(s[1](1, 0) == s[1](0, 1));

  const Christoffel w = christoffel(exp_warp(), v3(0.0, 0.2, 0.4));
  CHECK(w[0](1, 1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(w[0](2, 2) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(w[1](0, 1) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("metric compatibility") {
  for (const MetricModel& m : models()) {
    const int n = m.dim();
    for (const Vec& p : m.sample_points(20, 3)) {
      const MetricJet jet = m.metric_jet(p);
      const Christoffel gam = christoffel(m, p);
      double worst = 0.0;
      for (int k = 0; k < n; ++k) {
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < n; ++j) {
            double v = jet.dg[k](i, j);
            for (int l = 0; l < n; ++l) v -= gam[l](k, i) * jet.g(l, j) + gam[l](k, j) * jet.g(i, l);
            worst = std::max(worst, std::fabs(v) / (1.0 + jet.dg[k].cwiseAbs().maxCoeff()));
          }
        }
      }
      CHECK(worst <= 1e-9);
    }
  }
}

TEST_CASE("gradient examples") {
  Vec g = gradient(MetricModel::flat(Signature{0, 2}), v2(1, 2), ScalarField{parse("x0", 2), 0});
  CHECK((g - v2(1, 0)).norm() == 0.0);
  g = gradient(MetricModel::flat(Signature{1, 1}), v2(1, 2), ScalarField{parse("x0", 2), 0});
  CHECK((g - v2(-1, 0)).norm() == 0.0);
  const MetricModel ds = de_sitter();
  const ScalarField x{restrict_linear(ds, {0, 1, 0}), 1};
  for (const Vec& p : ds.sample_points(50, 1)) {
    const Vec o = gradient(ds, p, x);
    const double w = eval(x.omega, p);
    CHECK(inner(ds.metric(p), o, o) == doctest::Approx(1 - w * w).epsilon(1e-11));
  }
}

TEST_CASE("hessian and residual examples") {
  const MetricModel flat = MetricModel::flat(Signature{1, 2});
  const Vec p = v3(0.5, 1, -1);
  Mat h = hessian(flat, p, ScalarField{parse("x0^2", 3), 0});
  CHECK(h(0, 0) == 2.0);
  CHECK(h.cwiseAbs().sum() == 2.0);
  h = hessian(flat, p, ScalarField{parse("x0", 3), 0});
  CHECK(h.cwiseAbs().maxCoeff() == 0.0);
  CHECK(obata_residual(flat, p, ScalarField{parse("x0", 3), 0}) == 0.0);

  const MetricModel ds = de_sitter();
  const ScalarField x{restrict_linear(ds, {0, 1, 0}), 1};
  const ScalarField ty{restrict_linear(ds, {1, 0, -1}), 1};
  const ScalarField x2{x.omega, 2};
  for (const Vec& q : ds.sample_points(50, 2)) {
    const Mat hq = hessian(ds, q, x);
    const Mat g = ds.metric(q);
    CHECK((hq + eval(x.omega, q) * g).cwiseAbs().maxCoeff() <= 1e-9 * (1 + g.cwiseAbs().maxCoeff()));
    CHECK(hq == hq.transpose());
    CHECK(obata_residual(ds, q, ty) <= 1e-9 * (1 + g.cwiseAbs().maxCoeff()));
    CHECK(first_integral(ds, q, x) == doctest::Approx(1.0).epsilon(1e-10));
    // kappa = 2 leaves |omega| g behind.
    CHECK(obata_residual(ds, q, x2) == doctest::Approx(std::fabs(eval(x.omega, q)) * g.cwiseAbs().maxCoeff()).epsilon(1e-6));
  }
  const Vec generic = v2(0.4, 0.9);
  CHECK(obata_residual(ds, generic, x2) >= 0.1);
}

TEST_CASE("hessian matches second differences along geodesics") {
  // d^2/ds^2 omega(gamma(s)) at s = 0 equals H(v, v) for a geodesic with gamma'(0) = v.
  const MetricModel ds = de_sitter();
  const ScalarField f{parse("x0*x1 + sin(x1)", 2), 0};
  Rng rng(5);
  GeodesicOptions opt;
  opt.sample_ds = 1e-3;
  double worst = 0.0;
  for (const Vec& p : ds.sample_points(20, 8)) {
    const Mat h = hessian(ds, p, f);
    const Mat g = ds.metric(p);
    for (int k = 0; k < 3; ++k) {
      Vec v = random_vector(rng, 2);
      const double vv = std::fabs(inner(g, v, v));
      if (vv < 1e-3 * inner_scale(g, v, v)) continue;
      v /= std::sqrt(vv);
      const auto fwd = integrate(ds, GeodesicState{p, v, 0}, 4.5e-3, opt);
      const auto bwd = integrate(ds, GeodesicState{p, -v, 0}, 4.5e-3, opt);
      if (fwd.termination != Termination::budget_reached || bwd.termination != Termination::budget_reached) continue;
      const double w0 = eval(f.omega, p);
      auto second = [&](int i) {
        const double step = 1e-3 * i;
        return (eval(f.omega, fwd.samples[i].x) - 2 * w0 + eval(f.omega, bwd.samples[i].x)) / (step * step);
      };
      const double richardson = (4.0 * second(2) - second(4)) / 3.0;
      worst = std::max(worst, std::fabs(richardson - v.dot(h * v)));
    }
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("riemann examples and symmetries") {
  const RiemannTensor flat = riemann(MetricModel::flat(Signature{1, 2}), v3(0.1, 0.2, 0.3));
  CHECK(flat.max_abs() <= 1e-10);

  const RiemannTensor s = riemann(polar_sphere(), v2(M_PI / 4, 0.0));
  CHECK(s(0, 1, 0, 1) == doctest::Approx(0.5).epsilon(1e-5));

  for (const MetricModel& m : models()) {
    const int n = m.dim();
    for (const Vec& p : m.sample_points(5, 1)) {
      const RiemannTensor r = riemann(m, p);
      const RiemannTensor low = lower_first(r, m.metric(p));
      const double scale = 1.0 + low.max_abs();
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          for (int c = 0; c < n; ++c)
            for (int d = 0; d < n; ++d) {
              CHECK(std::fabs(r(a, b, c, d) + r(a, b, d, c)) <= 1e-7 * (1 + r.max_abs()));
              CHECK(std::fabs(low(a, b, c, d) + low(b, a, c, d)) <= 1e-6 * scale);
              CHECK(std::fabs(low(a, b, c, d) - low(c, d, a, b)) <= 1e-6 * scale);
              CHECK(std::fabs(r(a, b, c, d) + r(a, c, d, b) + r(a, d, b, c)) <= 1e-6 * (1 + r.max_abs()));
            }
    }
  }
}

TEST_CASE("constant curvature identity on sphere and de Sitter") {
  for (const MetricModel& m : {sphere(), de_sitter(), polar_sphere()}) {
    const int n = m.dim();
    for (const Vec& p : m.sample_points(30, 4)) {
      const Mat g = m.metric(p);
      const RiemannTensor low = lower_first(riemann(m, p), g);
      double worst = 0.0;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          for (int c = 0; c < n; ++c)
            for (int d = 0; d < n; ++d)
              worst = std::max(worst, std::fabs(low(a, b, c, d) - (g(a, c) * g(b, d) - g(a, d) * g(b, c))));
      CHECK(worst <= 1e-5);
    }
  }
}

TEST_CASE("sectional curvature examples") {
  Rng rng(1);
  for (const Vec& p : sphere().sample_points(20, 2)) {
    CHECK(sectional(sphere(), p, v2(1, 0), random_vector(rng, 2)) == doctest::Approx(1.0).epsilon(1e-5));
  }
  const MetricModel flat = MetricModel::flat(Signature{1, 2});
  CHECK(std::fabs(sectional(flat, v3(0, 0, 0), v3(1, 0.2, 0), v3(0, 1, 1))) <= 1e-9);

  const MetricModel ds = de_sitter();
  const ScalarField x{restrict_linear(ds, {0, 1, 0}), 1};
  int evaluated = 0;
  for (const Vec& p : ds.sample_points(40, 6)) {
    const Vec o = gradient(ds, p, x);
    try {
      CHECK(sectional(ds, p, o, random_vector(rng, 2)) == doctest::Approx(1.0).epsilon(1e-5));
      ++evaluated;
    } catch (const DegenerateError&) {
    }
  }
  CHECK(evaluated >= 30);
}

TEST_CASE("degenerate planes are errors") {
  const MetricModel flat = MetricModel::flat(Signature{1, 2});
  // Parallel vectors.
  CHECK_THROWS_AS(sectional(flat, v3(0, 0, 0), v3(1, 0.5, 0), v3(2, 1, 0)), DegenerateError);
  // Null plane spanned by a null vector and an orthogonal spacelike vector.
  CHECK_THROWS_AS(sectional(flat, v3(0, 0, 0), v3(1, 1, 0), v3(0, 0, 1)), DegenerateError);
}

TEST_CASE("sectional curvature is basis invariant") {
  // Same curvature tensor, planes with area at least 0.1 of the scale proxy.
  Rng rng(9);
  const MetricModel m = MetricModel::warped(-1, parse("cosh(t)", 1), sphere());
  int checked = 0;
  for (const Vec& p : m.sample_points(20, 1)) {
    const Mat g = m.metric(p);
    const RiemannTensor low = lower_first(riemann(m, p), g);
    auto conditioned = [&](const Vec& x, const Vec& y) {
      const double area = inner(g, x, x) * inner(g, y, y) - inner(g, x, y) * inner(g, x, y);
      return std::fabs(area) >= 0.1 * inner_scale(g, x, x) * inner_scale(g, y, y);
    };
    for (int k = 0; k < 5; ++k) {
      const Vec x = random_vector(rng, 3);
      const Vec y = random_vector(rng, 3);
      const double a = rng.normal(), b = rng.normal(), c = rng.normal(), d = rng.normal();
      const Vec x2 = a * x + b * y;
      const Vec y2 = c * x + d * y;
      if (!conditioned(x, y) || !conditioned(x2, y2)) continue;
      const double k0 = sectional(low, g, x, y);
      const double k1 = sectional(low, g, x2, y2);
      CHECK(std::fabs(k1 - k0) <= 1e-8 * (1 + std::fabs(k0)));
      ++checked;
    }
  }
  CHECK(checked >= 20);
}

TEST_CASE("warped sectional examples") {
  const MetricModel prod = MetricModel::warped(1, parse("1", 1), MetricModel::flat(Signature{0, 2}));
  CHECK(warped_sectional(prod, v3(0.3, 0, 0), WarpedPlane::base_fiber, v3(1, 0, 0), v3(0, 1, 0)) == 0.0);

  const MetricModel ch = MetricModel::warped(-1, parse("cosh(t)", 1), MetricModel::flat(Signature{0, 2}));
  const MetricModel ex = exp_warp();
  for (double t : {-1.0, 0.0, 0.7, 2.0}) {
    const Vec p = v3(t, 0.1, 0.2);
    CHECK(warped_sectional(ch, p, WarpedPlane::base_fiber, v3(1, 0, 0), v3(0, 1, 0)) ==
          doctest::Approx(1.0).epsilon(1e-9));
    CHECK(warped_sectional(ex, p, WarpedPlane::fiber_fiber, v3(0, 1, 0), v3(0, 0, 1)) ==
          doctest::Approx(1.0).epsilon(1e-9));
    CHECK(sectional(ex, p, v3(0, 1, 0), v3(0, 0, 1)) == doctest::Approx(1.0).epsilon(1e-5));
  }
}

TEST_CASE("warped sectional agrees with the general formula") {
  const std::vector<MetricModel> ws = {
      MetricModel::warped(-1, parse("cosh(t)", 1), MetricModel::flat(Signature{0, 2})),
      MetricModel::warped(1, parse("2 + sin(t)", 1), sphere()),
      MetricModel::warped(-1, parse("exp(t)", 1), gaussian_bump_fiber()),
      MetricModel::warped(1, parse("sin(t)", 1), MetricModel::quadric(Signature{1, 2}, 1.0, 2, 1), 0.2, 3.0)};
  Rng rng(4);
  for (const MetricModel& m : ws) {
    for (const Vec& p : m.sample_points(10, 3)) {
      Vec fx = random_vector(rng, 3);
      Vec fy = random_vector(rng, 3);
      fx[0] = 0;
      fy[0] = 0;
      const Vec base = v3(1, 0, 0);
      CHECK(std::fabs(warped_sectional(m, p, WarpedPlane::base_fiber, base, fx) - sectional(m, p, base, fx)) <= 1e-5);
      try {
        const double general = sectional(m, p, fx, fy);
        CHECK(std::fabs(warped_sectional(m, p, WarpedPlane::fiber_fiber, fx, fy) - general) <= 1e-5);
      } catch (const DegenerateError&) {
      }
    }
  }
}

TEST_CASE("obata_verify on the figure fields") {
  const MetricModel ds = de_sitter();
  const ObataReport rx = obata_verify(ds, ScalarField{restrict_linear(ds, {0, 1, 0}), 1}, 200, 0);
  CHECK(rx.max_residual <= 1e-8);
  CHECK(rx.h_mean == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(rx.census.spacelike > 0);
  CHECK(rx.census.timelike > 0);
  CHECK(rx.census.null > 0);
  CHECK(rx.census.spacelike + rx.census.timelike + rx.census.null == rx.total);
  CHECK(rx.h_spread >= 0.0);
  CHECK(rx.label.omega_type == "depends");

  const ObataReport rt = obata_verify(ds, ScalarField{restrict_linear(ds, {1, 0, 0}), 1}, 200, 0);
  CHECK(rt.census.timelike == rt.total);
  CHECK(rt.h_mean == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(rt.label.omega_type == "timelike");

  const MetricModel flat = MetricModel::flat(Signature{1, 2});
  const ObataReport rn = obata_verify(flat, ScalarField{parse("x0 + x1", 3), 0}, 100, 0);
  CHECK(rn.h_mean == 0.0);
  CHECK(rn.census.null == rn.total);
  CHECK(rn.label.structure == "null-killing");
}

TEST_CASE("first integral is constant whenever the residual vanishes") {
  const MetricModel ds = de_sitter();
  Rng rng(21);
  for (int k = 0; k < 10; ++k) {
    std::vector<double> a = {rng.normal(), rng.normal(), rng.normal()};
    const ObataReport r = obata_verify(ds, ScalarField{restrict_linear(ds, a), 1}, 200, k);
    REQUIRE(r.max_residual <= 1e-8);
    CHECK(r.h_spread <= 1e-7);
    CHECK(r.h_mean == doctest::Approx(-a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).epsilon(1e-9));
  }
}

TEST_CASE("serial and parallel verification agree exactly") {
  const MetricModel ds = de_sitter();
  const ScalarField f{restrict_linear(ds, {0.3, 1, -0.4}), 1};
  VerifyOptions ser;
  ser.exec = Execution::serial;
  const ObataReport a = obata_verify(ds, f, 300, 5, ser);
  const ObataReport b = obata_verify(ds, f, 300, 5);
  CHECK(a.max_residual == b.max_residual);
  CHECK(a.h_mean == b.h_mean);
  CHECK(a.h_spread == b.h_spread);
  CHECK(a.refined == b.refined);
  CHECK(a.census.null == b.census.null);
  CHECK((a.worst_point - b.worst_point).norm() == 0.0);
}

TEST_CASE("verification errors carry the failing point") {
  const MetricModel flat = MetricModel::flat(Signature{0, 2});
  try {
    obata_verify(flat, ScalarField{parse("ln(x0)", 2), 0}, 50, 0);
    FAIL("expected a domain error");
  } catch (const DomainError& e) {
    REQUIRE(e.point().size() == 2);
    CHECK(e.point()[0] <= 0.0);
  }
}

TEST_CASE("kappa fit recovers kappa") {
  const MetricModel ds = de_sitter();
  CHECK(fit_kappa(ds, restrict_linear(ds, {0, 1, 0}), 50, 0) == doctest::Approx(1.0).epsilon(1e-8));
}
