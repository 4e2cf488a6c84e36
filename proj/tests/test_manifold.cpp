#include <doctest.h>

#include <cmath>

#include "obata/errors.hpp"
#include "obata/instances.hpp"
#include "obata/manifold.hpp"
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

std::vector<MetricModel> built_in_models() {
  return {MetricModel::flat(Signature{1, 2}),
          sphere(),
          de_sitter(),
          MetricModel::quadric(Signature{2, 1}, -1.0, 0, 1),   // anti-de Sitter sheet
          MetricModel::quadric(Signature{1, 3}, -1.0, 0, 1),   // hyperbolic space
          exp_warp(),
          MetricModel::warped(1, parse("2 + sin(t)", 1), MetricModel::flat(Signature{0, 2})),
          MetricModel::warped(-1, parse("cosh(t)", 1), sphere()),
          gaussian_bump_fiber()};
}

}  // namespace

TEST_CASE("metric examples") {
  const Mat f = MetricModel::flat(Signature{1, 2}).metric(v3(0.3, 1, 2));
  CHECK(f(0, 0) == -1.0);
  CHECK(f(1, 1) == 1.0);
  CHECK(f(2, 2) == 1.0);
  CHECK(f(0, 1) == 0.0);

  const Mat s = metric_at(sphere(), v2(0.6, 0.0));
  CHECK(s(0, 0) == doctest::Approx(1.5625).epsilon(1e-14));
  CHECK(s(0, 1) == doctest::Approx(0.0));
  CHECK(s(1, 1) == doctest::Approx(1.0));

  const Mat w = metric_at(exp_warp(), v3(std::log(2.0), 0, 0));
  CHECK(w(0, 0) == -1.0);
  CHECK(w(1, 1) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(w(2, 2) == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("inverse metric examples") {
  const Mat fi = inverse_metric_at(MetricModel::flat(Signature{1, 2}), v3(0, 0, 0));
  CHECK((fi - Vec(v3(-1, 1, 1)).asDiagonal().toDenseMatrix()).norm() == 0.0);
  const Mat wi = inverse_metric_at(exp_warp(), v3(std::log(2.0), 0, 0));
  CHECK(wi(1, 1) == doctest::Approx(0.25));
  const Mat si = inverse_metric_at(sphere(), v2(0.6, 0.0));
  CHECK(si(0, 0) == doctest::Approx(0.64));
  CHECK(si(1, 1) == doctest::Approx(1.0));
}

TEST_CASE("inverse is accurate for badly scaled warped metrics") {
  const MetricModel m = exp_warp();
  for (double t : {-30.0, -10.0, 0.0, 10.0}) {
    const Vec p = v3(t, 0.1, -0.2);
    const Mat g = m.metric(p);
    CHECK(inertia(g) == Signature{1, 2});
    const Mat prod = invert_metric(g) * g;
    CHECK((prod - Mat::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("classify_vector examples") {
  const MetricModel m = MetricModel::flat(Signature{1, 2});
  const Vec p = v3(0, 0, 0);
  CHECK(classify_vector(m, p, v3(1, 1, 0), 1e-12) == VectorType::null);
  CHECK(classify_vector(m, p, v3(1, 0, 0), 1e-12) == VectorType::timelike);
  CHECK(classify_vector(m, p, v3(0, 1, 0), 1e-12) == VectorType::spacelike);
}

TEST_CASE("quadric embedding examples") {
  Vec x = quadric_embed(sphere(), v2(0, 0));
  CHECK((x - v3(0, 0, 1)).norm() == 0.0);
  x = quadric_embed(de_sitter(), v2(0, 0));
  CHECK((x - v3(0, 0, 1)).norm() == 0.0);
  x = quadric_embed(sphere(), v2(0.6, 0));
  CHECK((x - v3(0.6, 0, 0.8)).norm() <= 1e-15);
  CHECK_THROWS_AS(quadric_embed(sphere(), v2(0.9, 0.9)), DomainError);
}

TEST_CASE("quadric embedding stays on the level set") {
  for (const MetricModel& m : {sphere(), de_sitter(), MetricModel::quadric(Signature{2, 1}, -1.0, 0, 1)}) {
    for (const Vec& p : m.sample_points(100, 3)) {
      const Vec x = quadric_embed(m, p);
      CHECK(std::fabs(ambient_inner(m, x, x) - m.quadric_data().level) <= 1e-12);
      CHECK((quadric_chart_point(m, x) - p).norm() == 0.0);
    }
  }
}

TEST_CASE("restrict_linear picks ambient coordinates") {
  const MetricModel m = de_sitter();
  const Expression x = restrict_linear(m, {0, 1, 0});
  const Expression t = restrict_linear(m, {1, 0, 0});
  const Expression ty = restrict_linear(m, {1, 0, -1});
  for (const Vec& p : m.sample_points(20, 1)) {
    const Vec a = quadric_embed(m, p);
    CHECK(eval(x, p) == doctest::Approx(a[1]).epsilon(1e-14));
    CHECK(eval(t, p) == doctest::Approx(a[0]).epsilon(1e-14));
    CHECK(eval(ty, p) == doctest::Approx(a[0] - a[2]).epsilon(1e-13));
  }
}

TEST_CASE("inertia equals the declared signature at random points") {
  for (const MetricModel& m : built_in_models()) {
    for (const Vec& p : m.sample_points(100, 5)) {
      REQUIRE(inertia(m.metric(p)) == m.signature());
    }
  }
}

TEST_CASE("quadric pullback matches finite-difference Jacobians") {
  for (const MetricModel& m : {sphere(), de_sitter(), MetricModel::quadric(Signature{1, 3}, -1.0, 0, 1)}) {
    const int n = m.dim();
    for (const Vec& p : m.sample_points(30, 9)) {
      Mat jac(n + 1, n);
      const double h = 1e-6;
      for (int j = 0; j < n; ++j) {
        Vec pp = p, pm = p;
        pp[j] += h;
        pm[j] -= h;
        jac.col(j) = (quadric_embed(m, pp) - quadric_embed(m, pm)) / (2 * h);
      }
      Mat g_fd(n, n);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) g_fd(i, j) = ambient_inner(m, jac.col(i), jac.col(j));
      }
      const Mat g = m.metric(p);
      CHECK((g_fd - g).cwiseAbs().maxCoeff() <= 1e-8 * g.cwiseAbs().maxCoeff());
    }
  }
}

TEST_CASE("metric jets match finite differences") {
  for (const MetricModel& m : built_in_models()) {
    const int n = m.dim();
    for (const Vec& p : m.sample_points(10, 2)) {
      const MetricJet jet = m.metric_jet(p);
      for (int k = 0; k < n; ++k) {
        const double h = 1e-6;
        Vec pp = p, pm = p;
        pp[k] += h;
        pm[k] -= h;
        const Mat fd = (m.metric(pp) - m.metric(pm)) / (2 * h);
        CHECK((fd - jet.dg[k]).cwiseAbs().maxCoeff() <= 1e-6 * (1 + jet.dg[k].cwiseAbs().maxCoeff()));
      }
    }
  }
}

TEST_CASE("warped model with alpha = 1 is the direct product") {
  const MetricModel fiber = sphere();
  const MetricModel w = MetricModel::warped(-1, parse("1", 1), fiber);
  for (const Vec& p : w.sample_points(50, 4)) {
    const Mat g = w.metric(p);
    const Mat gf = fiber.metric(p.tail(2));
    CHECK(g(0, 0) == -1.0);
    CHECK(g.row(0).tail(2).norm() == 0.0);
    CHECK((g.bottomRightCorner(2, 2) - gf).norm() == 0.0);
  }
}

TEST_CASE("domain handling") {
  const MetricModel m = sphere();
  CHECK(m.in_domain(v2(0.1, 0.2)));
  CHECK_FALSE(m.in_domain(v2(0.99, 0.1)));
  CHECK_THROWS_AS(metric_at(m, v2(0.99, 0.1)), DomainError);
  const MetricModel w = MetricModel::warped(1, parse("sin(t)", 1), MetricModel::flat(Signature{0, 1}), 0.0, M_PI);
  CHECK(w.in_domain(v2(1.0, 5.0)));
  CHECK_FALSE(w.in_domain(v2(-0.5, 0.0)));
  for (const Vec& p : w.sample_points(100, 1)) CHECK(w.in_domain(p));
}

TEST_CASE("sampling is deterministic") {
  const MetricModel m = de_sitter();
  const auto a = m.sample_points(50, 17);
  const auto b = m.sample_points(50, 17);
  const auto c = m.sample_points(50, 18);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK((a[i] - b[i]).norm() == 0.0);
    differs = differs || (a[i] - c[i]).norm() > 0.0;
  }
  CHECK(differs);
}

TEST_CASE("invalid models are rejected") {
  // diag(1, -1) declared Riemannian.
  CHECK_THROWS_AS(validate_model(MetricModel::custom(Signature{0, 2}, {{parse("1", 2), parse("0", 2)},
                                                                       {parse("0", 2), parse("-1", 2)}})),
                  ModelError);
  CHECK_THROWS_AS(MetricModel::custom(Signature{0, 2}, {{parse("1", 2), parse("x0", 2)}, {parse("0", 2), parse("1", 2)}}),
                  ModelError);
  // alpha vanishing inside the interval.
  CHECK_THROWS_AS(validate_model(MetricModel::warped(1, parse("t", 1), MetricModel::flat(Signature{0, 1}), -1, 1)),
                  ModelError);
  CHECK_THROWS(MetricModel::quadric(Signature{0, 3}, -1.0, 2, 1));
}
