#include "obata/ode.hpp"

#include <algorithm>
#include <cmath>

#include "obata/errors.hpp"

namespace obata {

std::string to_string(Termination t) {
  switch (t) {
    case Termination::budget_reached: return "budget_reached";
    case Termination::domain_escape: return "domain_escape";
    case Termination::step_underflow: return "step_underflow";
  }
  return "?";
}

namespace {

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

struct Dense {
  Vec r1, r2, r3, r4, r5;
  Vec at(double th) const {
    const double th1 = 1.0 - th;
    return r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
  }
};

bool finite(const Vec& v) { return v.allFinite(); }

}  // namespace

OdeResult dopri5(const OdeRhs& f, double s0, const Vec& y0, double s_max, const OdeInside& inside,
                 const OdeOptions& opt) {
  OdeResult out;
  const double y0_norm = y0.cwiseAbs().maxCoeff();
  double s = s0;
  Vec y = y0;
  Vec k1 = f(s, y);
  out.s.push_back(s);
  out.y.push_back(y);
  long sample_index = 1;
  double next_sample = s0 + opt.sample_dt;
  double h = std::min(1e-3, s_max - s0);
  bool last_rejected = false;

  while (true) {
    if (s >= s_max) {
      out.termination = Termination::budget_reached;
      break;
    }
    if (out.steps + out.rejected >= opt.max_steps) {
      out.termination = Termination::step_underflow;
      break;
    }
    if (h < 1e-13 * (1.0 + std::fabs(s))) {
      const bool diverged = y.cwiseAbs().maxCoeff() >= opt.blowup * (1.0 + y0_norm);
      out.termination = diverged ? Termination::domain_escape : Termination::step_underflow;
      break;
    }
    const bool hits_end = s + h >= s_max;
    if (hits_end) h = s_max - s;

    Vec k2, k3, k4, k5, k6, k7, y1;
    bool ok = true;
    try {
      k2 = f(s + c2 * h, y + h * (a21 * k1));
      k3 = f(s + c3 * h, y + h * (a31 * k1 + a32 * k2));
      k4 = f(s + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
      k5 = f(s + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      k6 = f(s + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      y1 = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
      ok = finite(y1);
      if (ok) {
        k7 = f(s + h, y1);
        ok = finite(k7);
      }
    } catch (const Error&) {
      ok = false;
    }

    double err = 0.0;
    if (ok) {
      const Vec e = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      for (int i = 0; i < e.size(); ++i) {
        const double sc = opt.tol * (1.0 + std::max(std::fabs(y[i]), std::fabs(y1[i])));
        err = std::max(err, std::fabs(e[i]) / sc);
      }
      ok = std::isfinite(err);
    }
    if (!ok) {
      ++out.rejected;
      h *= 0.25;
      last_rejected = true;
      continue;
    }
    double fac = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
    fac = std::clamp(fac, 0.2, 5.0);
    if (err > 1.0) {
      ++out.rejected;
      h *= std::min(fac, 1.0);
      last_rejected = true;
      continue;
    }

    ++out.steps;
    Dense dense;
    dense.r1 = y;
    dense.r2 = y1 - y;
    dense.r3 = h * k1 - dense.r2;
    dense.r4 = dense.r2 - h * k7 - dense.r3;
    dense.r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);

    const double s_new = hits_end ? s_max : s + h;
    if (!inside(y1)) {
      double lo = 0.0;
      double hi = 1.0;
      while ((hi - lo) * h > 1e-8) {
        const double mid = 0.5 * (lo + hi);
        if (inside(dense.at(mid))) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      const double s_exit = s + lo * h;
      while (next_sample < s_exit) {
        out.s.push_back(next_sample);
        out.y.push_back(dense.at((next_sample - s) / h));
        next_sample = s0 + opt.sample_dt * static_cast<double>(++sample_index);
      }
      const Vec y_exit = dense.at(lo);
      if (s_exit > out.s.back()) {
        out.s.push_back(s_exit);
        out.y.push_back(y_exit);
      }
      s = s_exit;
      y = y_exit;
      out.termination = Termination::domain_escape;
      break;
    }
    while (next_sample < s_new) {
      out.s.push_back(next_sample);
      out.y.push_back(dense.at((next_sample - s) / h));
      next_sample = s0 + opt.sample_dt * static_cast<double>(++sample_index);
    }
    s = s_new;
    y = y1;
    k1 = k7;
    if (last_rejected) fac = std::min(fac, 1.0);
    last_rejected = false;
    h *= fac;
  }
  if (out.s.back() < s) {
    out.s.push_back(s);
    out.y.push_back(y);
  }
  out.s_end = s;
  out.y_end = y;
  return out;
}

}  // namespace obata
