#pragma once

// Dormand-Prince 5(4) with continuous extension, event location on a domain
// predicate, and escape detection when the step size collapses.

#include <functional>
#include <string>
#include <vector>

#include "obata/expr.hpp"

namespace obata {

enum class Termination { budget_reached, domain_escape, step_underflow };
std::string to_string(Termination t);

struct OdeOptions {
  double tol = 1e-10;         // per-component scale tol * (1 + |y_i|)
  double sample_dt = 0.01;    // dense output spacing
  double blowup = 1e6;        // |y| >= blowup * (1 + |y0|) at underflow means escape
  long max_steps = 5'000'000;
};

struct OdeResult {
  std::vector<double> s;
  std::vector<Vec> y;
  Termination termination = Termination::budget_reached;
  double s_end = 0.0;
  Vec y_end;
  long steps = 0;
  long rejected = 0;
};

using OdeRhs = std::function<Vec(double, const Vec&)>;
using OdeInside = std::function<bool(const Vec&)>;

/// Integrates y' = f(s, y) from s0 to s_max. A step whose stages throw
/// obata::Error or produce non-finite values is rejected. When an accepted
/// step ends outside `inside`, the exit is located on the dense output by
/// bisection to 1e-8 in s.
OdeResult dopri5(const OdeRhs& f, double s0, const Vec& y0, double s_max, const OdeInside& inside,
                 const OdeOptions& opt = {});

}  // namespace obata
