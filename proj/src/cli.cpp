#include "obata/cli.hpp"

#include <omp.h>

#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "obata/classify.hpp"
#include "obata/errors.hpp"
#include "obata/foliation.hpp"
#include "obata/geodesic.hpp"
#include "obata/instances.hpp"
#include "obata/json_format.hpp"
#include "obata/model_io.hpp"
#include "obata/tensor.hpp"

namespace obata::cli {

using nlohmann::json;

namespace {

json vec_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json mat_json(const Mat& m) {
  json a = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    a.push_back(row);
  }
  return a;
}

json header(const std::string& command) { return json{{"tool", "obata"}, {"version", kToolVersion}, {"command", command}}; }

json label_json(const CaseLabel& l) {
  return json{{"kappa_sign", to_string(l.kappa_sign)},
              {"h_sign", to_string(l.h_sign)},
              {"omega_type", l.omega_type},
              {"structure", l.structure},
              {"riemannian_possible", l.riemannian_possible},
              {"range", l.range},
              {"range_lo", l.range_lo},
              {"range_hi", l.range_hi}};
}

json report_json(const ObataReport& r) {
  return json{{"kappa", r.kappa},
              {"max_residual", r.max_residual},
              {"worst_point", vec_json(r.worst_point)},
              {"h_mean", r.h_mean},
              {"h_spread", r.h_spread},
              {"omega_min", r.omega_min},
              {"omega_max", r.omega_max},
              {"census", {{"spacelike", r.census.spacelike}, {"timelike", r.census.timelike}, {"null", r.census.null}}},
              {"samples", r.samples},
              {"refined", r.refined},
              {"total", r.total},
              {"label", label_json(r.label)}};
}

void emit(const json& j, const std::string& path, std::ostream& out) {
  const std::string text = dump_json(j) + "\n";
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw ModelError("cannot write '" + path + "'");
  f << text;
}

Vec parse_csv_vector(const std::string& text, const std::string& what) {
  std::vector<double> vals;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(',', pos);
    if (end == std::string::npos) end = text.size();
    std::string item = text.substr(pos, end - pos);
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw ModelError(what + ": empty component");
    item = item.substr(b, e - b + 1);
    double v = 0.0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (res.ec != std::errc() || res.ptr != item.data() + item.size() || !std::isfinite(v)) {
      throw ModelError(what + ": cannot read '" + item + "' as a number");
    }
    vals.push_back(v);
    pos = end + 1;
  }
  return Eigen::Map<const Vec>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

ScalarField resolve_field(const ModelFile& file, const std::string& omega_text, const std::optional<double>& kappa) {
  ScalarField f;
  if (!omega_text.empty()) {
    f.omega = parse(omega_text, file.model.dim());
  } else if (file.omega) {
    f.omega = *file.omega;
  } else {
    throw ModelError("omega missing: give --omega or an omega field in the model file");
  }
  if (kappa) {
    f.kappa = *kappa;
  } else if (file.kappa) {
    f.kappa = *file.kappa;
  } else {
    throw ModelError("kappa missing: give --kappa or a kappa field in the model file");
  }
  if (!std::isfinite(f.kappa)) throw ModelError("kappa must be finite");
  return f;
}

// Numerical failures carry a point; they are reported as JSON with exit 3.
struct Failure {
  std::string kind;
  std::string message;
  std::vector<double> point;
};

struct Context {
  std::ostream& out;
  std::ostream& err;
  std::string out_path;
  std::string command;
  json extra;   // seed and tolerances, echoed into failure reports
};

int numerical_failure(Context& ctx, const Error& e, const std::string& kind) {
  json j = header(ctx.command);
  j.update(ctx.extra);
  json pt = json::array();
  for (double v : e.point()) pt.push_back(v);
  j["error"] = {{"kind", kind}, {"message", e.what()}, {"point", pt}};
  j["pass"] = false;
  emit(j, ctx.out_path, ctx.out);
  ctx.err << "error: " << e.what() << "\n";
  return 3;
}

int guarded(Context& ctx, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ParseError& e) {
    ctx.err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ModelError& e) {
    ctx.err << "error: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    ctx.err << "error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    return numerical_failure(ctx, e, "domain");
  } catch (const DegenerateError& e) {
    return numerical_failure(ctx, e, "degenerate");
  }
}

struct VerifyArgs {
  std::string model, omega, out;
  std::optional<double> kappa;
  std::size_t samples = 200;
  std::uint64_t seed = 0;
  double residual_tol = 1e-6;
  double spread_tol = 1e-6;
  double census_tol = 1e-9;
  double case_tol = 1e-6;
};

int cmd_verify(Context& ctx, const VerifyArgs& a) {
  ctx.extra = {{"seed", a.seed},
               {"samples", a.samples},
               {"tolerances",
                {{"residual", a.residual_tol}, {"spread", a.spread_tol}, {"census", a.census_tol}, {"case", a.case_tol}}}};
  ctx.out_path = a.out;
  return guarded(ctx, [&] {
    const ModelFile file = load_model_file(a.model);
    const ScalarField f = resolve_field(file, a.omega, a.kappa);
    VerifyOptions opt;
    opt.census_tol = a.census_tol;
    opt.case_tol = a.case_tol;
    const ObataReport r = obata_verify(file.model, f, a.samples, a.seed, opt);
    const bool pass = r.max_residual <= a.residual_tol && r.h_spread <= a.spread_tol;
    json j = header("verify");
    j.update(ctx.extra);
    j["model"] = a.model;
    j["omega"] = print(f.omega);
    j["report"] = report_json(r);
    j["pass"] = pass;
    emit(j, ctx.out_path, ctx.out);
    return pass ? 0 : 1;
  });
}

struct GeodesicArgs {
  std::string model, x0, v0, omega, out;
  std::optional<double> kappa;
  double smax = 10.0;
  double tol = 1e-10;
  double sample_ds = 0.01;
  bool ambient = false;
};

int cmd_geodesic(Context& ctx, const GeodesicArgs& a) {
  ctx.extra = {{"tolerances", {{"ode", a.tol}}}, {"smax", a.smax}};
  // The CSV owns the output stream, so failure reports go to the error stream.
  Context fail{ctx.err, ctx.err, "", "geodesic", ctx.extra};
  return guarded(fail, [&] {
    const ModelFile file = load_model_file(a.model);
    const Vec x0 = parse_csv_vector(a.x0, "--x0");
    const Vec v0 = parse_csv_vector(a.v0, "--v0");
    GeodesicOptions opt;
    opt.tol = a.tol;
    opt.sample_ds = a.sample_ds;
    GeodesicTrajectory tr;
    if (a.ambient) {
      tr = integrate_ambient(file.model, x0, v0, a.smax, opt);
    } else {
      if (x0.size() != file.model.dim() || v0.size() != file.model.dim()) {
        throw ModelError("--x0 and --v0 need " + std::to_string(file.model.dim()) + " components");
      }
      tr = integrate(file.model, GeodesicState{x0, v0, 0.0}, a.smax, opt);
    }
    const bool with_field = !a.omega.empty() || a.kappa || (file.omega && file.kappa);
    if (with_field) attach_first_integral(tr, file.model, resolve_field(file, a.omega, a.kappa));

    if (a.out.empty()) {
      write_trajectory_csv(ctx.out, tr);
    } else {
      std::ofstream f(a.out);
      if (!f) throw ModelError("cannot write '" + a.out + "'");
      write_trajectory_csv(f, tr);
    }
    json j = header("geodesic");
    j.update(ctx.extra);
    j["termination"] = to_string(tr.termination);
    j["s_end"] = tr.s_end;
    j["s_star"] = tr.termination == Termination::budget_reached ? json(nullptr) : json(tr.s_end);
    j["ambient"] = tr.ambient;
    j["x_end"] = vec_json(tr.last.x);
    j["v_end"] = vec_json(tr.last.v);
    j["norm0"] = tr.norm0;
    j["norm_drift"] = tr.norm_drift;
    j["norm_drift_rel"] = tr.norm_drift_rel;
    if (tr.ambient) j["constraint_drift"] = tr.constraint_drift;
    if (tr.integral_drift) j["first_integral_drift"] = *tr.integral_drift;
    j["samples"] = tr.samples.size();
    ctx.err << dump_json(j, 0) << "\n";
    return 0;
  });
}

int cmd_classify(Context& ctx, double kappa, double h, double tol) {
  ctx.extra = {{"tolerances", {{"sign", tol}}}};
  return guarded(ctx, [&] {
    if (!std::isfinite(kappa) || !std::isfinite(h)) throw ModelError("kappa and h must be finite");
    json j = header("classify");
    j.update(ctx.extra);
    j["kappa"] = kappa;
    j["h"] = h;
    j["label"] = label_json(classify_case(kappa, h, tol));
    emit(j, ctx.out_path, ctx.out);
    return 0;
  });
}

struct ProbeArgs {
  std::string model, out;
  std::size_t samples = 50;
  double budget = 50.0;
  std::uint64_t seed = 0;
  double tol = 1e-10;
  bool forward_only = false;
};

int cmd_probe(Context& ctx, const ProbeArgs& a) {
  ctx.extra = {{"seed", a.seed}, {"samples", a.samples}, {"budget", a.budget}, {"tolerances", {{"ode", a.tol}}}};
  ctx.out_path = a.out;
  return guarded(ctx, [&] {
    const ModelFile file = load_model_file(a.model);
    if (!(a.budget > 0.0)) throw ModelError("--budget must be positive");
    ProbeSpec spec;
    spec.count = a.samples;
    spec.seed = a.seed;
    spec.s_budget = a.budget;
    spec.tol = a.tol;
    spec.both_directions = !a.forward_only;
    const ProbeSummary s = completeness_probe(file.model, spec);
    json esc = json::array();
    for (const EscapeRecord& e : s.escapes) {
      esc.push_back({{"index", e.index},
                     {"direction", e.direction},
                     {"x0", vec_json(e.x0)},
                     {"v0", vec_json(e.v0)},
                     {"s_star", e.s_star},
                     {"class", to_string(e.cls)},
                     {"cause", to_string(e.cause)}});
    }
    json j = header("probe");
    j.update(ctx.extra);
    j["model"] = a.model;
    j["both_directions"] = spec.both_directions;
    j["geodesics"] = s.geodesics;
    j["complete"] = s.complete;
    j["complete_fraction"] = s.complete_fraction;
    j["max_norm_drift"] = s.max_norm_drift;
    j["escapes"] = esc;
    emit(j, ctx.out_path, ctx.out);
    return 0;
  });
}

struct InstanceArgs {
  std::string tag, fiber, out;
  double kappa = 1.0;
  double h = 1.0;
  int half = 1;
  std::size_t samples = 100;
  std::uint64_t seed = 0;
};

int cmd_instance(Context& ctx, const InstanceArgs& a) {
  ctx.extra = {{"seed", a.seed}, {"samples", a.samples}, {"tolerances", {{"residual", 1e-8}, {"spread", 1e-7}}}};
  return guarded(ctx, [&] {
    InstanceOptions opt;
    opt.kappa = a.kappa;
    opt.h = a.h;
    opt.half = a.half;
    opt.samples = a.samples;
    opt.seed = a.seed;
    if (!a.fiber.empty()) opt.fiber = load_model_file(a.fiber).model;
    const InstanceBundle b = build_instance(a.tag, opt);
    ModelFile file;
    file.model = b.model;
    file.omega = b.field.omega;
    file.kappa = b.field.kappa;
    const json model = model_file_to_json(file);

    json rep = header("instance");
    rep.update(ctx.extra);
    rep["case"] = b.tag;
    rep["expected_h"] = b.expected_h;
    rep["report"] = report_json(b.report);
    bool pass = b.verified;
    if (!b.killing.empty()) {
      const double k = killing_check(b.model, b.killing, a.samples, a.seed);
      rep["killing_residual"] = k;
      pass = pass && k <= 1e-9;
    }
    rep["verified"] = pass;
    if (a.out.empty()) {
      emit(model, "", ctx.out);
      ctx.err << dump_json(rep, 0) << "\n";
    } else {
      emit(model, a.out, ctx.out);
      rep["file"] = a.out;
      emit(rep, "", ctx.out);
    }
    return pass ? 0 : 1;
  });
}

struct FoliationArgs {
  std::string model, out;
  std::vector<std::string> omegas;
  bool maximal = false;
  std::optional<double> kappa;
  std::size_t samples = 200;
  std::uint64_t seed = 0;
  double tol = 1e-6;
};

int cmd_foliation(Context& ctx, const FoliationArgs& a) {
  ctx.extra = {{"seed", a.seed}, {"samples", a.samples}, {"tolerances", {{"identity", a.tol}}}};
  ctx.out_path = a.out;
  return guarded(ctx, [&] {
    const ModelFile file = load_model_file(a.model);
    const MetricModel& m = file.model;
    std::vector<Expression> sys;
    if (a.maximal) sys = maximal_system(m);
    for (const std::string& t : a.omegas) sys.push_back(parse(t, m.dim()));
    if (sys.empty() && file.omega) sys.push_back(*file.omega);
    if (sys.empty()) throw ModelError("no functions: give --omegas, --maximal or an omega in the model file");
    double kappa = 0.0;
    if (a.kappa) {
      kappa = *a.kappa;
    } else if (file.kappa) {
      kappa = *file.kappa;
    } else {
      throw ModelError("kappa missing: give --kappa or a kappa field in the model file");
    }
    const std::size_t k = sys.size();

    double worst = 0.0;
    json funcs = json::array();
    for (const auto& e : sys) funcs.push_back(print(e));
    Mat bracket = Mat::Zero(k, k);
    Mat c = Mat::Zero(k, k);
    Mat spread = Mat::Zero(k, k);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t l = i; l < k; ++l) {
        if (l > i) {
          bracket(i, l) = bracket(l, i) = bracket_check(m, sys[i], sys[l], kappa, a.samples, a.seed);
          worst = std::max(worst, bracket(i, l));
        }
        const PairConstant pc = pair_constant_check(m, sys[i], sys[l], kappa, a.samples, a.seed);
        c(i, l) = c(l, i) = pc.c;
        spread(i, l) = spread(l, i) = pc.spread;
        worst = std::max(worst, pc.spread);
      }
    }
    const RankReport rank = gradient_rank(m, sys, a.samples, a.seed);
    json ranks = json::object();
    for (int r : rank.ranks) {
      const std::string key = std::to_string(r);
      ranks[key] = ranks.value(key, 0) + 1;
    }

    // Span curvature per pair at the samples where the span is a nondegenerate plane.
    json spans = json::array();
    const std::vector<Vec> pts = m.sample_points(a.samples, a.seed);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t l = i + 1; l < k; ++l) {
        double lo = kInf, hi = -kInf, sum = 0.0;
        std::size_t used = 0;
        for (const Vec& p : pts) {
          try {
            const double kk = span_curvature(m, p, sys[i], sys[l]);
            lo = std::min(lo, kk);
            hi = std::max(hi, kk);
            sum += kk;
            ++used;
          } catch (const DegenerateError&) {
          } catch (const DomainError&) {
          }
        }
        spans.push_back({{"pair", {i, l}},
                         {"evaluated", used},
                         {"skipped", pts.size() - used},
                         {"min", used ? json(lo) : json(nullptr)},
                         {"max", used ? json(hi) : json(nullptr)},
                         {"mean", used ? json(sum / static_cast<double>(used)) : json(nullptr)}});
      }
    }

    // Umbilicity of single level sets and of joint level sets of subsets below dim.
    json umb = json::array();
    const int n = m.dim();
    for (std::uint32_t mask = 1; mask < (1u << std::min<std::size_t>(k, 12)); ++mask) {
      const int bits = std::popcount(mask);
      if (bits >= n) continue;
      std::vector<Expression> sub;
      json idx = json::array();
      for (std::size_t i = 0; i < k; ++i) {
        if (mask & (1u << i)) {
          sub.push_back(sys[i]);
          idx.push_back(i);
        }
      }
      const UmbilicReport u = umbilic_check(m, sub, kappa, a.samples, a.seed);
      if (u.checked > 0) worst = std::max(worst, u.max_deviation);
      umb.push_back({{"functions", idx}, {"max_deviation", u.max_deviation}, {"checked", u.checked}, {"skipped", u.skipped}});
    }

    const bool pass = worst <= a.tol;
    json j = header("foliation");
    j.update(ctx.extra);
    j["model"] = a.model;
    j["kappa"] = kappa;
    j["functions"] = funcs;
    j["bracket_residual"] = mat_json(bracket);
    j["c"] = mat_json(c);
    j["c_spread"] = mat_json(spread);
    j["rank"] = {{"samples", rank.samples},
                 {"full_rank", rank.full_rank},
                 {"full_rank_fraction", rank.full_rank_fraction},
                 {"subsets_full", rank.subsets_full},
                 {"histogram", ranks}};
    j["span_curvature"] = spans;
    j["umbilicity"] = umb;
    j["max_identity_residual"] = worst;
    j["pass"] = pass;
    emit(j, ctx.out_path, ctx.out);
    return pass ? 0 : 1;
  });
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Obata equation toolkit: verification, geodesics, classification, instances"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);
  int threads = 0;
  app.add_option("--threads", threads, "Maximum worker threads (0: runtime default)")->check(CLI::NonNegativeNumber);

  Context ctx{out, err, "", "", json::object()};

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "Check Obata's equation and the first integral on samples");
  verify->add_option("--model", va.model, "Model file")->required();
  verify->add_option("--omega", va.omega, "Field expression (overrides the file)");
  verify->add_option("--kappa", va.kappa, "Constant kappa (overrides the file)");
  verify->add_option("--samples", va.samples, "Random samples")->capture_default_str();
  verify->add_option("--seed", va.seed, "Sampling seed")->capture_default_str();
  verify->add_option("--out", va.out, "Report path (stdout if absent)");
  verify->add_option("--residual-tol", va.residual_tol)->capture_default_str();
  verify->add_option("--spread-tol", va.spread_tol)->capture_default_str();
  verify->add_option("--census-tol", va.census_tol)->capture_default_str();
  verify->add_option("--case-tol", va.case_tol)->capture_default_str();

  GeodesicArgs ga;
  auto* geo = app.add_subcommand("geodesic", "Integrate one geodesic, CSV to the output, JSON footer to stderr");
  geo->add_option("--model", ga.model)->required();
  geo->add_option("--x0", ga.x0, "Start point, comma separated")->required();
  geo->add_option("--v0", ga.v0, "Start velocity, comma separated")->required();
  geo->add_option("--smax", ga.smax, "Affine parameter budget")->capture_default_str();
  geo->add_option("--tol", ga.tol)->capture_default_str();
  geo->add_option("--sample-ds", ga.sample_ds)->capture_default_str();
  geo->add_flag("--ambient", ga.ambient, "Quadric only: x0 and v0 are ambient coordinates");
  geo->add_option("--omega", ga.omega, "Record the first integral of this field");
  geo->add_option("--kappa", ga.kappa);
  geo->add_option("--out", ga.out, "CSV path (stdout if absent)");

  double ck = 0.0, ch = 0.0, ctol = 1e-9;
  std::string cout_path;
  auto* cls = app.add_subcommand("classify", "Type of the gradient and structure for (kappa, h)");
  cls->add_option("--kappa", ck)->required();
  cls->add_option("--h", ch)->required();
  cls->add_option("--tol", ctol, "Zero tolerance for the signs")->capture_default_str();
  cls->add_option("--out", cout_path);

  ProbeArgs pa;
  auto* probe = app.add_subcommand("probe", "Geodesic completeness probe");
  probe->add_option("--model", pa.model)->required();
  probe->add_option("--samples", pa.samples)->capture_default_str();
  probe->add_option("--budget", pa.budget)->capture_default_str();
  probe->add_option("--seed", pa.seed)->capture_default_str();
  probe->add_option("--tol", pa.tol)->capture_default_str();
  probe->add_flag("--forward-only", pa.forward_only);
  probe->add_option("--out", pa.out);

  InstanceArgs ia;
  auto* inst = app.add_subcommand("instance", "Build and self-verify a model for a (kappa, h) case");
  inst->add_option("--case", ia.tag)->required()->check(CLI::IsMember(instance_tags()));
  inst->add_option("--kappa", ia.kappa)->capture_default_str();
  inst->add_option("--h", ia.h)->capture_default_str();
  inst->add_option("--fiber", ia.fiber, "Fiber model file");
  inst->add_option("--half", ia.half, "Sign of omega for the exponential case")->check(CLI::IsMember({-1, 1}));
  inst->add_option("--samples", ia.samples)->capture_default_str();
  inst->add_option("--seed", ia.seed)->capture_default_str();
  inst->add_option("--out", ia.out, "Model file path (stdout if absent)");

  FoliationArgs fa;
  auto* fol = app.add_subcommand("foliation", "Bracket, pair-constant, rank and umbilicity checks for a system");
  fol->add_option("--model", fa.model)->required();
  fol->add_option("--omegas", fa.omegas, "Field expressions");
  fol->add_flag("--maximal", fa.maximal, "Quadric only: add the ambient coordinate functions");
  fol->add_option("--kappa", fa.kappa);
  fol->add_option("--samples", fa.samples)->capture_default_str();
  fol->add_option("--seed", fa.seed)->capture_default_str();
  fol->add_option("--tol", fa.tol)->capture_default_str();
  fol->add_option("--out", fa.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }
  if (threads > 0) omp_set_num_threads(threads);

  if (*verify) {
    ctx.command = "verify";
    return cmd_verify(ctx, va);
  }
  if (*geo) {
    ctx.command = "geodesic";
    return cmd_geodesic(ctx, ga);
  }
  if (*cls) {
    ctx.command = "classify";
    ctx.out_path = cout_path;
    return cmd_classify(ctx, ck, ch, ctol);
  }
  if (*probe) {
    ctx.command = "probe";
    return cmd_probe(ctx, pa);
  }
  if (*inst) {
    ctx.command = "instance";
    return cmd_instance(ctx, ia);
  }
  ctx.command = "foliation";
  return cmd_foliation(ctx, fa);
}

}  // namespace obata::cli
