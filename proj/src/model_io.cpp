#include "obata/model_io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "obata/errors.hpp"

namespace obata {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ModelError(where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) throw ModelError("unknown field '" + it.key() + "' in " + where);
  }
}

const json& need(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ModelError(std::string("missing field '") + key + "' in " + where);
  return j.at(key);
}

double number(const json& j, const std::string& what) {
  if (!j.is_number()) throw ModelError(what + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ModelError(what + " must be finite");
  return v;
}

int integer(const json& j, const std::string& what) {
  if (!j.is_number_integer()) throw ModelError(what + " must be an integer");
  return j.get<int>();
}

double bound(const json& j, double if_null, const std::string& what) {
  if (j.is_null()) return if_null;
  return number(j, what);
}

Signature signature(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2) throw ModelError(what + " must be [r, p]");
  Signature s{integer(j[0], what), integer(j[1], what)};
  if (s.r < 0 || s.p < 0 || s.dim() < 1) throw ModelError(what + " must have r, p >= 0 and r + p >= 1");
  return s;
}

Expression expression(const json& j, int dim, const std::string& what) {
  if (!j.is_string()) throw ModelError(what + " must be an expression string");
  return parse(j.get<std::string>(), dim);
}

Box box(const json& j, int dim, const std::string& what) {
  check_keys(j, {"lo", "hi"}, what);
  const json& lo = need(j, "lo", what);
  const json& hi = need(j, "hi", what);
  if (!lo.is_array() || !hi.is_array() || static_cast<int>(lo.size()) != dim || static_cast<int>(hi.size()) != dim) {
    throw ModelError(what + " bounds must be arrays of length " + std::to_string(dim));
  }
  Box b;
  for (int i = 0; i < dim; ++i) {
    b.lo.push_back(bound(lo[i], -kInf, what));
    b.hi.push_back(bound(hi[i], kInf, what));
    if (!(b.lo[i] < b.hi[i])) throw ModelError(what + " has an empty side");
  }
  return b;
}

MetricModel model_node(const json& j, bool top, ModelFile* file) {
  const std::string where = top ? "model" : "fiber";
  std::set<std::string> common = {"type", "dimension", "signature", "domain", "sample_box"};
  if (top) common.insert({"schema", "omega", "kappa", "omega_linear"});
  const std::string type = need(j, "type", where).is_string() ? j.at("type").get<std::string>() : "";
  std::set<std::string> allowed = common;
  if (type == "quadric") {
    allowed.insert({"ambient_signature", "level", "chart", "min_radicand_fraction"});
  } else if (type == "warped") {
    allowed.insert({"base_sign", "alpha", "t_interval", "fiber"});
  } else if (type == "custom") {
    allowed.insert("entries");
  } else if (type != "flat") {
    throw ModelError(where + " type must be one of flat, quadric, warped, custom");
  }
  check_keys(j, allowed, where);
  const int dim = integer(need(j, "dimension", where), where + " dimension");
  if (dim < 1) throw ModelError(where + " dimension must be positive");
  const Signature sig = signature(need(j, "signature", where), where + " signature");
  if (sig.dim() != dim) throw ModelError(where + " signature does not add up to the dimension");

  MetricModel m = MetricModel::flat(sig);
  if (type == "quadric") {
    const Signature amb = signature(need(j, "ambient_signature", where), "ambient_signature");
    const double level = number(need(j, "level", where), "level");
    const json& chart = need(j, "chart", where);
    check_keys(chart, {"solved_axis", "branch"}, "chart");
    const int axis = integer(need(chart, "solved_axis", "chart"), "solved_axis");
    const int branch = integer(need(chart, "branch", "chart"), "branch");
    const double frac = j.contains("min_radicand_fraction") ? number(j.at("min_radicand_fraction"), "min_radicand_fraction") : 0.01;
    if (amb.dim() != dim + 1) throw ModelError("quadric ambient dimension must be dimension + 1");
    m = MetricModel::quadric(amb, level, axis, branch, frac);
    if (m.signature() != sig) throw ModelError("declared signature does not match the quadric");
  } else if (type == "warped") {
    const int eps = integer(need(j, "base_sign", where), "base_sign");
    const Expression alpha = expression(need(j, "alpha", where), 1, "alpha");
    double lo = -kInf;
    double hi = kInf;
    if (j.contains("t_interval")) {
      const json& ti = j.at("t_interval");
      if (!ti.is_array() || ti.size() != 2) throw ModelError("t_interval must be [lo, hi]");
      lo = bound(ti[0], -kInf, "t_interval");
      hi = bound(ti[1], kInf, "t_interval");
    }
    MetricModel fiber = model_node(need(j, "fiber", where), false, nullptr);
    if (fiber.dim() != dim - 1) throw ModelError("fiber dimension must be dimension - 1");
    m = MetricModel::warped(eps, alpha, std::move(fiber), lo, hi);
    if (m.signature() != sig) throw ModelError("declared signature does not match base sign and fiber");
  } else if (type == "custom") {
    const json& e = need(j, "entries", where);
    if (!e.is_array() || static_cast<int>(e.size()) != dim) throw ModelError("entries must be a dimension x dimension matrix");
    std::vector<std::vector<Expression>> entries(dim);
    for (int i = 0; i < dim; ++i) {
      if (!e[i].is_array() || static_cast<int>(e[i].size()) != dim) {
        throw ModelError("entries must be a dimension x dimension matrix");
      }
      for (int k = 0; k < dim; ++k) entries[i].push_back(expression(e[i][k], dim, "entries"));
    }
    m = MetricModel::custom(sig, entries);
  }
  if (j.contains("domain")) m = m.with_domain(box(j.at("domain"), dim, "domain"));
  if (j.contains("sample_box")) m = m.with_sample_box(box(j.at("sample_box"), dim, "sample_box"));

  if (top && file) {
    if (j.contains("schema")) {
      if (!j.at("schema").is_number_integer() || j.at("schema").get<int>() != 1) throw ModelError("schema must be 1");
    } else {
      throw ModelError("missing field 'schema' in model");
    }
    if (j.contains("omega") && j.contains("omega_linear")) throw ModelError("give either omega or omega_linear");
    if (j.contains("omega")) file->omega = expression(j.at("omega"), dim, "omega");
    if (j.contains("omega_linear")) {
      if (type != "quadric") throw ModelError("omega_linear needs a quadric model");
      const json& c = j.at("omega_linear");
      if (!c.is_array() || static_cast<int>(c.size()) != dim + 1) throw ModelError("omega_linear needs dimension + 1 coefficients");
      std::vector<double> coeffs;
      for (const auto& v : c) coeffs.push_back(number(v, "omega_linear"));
      file->omega_linear = coeffs;
      file->omega = restrict_linear(m, coeffs);
    }
    if (j.contains("kappa")) file->kappa = number(j.at("kappa"), "kappa");
  }
  validate_model(m);
  return m;
}

json bound_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json box_json(const Box& b) {
  json lo = json::array();
  json hi = json::array();
  for (int i = 0; i < b.dim(); ++i) {
    lo.push_back(bound_json(b.lo[i]));
    hi.push_back(bound_json(b.hi[i]));
  }
  return json{{"lo", lo}, {"hi", hi}};
}

bool restricted(const Box& b) {
  for (int i = 0; i < b.dim(); ++i) {
    if (std::isfinite(b.lo[i]) || std::isfinite(b.hi[i])) return true;
  }
  return false;
}

json node_json(const MetricModel& m) {
  json j;
  const Signature s = m.signature();
  j["dimension"] = m.dim();
  j["signature"] = {s.r, s.p};
  switch (m.kind()) {
    case MetricModel::Kind::flat:
      j["type"] = "flat";
      break;
    case MetricModel::Kind::quadric: {
      const auto& q = m.quadric_data();
      j["type"] = "quadric";
      j["ambient_signature"] = {q.ambient.r, q.ambient.p};
      j["level"] = q.level;
      j["chart"] = {{"solved_axis", q.solved_axis}, {"branch", q.branch}};
      j["min_radicand_fraction"] = q.min_radicand / std::fabs(q.level);
      break;
    }
    case MetricModel::Kind::warped: {
      const auto& w = m.warped_data();
      j["type"] = "warped";
      j["base_sign"] = w.base_sign;
      j["alpha"] = print(w.alpha);
      j["t_interval"] = {bound_json(w.t_lo), bound_json(w.t_hi)};
      j["fiber"] = node_json(*w.fiber);
      break;
    }
    case MetricModel::Kind::custom: {
      const auto& c = m.custom_data();
      j["type"] = "custom";
      json rows = json::array();
      for (int i = 0; i < m.dim(); ++i) {
        json row = json::array();
        for (int k = 0; k < m.dim(); ++k) row.push_back(print(c.entries[i * m.dim() + k]));
        rows.push_back(row);
      }
      j["entries"] = rows;
      break;
    }
  }
  if (m.kind() != MetricModel::Kind::warped && restricted(m.domain_box())) j["domain"] = box_json(m.domain_box());
  if (m.explicit_sample_box()) j["sample_box"] = box_json(*m.explicit_sample_box());
  return j;
}

}  // namespace

ModelFile model_from_json(const json& j) {
  ModelFile f;
  f.model = model_node(j, true, &f);
  return f;
}

ModelFile parse_model_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ModelError(std::string("invalid JSON: ") + e.what());
  }
  return model_from_json(j);
}

ModelFile load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_model_text(ss.str());
}

json model_to_json(const MetricModel& m) {
  json j = node_json(m);
  j["schema"] = 1;
  return j;
}

json model_file_to_json(const ModelFile& f) {
  json j = model_to_json(f.model);
  if (f.omega_linear) {
    j["omega_linear"] = *f.omega_linear;
  } else if (f.omega) {
    j["omega"] = print(*f.omega);
  }
  if (f.kappa) j["kappa"] = *f.kappa;
  return j;
}

}  // namespace obata
