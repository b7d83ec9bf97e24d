#include "shearfront/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include <openssl/evp.h>

#define TOML_EXCEPTIONS 1
#include "tomlplusplus/toml.hpp"

#ifndef SHEARFRONT_VERSION
#define SHEARFRONT_VERSION "unknown"
#endif

namespace shearfront {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// config

namespace {

// Walks one JSON object, remembering which keys were read so that unknown
// (usually misspelt) keys can be rejected.
class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }

  const Json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key, double def, bool required = false) {
    if (!has(key)) {
      if (required) throw ConfigError(sub(key), "required field missing");
      return def;
    }
    const Json& v = raw(key);
    if (!v.is_number()) throw ConfigError(sub(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(sub(key), "must be finite");
    return x;
  }

  int integer(const std::string& key, int def) {
    if (!has(key)) return def;
    const Json& v = raw(key);
    if (!v.is_number_integer()) throw ConfigError(sub(key), "expected an integer");
    return v.get<int>();
  }

  bool boolean(const std::string& key, bool def) {
    if (!has(key)) return def;
    const Json& v = raw(key);
    if (!v.is_boolean()) throw ConfigError(sub(key), "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& def, bool required = false) {
    if (!has(key)) {
      if (required) throw ConfigError(sub(key), "required field missing");
      return def;
    }
    const Json& v = raw(key);
    if (!v.is_string()) throw ConfigError(sub(key), "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, const std::vector<double>& def, bool required = false) {
    if (!has(key)) {
      if (required) throw ConfigError(sub(key), "required field missing");
      return def;
    }
    const Json& v = raw(key);
    if (!v.is_array()) throw ConfigError(sub(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (!v[k].is_number()) throw ConfigError(sub(key) + "[" + std::to_string(k) + "]", "expected a number");
      out.push_back(v[k].get<double>());
      if (!std::isfinite(out.back())) throw ConfigError(sub(key) + "[" + std::to_string(k) + "]", "must be finite");
    }
    return out;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(sub(it.key()), "unknown field");
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

// A route may be given as true/false or as an object with "enabled".
bool route_enabled(Reader& routes, const std::string& key, const Json** body) {
  *body = nullptr;
  if (!routes.has(key)) return false;
  const Json& v = routes.raw(key);
  if (v.is_boolean()) return v.get<bool>();
  if (!v.is_object()) throw ConfigError(routes.sub(key), "expected true, false or an object");
  *body = &v;
  return v.contains("enabled") ? (v.at("enabled").is_boolean() ? v.at("enabled").get<bool>() : throw ConfigError(routes.sub(key) + ".enabled", "expected true or false")) : true;
}

void require_ascending(const std::vector<double>& v, const std::string& path, double min_value, bool strict_min) {
  for (std::size_t k = 0; k < v.size(); ++k) {
    const bool ok_min = strict_min ? v[k] > min_value : v[k] >= min_value;
    if (!ok_min) throw ConfigError(path + "[" + std::to_string(k) + "]", "out of range");
    if (k > 0 && !(v[k] > v[k - 1])) throw ConfigError(path + "[" + std::to_string(k) + "]", "must be strictly ascending");
  }
}

Json to_array(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(x);
  return a;
}

}  // namespace

ExperimentConfig parse_config(const Json& doc) {
  ExperimentConfig c;
  Reader root(doc, "");
  c.name = root.string("name", "experiment");

  if (!root.has("flow")) throw ConfigError("flow", "required field missing");
  {
    Reader r(root.raw("flow"), "flow");
    c.flow.type = r.string("type", "", true);
    if (c.flow.type == "cosine") {
      c.flow.k = r.integer("k", 1);
      c.flow.amplitude = r.number("amplitude", 1.0);
      c.flow.offset = r.number("offset", 0.0);
      if (c.flow.k < 1) throw ConfigError("flow.k", "must be >= 1");
    } else if (c.flow.type == "custom") {
      c.flow.samples = r.numbers("samples", {}, true);
    } else if (c.flow.type != "zero" && c.flow.type != "two_mode") {
      throw ConfigError("flow.type", "unknown flow '" + c.flow.type + "' (zero, cosine, two_mode, custom)");
    }
    r.finish();
  }

  if (!root.has("reaction")) throw ConfigError("reaction", "required field missing");
  {
    Reader r(root.raw("reaction"), "reaction");
    c.reaction.type = r.string("type", "", true);
    if (c.reaction.type == "ignition") {
      c.reaction.theta = r.number("theta", 0.25);
      if (!(c.reaction.theta > 0.0 && c.reaction.theta < 1.0)) throw ConfigError("reaction.theta", "must lie in (0, 1)");
    } else if (c.reaction.type == "kpp" || c.reaction.type == "cutoff") {
      c.reaction.fprime0 = r.number("fprime0", 1.0);
      c.reaction.form = r.string("form", "logistic");
      if (!(c.reaction.fprime0 > 0.0)) throw ConfigError("reaction.fprime0", "must be positive");
      if (c.reaction.form != "logistic" && c.reaction.form != "cubic") {
        throw ConfigError("reaction.form", "unknown form '" + c.reaction.form + "' (logistic, cubic)");
      }
      if (c.reaction.type == "cutoff") {
        c.reaction.theta_prime = r.number("theta_prime", 0.0, true);
        if (!(c.reaction.theta_prime > 0.0 && c.reaction.theta_prime <= 0.25)) {
          throw ConfigError("reaction.theta_prime", "must lie in (0, 1/4]");
        }
      }
    } else {
      throw ConfigError("reaction.type", "unknown reaction '" + c.reaction.type + "' (ignition, kpp, cutoff)");
    }
    r.finish();
  }

  if (root.has("grid")) {
    Reader r(root.raw("grid"), "grid");
    c.grid.dim = r.integer("dim", 1);
    c.grid.points = r.integer("points", 64);
    c.grid.n_x = r.integer("n_x", 961);
    r.finish();
  }
  if (c.grid.dim != 1 && c.grid.dim != 2) throw ConfigError("grid.dim", "must be 1 or 2");
  if (c.grid.points < 8) throw ConfigError("grid.points", "must be >= 8");
  if (c.grid.n_x < 64) throw ConfigError("grid.n_x", "must be >= 64");
  if (c.flow.type == "custom") {
    const std::size_t expect = c.grid.dim == 1 ? c.grid.points : static_cast<std::size_t>(c.grid.points) * c.grid.points;
    if (c.flow.samples.size() != expect) {
      throw ConfigError("flow.samples", "expected " + std::to_string(expect) + " values, got " +
                                            std::to_string(c.flow.samples.size()));
    }
  }

  c.A_schedule = root.numbers("A_schedule", {});
  require_ascending(c.A_schedule, "A_schedule", 1.0, false);

  const bool has_theta = c.reaction.type != "kpp";
  if (!root.has("routes")) throw ConfigError("routes", "required field missing");
  {
    Reader routes(root.raw("routes"), "routes");
    const Json* body = nullptr;
    c.sweep = route_enabled(routes, "sweep", &body);
    if (body) {
      Reader r(*body, "routes.sweep");
      r.boolean("enabled", true);
      c.certificate = r.boolean("certificate", true);
      c.barrier_A = r.number("barrier_A", 0.0);
      c.gauge_A = r.number("gauge_A", 0.0);
      r.finish();
    }
    if (c.sweep) {
      if (!has_theta) throw ConfigError("routes.sweep", "needs a reaction with theta > 0 (ignition or cutoff)");
      if (c.A_schedule.empty()) throw ConfigError("A_schedule", "required when the sweep is enabled");
      for (double a : {c.barrier_A, c.gauge_A}) {
        if (a != 0.0 && std::find(c.A_schedule.begin(), c.A_schedule.end(), a) == c.A_schedule.end()) {
          throw ConfigError("routes.sweep", "barrier_A and gauge_A must be entries of A_schedule");
        }
      }
    }

    c.viscosity = route_enabled(routes, "viscosity", &body);
    if (body) {
      Reader r(*body, "routes.viscosity");
      r.boolean("enabled", true);
      c.viscosity_schedule = r.numbers("schedule", {});
      r.finish();
    }
    if (c.viscosity) {
      if (!has_theta) throw ConfigError("routes.viscosity", "needs a reaction with theta > 0 (ignition or cutoff)");
      if (c.viscosity_schedule.empty()) {
        const std::size_t n = c.A_schedule.size();
        c.viscosity_schedule.assign(c.A_schedule.begin() + static_cast<long>(n - std::min<std::size_t>(n, 4)),
                                    c.A_schedule.end());
      }
      if (c.viscosity_schedule.size() < 2) throw ConfigError("routes.viscosity.schedule", "needs >= 2 amplitudes");
      require_ascending(c.viscosity_schedule, "routes.viscosity.schedule", 1.0, false);
    }

    c.cutoff = route_enabled(routes, "cutoff", &body);
    if (body) {
      Reader r(*body, "routes.cutoff");
      r.boolean("enabled", true);
      c.theta_primes = r.numbers("theta_primes", {0.25, 0.125, 0.0625, 0.03125, 0.015625, 0.0078125, 0.00390625});
      c.cutoff_schedule = r.numbers("schedule", {16, 32, 64, 128});
      const std::string model = r.string("model", "log_expansion");
      if (model == "log_expansion") {
        c.cutoff_model = CutoffModel::log_expansion;
      } else if (model == "geometric") {
        c.cutoff_model = CutoffModel::geometric;
      } else {
        throw ConfigError("routes.cutoff.model", "unknown model '" + model + "' (log_expansion, geometric)");
      }
      r.finish();
    } else if (c.cutoff) {
      c.theta_primes = {0.25, 0.125, 0.0625, 0.03125, 0.015625, 0.0078125, 0.00390625};
      c.cutoff_schedule = {16, 32, 64, 128};
    }
    if (c.cutoff) {
      if (c.reaction.type != "kpp") throw ConfigError("routes.cutoff", "needs a kpp reaction");
      if (c.theta_primes.size() < 3) throw ConfigError("routes.cutoff.theta_primes", "needs >= 3 levels");
      for (std::size_t k = 0; k < c.theta_primes.size(); ++k) {
        const std::string p = "routes.cutoff.theta_primes[" + std::to_string(k) + "]";
        if (!(c.theta_primes[k] > 0.0 && c.theta_primes[k] <= 0.25)) throw ConfigError(p, "must lie in (0, 1/4]");
        if (k > 0 && !(c.theta_primes[k] < c.theta_primes[k - 1])) throw ConfigError(p, "must be strictly descending");
      }
      if (c.cutoff_schedule.size() < 2) throw ConfigError("routes.cutoff.schedule", "needs >= 2 amplitudes");
      require_ascending(c.cutoff_schedule, "routes.cutoff.schedule", 1.0, false);
    }

    c.kpp_formula = route_enabled(routes, "kpp_formula", &body);
    if (body) {
      Reader r(*body, "routes.kpp_formula");
      r.boolean("enabled", true);
      r.finish();
    }
    if (c.kpp_formula && c.reaction.type != "kpp") throw ConfigError("routes.kpp_formula", "needs a kpp reaction");

    c.asymptotic = route_enabled(routes, "asymptotic", &body);
    c.M_list = {1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0, 1000.0};
    if (body) {
      Reader r(*body, "routes.asymptotic");
      r.boolean("enabled", true);
      c.M_list = r.numbers("M", c.M_list);
      r.finish();
    }
    if (c.asymptotic) {
      if (c.reaction.type != "kpp") throw ConfigError("routes.asymptotic", "needs a kpp reaction");
      if (c.M_list.size() < 2) throw ConfigError("routes.asymptotic.M", "needs >= 2 values");
      require_ascending(c.M_list, "routes.asymptotic.M", 0.0, true);
    }

    c.lipschitz = route_enabled(routes, "lipschitz", &body);
    if (body) {
      Reader r(*body, "routes.lipschitz");
      r.boolean("enabled", true);
      c.lipschitz_shift = r.number("shift", 0.05);
      r.finish();
    }
    if (c.lipschitz) {
      if (!c.sweep) throw ConfigError("routes.lipschitz", "needs the sweep route");
      if (!(c.lipschitz_shift > 0.0)) throw ConfigError("routes.lipschitz.shift", "must be positive");
    }
    routes.finish();
  }
  if (!(c.sweep || c.viscosity || c.cutoff || c.kpp_formula || c.asymptotic)) {
    throw ConfigError("routes", "no route enabled");
  }

  if (root.has("tolerances")) {
    Reader r(root.raw("tolerances"), "tolerances");
    Tolerances& t = c.tol;
    t.newton = r.number("newton", t.newton);
    t.tol_bc = r.number("tol_bc", t.tol_bc);
    t.identity_reaction = r.number("identity_reaction", t.identity_reaction);
    t.identity_energy = r.number("identity_energy", t.identity_energy);
    t.monotone = r.number("monotone", t.monotone);
    t.gauge = r.number("gauge", t.gauge);
    t.bound_slack = r.number("bound_slack", t.bound_slack);
    t.zero_flow_invariance = r.number("zero_flow_invariance", t.zero_flow_invariance);
    t.certificate_rel = r.number("certificate_rel", t.certificate_rel);
    t.certificate_slack = r.number("certificate_slack", t.certificate_slack);
    t.fit_rel = r.number("fit_rel", t.fit_rel);
    t.limit_identity = r.number("limit_identity", t.limit_identity);
    t.lipschitz_slack = r.number("lipschitz_slack", t.lipschitz_slack);
    t.route_rel = r.number("route_rel", t.route_rel);
    t.asymptotic_large = r.number("asymptotic_large", t.asymptotic_large);
    t.asymptotic_slope_rel = r.number("asymptotic_slope_rel", t.asymptotic_slope_rel);
    r.finish();
    if (!(t.newton > 0.0 && t.tol_bc > t.newton)) throw ConfigError("tolerances", "need 0 < newton < tol_bc");
  }

  if (root.has("output")) {
    Reader r(root.raw("output"), "output");
    c.output_dir = r.string("dir", c.output_dir);
    c.cache = r.boolean("cache", c.cache);
    c.dump_profiles = r.boolean("dump_profiles", c.dump_profiles);
    r.finish();
  }
  root.finish();

  Json flow{{"type", c.flow.type}};
  if (c.flow.type == "cosine") {
    flow["k"] = c.flow.k;
    flow["amplitude"] = c.flow.amplitude;
    flow["offset"] = c.flow.offset;
  } else if (c.flow.type == "custom") {
    flow["samples"] = to_array(c.flow.samples);
  }
  Json reaction{{"type", c.reaction.type}};
  if (c.reaction.type == "ignition") {
    reaction["theta"] = c.reaction.theta;
  } else {
    reaction["fprime0"] = c.reaction.fprime0;
    reaction["form"] = c.reaction.form;
    if (c.reaction.type == "cutoff") reaction["theta_prime"] = c.reaction.theta_prime;
  }
  const Tolerances& t = c.tol;
  c.canonical = Json{
      {"name", c.name},
      {"flow", flow},
      {"reaction", reaction},
      {"grid", {{"dim", c.grid.dim}, {"points", c.grid.points}, {"n_x", c.grid.n_x}}},
      {"A_schedule", to_array(c.A_schedule)},
      {"routes",
       {{"sweep", {{"enabled", c.sweep}, {"certificate", c.certificate}, {"barrier_A", c.barrier_A}, {"gauge_A", c.gauge_A}}},
        {"viscosity", {{"enabled", c.viscosity}, {"schedule", to_array(c.viscosity_schedule)}}},
        {"cutoff",
         {{"enabled", c.cutoff},
          {"theta_primes", to_array(c.theta_primes)},
          {"schedule", to_array(c.cutoff_schedule)},
          {"model", to_string(c.cutoff_model)}}},
        {"kpp_formula", {{"enabled", c.kpp_formula}}},
        {"asymptotic", {{"enabled", c.asymptotic}, {"M", to_array(c.M_list)}}},
        {"lipschitz", {{"enabled", c.lipschitz}, {"shift", c.lipschitz_shift}}}}},
      {"tolerances",
       {{"newton", t.newton},
        {"tol_bc", t.tol_bc},
        {"identity_reaction", t.identity_reaction},
        {"identity_energy", t.identity_energy},
        {"monotone", t.monotone},
        {"gauge", t.gauge},
        {"bound_slack", t.bound_slack},
        {"zero_flow_invariance", t.zero_flow_invariance},
        {"certificate_rel", t.certificate_rel},
        {"certificate_slack", t.certificate_slack},
        {"fit_rel", t.fit_rel},
        {"limit_identity", t.limit_identity},
        {"lipschitz_slack", t.lipschitz_slack},
        {"route_rel", t.route_rel},
        {"asymptotic_large", t.asymptotic_large},
        {"asymptotic_slope_rel", t.asymptotic_slope_rel}}},
      {"output", {{"dir", c.output_dir}, {"cache", c.cache}, {"dump_profiles", c.dump_profiles}}}};
  return c;
}

namespace {

Json toml_to_json(const toml::node& node) {
  if (const auto* t = node.as_table()) {
    Json j = Json::object();
    for (const auto& [k, v] : *t) j[std::string(k.str())] = toml_to_json(v);
    return j;
  }
  if (const auto* a = node.as_array()) {
    Json j = Json::array();
    for (const auto& v : *a) j.push_back(toml_to_json(v));
    return j;
  }
  if (const auto* v = node.as_string()) return Json(v->get());
  if (const auto* v = node.as_integer()) return Json(v->get());
  if (const auto* v = node.as_floating_point()) return Json(v->get());
  if (const auto* v = node.as_boolean()) return Json(v->get());
  const auto& src = node.source();
  throw ConfigError(std::to_string(src.begin.line) + ":" + std::to_string(src.begin.column),
                    "unsupported TOML value (dates and times are not config values)");
}

}  // namespace

Json config_document(const std::string& text, bool toml_format, const std::string& origin) {
  if (toml_format) {
    try {
      return toml_to_json(toml::parse(text, origin));
    } catch (const toml::parse_error& e) {
      const auto& src = e.source();
      throw ConfigError(origin + ":" + std::to_string(src.begin.line) + ":" + std::to_string(src.begin.column),
                        std::string("syntax error: ") + std::string(e.description()));
    }
  }
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t k = 0; k + 1 < e.byte && k < text.size(); ++k) {
      if (text[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(col), "syntax error");
  }
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), "cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(config_document(ss.str(), path.extension() == ".toml", path.string()));
}

FlowProfile make_flow(const FlowSpec& spec, const TorusGrid& torus) {
  if (spec.type == "zero") return flows::zero(torus);
  if (spec.type == "cosine") return flows::cosine(torus, spec.k, spec.amplitude, spec.offset);
  if (spec.type == "two_mode") return flows::two_mode(torus);
  if (spec.type == "custom") {
    if (spec.samples.size() != torus.size()) {
      throw InputError("custom flow samples do not match the torus grid (no interpolation under --grid-refine)");
    }
    return normalize_flow(torus, spec.samples);
  }
  throw InputError("unknown flow type " + spec.type);
}

Reaction make_reaction(const ReactionSpec& spec) {
  if (spec.type == "ignition") return Reaction::ignition(spec.theta);
  if (spec.type == "kpp") return Reaction::kpp(spec.fprime0, spec.form);
  if (spec.type == "cutoff") return make_cutoff(Reaction::kpp(spec.fprime0, spec.form), spec.theta_prime);
  throw InputError("unknown reaction type " + spec.type);
}

// ---------------------------------------------------------------------------
// fits and checks

AsymptoteFit fit_asymptote(const std::vector<double>& A, const std::vector<double>& c) {
  if (A.size() != c.size()) throw InputError("fit_asymptote: size mismatch");
  const std::size_t n = A.size();
  if (n < 3) throw InputError("fit_asymptote: need at least three entries");
  const std::size_t m = std::max<std::size_t>(3, (n + 1) / 2);
  const std::size_t first = n - m;
  double sa = 0.0, sc = 0.0;
  for (std::size_t k = first; k < n; ++k) {
    sa += A[k];
    sc += c[k];
  }
  const double ma = sa / m, mc = sc / m;
  double saa = 0.0, sac = 0.0;
  for (std::size_t k = first; k < n; ++k) {
    saa += (A[k] - ma) * (A[k] - ma);
    sac += (A[k] - ma) * (c[k] - mc);
  }
  if (!(saa > 1e-14 * ma * ma)) throw InputError("fit_asymptote: singular normal equations");
  AsymptoteFit f;
  f.used = m;
  f.gamma = sac / saa;
  f.intercept = mc - f.gamma * ma;
  double ssr = 0.0;
  for (std::size_t k = first; k < n; ++k) {
    const double r = c[k] - (f.gamma * A[k] + f.intercept);
    ssr += r * r;
  }
  f.residual = std::sqrt(ssr / m);
  f.gamma_stderr = std::sqrt(ssr / (m - 2) / saa);
  return f;
}

AsymptoteFit fit_asymptote(const SpeedCurve& curve) {
  std::vector<double> A, c;
  for (const auto& e : curve.entries) {
    A.push_back(e.A);
    c.push_back(e.c_star - e.A * (e.solution ? e.solution->flow.beta() : 0.0));
  }
  return fit_asymptote(A, c);
}

Json make_check(const std::string& name, bool pass, double value, double limit, double margin,
                const std::string& detail) {
  Json j{{"name", name},
         {"status", pass ? "pass" : "fail"},
         {"value", number(value)},
         {"limit", number(limit)},
         {"margin", number(margin)}};
  if (!detail.empty()) j["detail"] = detail;
  return j;
}

namespace {

std::string fmt_A(double A) {
  std::ostringstream os;
  os << A;
  return os.str();
}

double get(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.at(key).get<double>();
}

}  // namespace

Json verify_bounds(const Json& sweep, double alpha_max, bool zero_flow, double c0, const Tolerances& tol) {
  Json checks = Json::array();
  const Json& entries = sweep.at("entries");
  if (entries.empty()) return checks;
  for (const Json& e : entries) {
    const double A = get(e, "A"), g = get(e, "gamma_A");
    checks.push_back(make_check("bounds.lower[A=" + fmt_A(A) + "]", g >= -tol.bound_slack, g, 0.0, g));
    const double upper = alpha_max + c0 / A;
    checks.push_back(make_check("bounds.upper[A=" + fmt_A(A) + "]", g <= upper + tol.bound_slack, g, upper, upper - g));
  }
  const Json& last = entries.back();
  const double g_last = get(last, "gamma_A");
  if (!zero_flow) {
    checks.push_back(make_check("bounds.strict_positive[A=" + fmt_A(get(last, "A")) + "]", g_last > 0.0, g_last, 0.0,
                                g_last, "margin is gamma_A - int alpha"));
  } else {
    const double top = c0 / get(last, "A");
    checks.push_back(make_check("bounds.zero_flow_at_top[A=" + fmt_A(get(last, "A")) + "]",
                                std::abs(g_last - top) <= tol.zero_flow_invariance * top + tol.bound_slack, g_last, top,
                                tol.zero_flow_invariance * top - std::abs(g_last - top)));
  }
  // Tail: successive increments shrink over the top half of the schedule.
  const std::size_t n = entries.size();
  if (n >= 3) {
    const std::size_t first = n - std::max<std::size_t>(3, (n + 1) / 2);
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t k = first; k + 2 < n; ++k) {
      const double d0 = std::abs(get(entries[k + 1], "gamma_A") - get(entries[k], "gamma_A"));
      const double d1 = std::abs(get(entries[k + 2], "gamma_A") - get(entries[k + 1], "gamma_A"));
      worst = std::max(worst, d1 - d0);
    }
    checks.push_back(make_check("bounds.tail_convergence", worst <= tol.bound_slack, worst, tol.bound_slack,
                                tol.bound_slack - worst, "largest growth of successive |gamma_A| increments"));
  }
  return checks;
}

Json asymptotic_regime_checks(const FlowProfile& flow, double fprime0, const std::vector<double>& M_list,
                              const Tolerances& tol) {
  Json entries = Json::array();
  std::vector<double> values;
  for (double M : M_list) {
    const KppLimitResult r = kpp_limit_speed_detail(flow, M * fprime0);
    values.push_back(r.value);
    Json e = to_json(r);
    e["M"] = M;
    entries.push_back(std::move(e));
  }
  const double slope = small_amplitude_slope(flow, fprime0);
  Json out{{"fprime0", fprime0}, {"entries", entries}, {"small_amplitude_slope", number(slope)}};
  Json checks = Json::array();
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < values.size(); ++k) worst = std::min(worst, values[k] - values[k - 1]);
  checks.push_back(make_check("asymptotic.monotone_in_M", worst >= -tol.bound_slack, worst, 0.0, worst,
                              "smallest increment of the value over the M list"));
  const double large = values.back() / flow.alpha_max();
  checks.push_back(make_check("asymptotic.large_M[M=" + fmt_A(M_list.back()) + "]", large > tol.asymptotic_large, large,
                              tol.asymptotic_large, large - tol.asymptotic_large, "value / max alpha"));
  const double ratio = values.front() / std::sqrt(M_list.front());
  const double rel = std::abs(ratio / slope - 1.0);
  checks.push_back(make_check("asymptotic.small_M_slope[M=" + fmt_A(M_list.front()) + "]",
                              rel <= tol.asymptotic_slope_rel, ratio, slope, tol.asymptotic_slope_rel - rel,
                              "value / sqrt(M) against the closed-form slope"));
  out["checks"] = checks;
  return out;
}

Json build_checks(const Json& report) {
  const ExperimentConfig cfg = parse_config(report.at("config"));
  const Tolerances& tol = cfg.tol;
  const Json& sec = report.at("sections");
  Json checks = Json::array();
  auto add = [&](Json c) { checks.push_back(std::move(c)); };

  const Json* ref = sec.contains("reference") ? &sec.at("reference") : nullptr;
  const bool zero_flow = ref && ref->at("zero_flow").get<bool>();
  const bool constant_flow = ref && ref->at("constant_flow").get<bool>();
  const double alpha_max = ref ? get(*ref, "alpha_max") : std::numeric_limits<double>::quiet_NaN();

  auto in_range = [&](const std::string& name, const Json& est) {
    const double v = get(est, "value"), bar = get(est, "error_bar");
    if (constant_flow) {
      const bool ok = std::abs(v) <= bar + tol.bound_slack;
      add(make_check(name, ok, v, bar + tol.bound_slack, bar + tol.bound_slack - std::abs(v),
                     "constant flow: estimate is 0 within its error bar"));
    } else {
      const bool ok = v > 0.0 && v < alpha_max;
      add(make_check(name, ok, v, alpha_max, std::min(v, alpha_max - v), "strictly inside (0, max alpha)"));
    }
  };

  if (sec.contains("sweep")) {
    const Json& sw = sec.at("sweep");
    const Json& entries = sw.at("entries");
    const bool failed = sw.contains("failure");
    add(make_check("sweep.converged", !failed, static_cast<double>(entries.size()),
                   static_cast<double>(cfg.A_schedule.size()), 0.0,
                   failed ? sw.at("failure").get<std::string>() : std::string()));
    for (const Json& e : entries) {
      const std::string a = "[A=" + fmt_A(get(e, "A")) + "]";
      const Json& id = e.at("identities");
      const double r1 = get(id, "rel_err_reaction"), r2 = get(id, "rel_err_energy");
      add(make_check("identity.reaction" + a, r1 < tol.identity_reaction, r1, tol.identity_reaction,
                     tol.identity_reaction - r1));
      add(make_check("identity.energy" + a, r2 < tol.identity_energy, r2, tol.identity_energy, tol.identity_energy - r2));
      const double md = get(e.at("solution"), "monotonicity_defect");
      add(make_check("monotone" + a, md <= tol.monotone, md, tol.monotone, tol.monotone - md,
                     "largest U(x_{i+1}) - U(x_i)"));
      const Json& li = e.at("limit_identity");
      const double gap = std::max(get(li, "rel_gap"), get(li, "half_line_rel"));
      add(make_check("limit_identity" + a, gap < tol.limit_identity && !li.at("no_front").get<bool>(), gap,
                     tol.limit_identity, tol.limit_identity - gap));
      if (e.contains("certificate")) {
        const Json& ce = e.at("certificate");
        const double g = get(e, "gamma_A");
        if (ce.contains("failure")) {
          add(make_check("certificate.valid" + a, false, g, g, 0.0, ce.at("failure").get<std::string>()));
        } else {
          const double b = get(ce, "bound");
          add(make_check("certificate.valid" + a, b >= g - tol.certificate_slack, b, g, b - g + tol.certificate_slack));
          const double rel = std::abs(b - g) / std::abs(g);
          add(make_check("certificate.tight" + a, rel <= tol.certificate_rel, rel, tol.certificate_rel,
                         tol.certificate_rel - rel));
        }
      }
    }
    if (ref && ref->contains("c0")) {
      for (auto& c : verify_bounds(sw, alpha_max, zero_flow, get(*ref, "c0"), tol)) add(c);
    }
    if (zero_flow && !entries.empty()) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (const Json& e : entries) {
        lo = std::min(lo, get(e, "c_star"));
        hi = std::max(hi, get(e, "c_star"));
      }
      const double spread = (hi - lo) / std::abs(hi);
      add(make_check("zero_flow.invariance", spread <= tol.zero_flow_invariance, spread, tol.zero_flow_invariance,
                     tol.zero_flow_invariance - spread, "relative spread of c* over A"));
    }
    if (sw.contains("barrier")) {
      const Json& b = sw.at("barrier");
      if (b.contains("failure")) {
        add(make_check("barrier", false, 0.0, 0.0, 0.0, b.at("failure").get<std::string>()));
      } else {
        const double v = get(b.at("report"), "violations");
        add(make_check("barrier[A=" + fmt_A(get(b, "A")) + "]", v == 0.0, v, 0.0, get(b.at("report"), "min_slack"),
                       "violations; margin is the smallest slack"));
      }
    }
    if (sw.contains("gauge")) {
      const Json& g = sw.at("gauge");
      if (g.contains("failure")) {
        add(make_check("gauge", false, 0.0, tol.gauge, 0.0, g.at("failure").get<std::string>()));
      } else {
        const double d = get(g, "max_gamma_difference");
        add(make_check("gauge[A=" + fmt_A(get(g, "A")) + "]", d <= tol.gauge, d, tol.gauge, tol.gauge - d,
                       "x-shifted restarts"));
      }
    }
    if (sw.contains("fit") && sec.contains("viscosity") && !sec.at("viscosity").contains("failure")) {
      const double fg = get(sw.at("fit"), "gamma");
      const Json& ve = sec.at("viscosity").at("estimate");
      const double vg = get(ve, "value"), vb = get(ve, "error_bar");
      const double allowed = std::max(tol.fit_rel * std::abs(vg), vb);
      const double d = std::abs(fg - vg);
      add(make_check("fit.route_agreement", d <= allowed, d, allowed, allowed - d,
                     "|fitted_gamma - vanishing viscosity estimate|"));
    }
  }

  if (sec.contains("lipschitz")) {
    const Json& lp = sec.at("lipschitz");
    if (lp.contains("failure")) {
      add(make_check("lipschitz", false, 0.0, 0.0, 0.0, lp.at("failure").get<std::string>()));
    } else {
      std::map<double, double> base;
      for (const Json& e : sec.at("sweep").at("entries")) base[get(e, "A")] = get(e, "gamma_raw");
      for (const Json& p : lp.at("perturbations")) {
        const double sup = get(p, "sup_norm");
        double worst = 0.0;
        std::size_t matched = 0;
        for (const Json& e : p.at("entries")) {
          auto it = base.find(get(e, "A"));
          if (it == base.end()) continue;
          ++matched;
          worst = std::max(worst, std::abs(get(e, "gamma_raw") - it->second));
        }
        const bool complete = !p.contains("failure") && matched == base.size();
        const double limit = sup + tol.lipschitz_slack;
        add(make_check("lipschitz[" + p.at("name").get<std::string>() + "]", complete && worst <= limit, worst, limit,
                       limit - worst, complete ? "max over A of |change in gamma_A|" : "perturbed sweep incomplete"));
      }
    }
  }

  if (sec.contains("viscosity")) {
    const Json& v = sec.at("viscosity");
    if (v.contains("failure")) {
      add(make_check("viscosity.converged", false, 0.0, 0.0, 0.0, v.at("failure").get<std::string>()));
    } else {
      const Json& est = v.at("estimate");
      in_range("viscosity.in_range", est);
      const double val = get(est, "value"), bar = get(est, "error_bar");
      const double raw = get(est.at("points").back(), "value");
      const double d = std::abs(val - raw);
      add(make_check("viscosity.self_consistency", d <= 2.0 * bar + tol.bound_slack, d, 2.0 * bar + tol.bound_slack,
                     2.0 * bar + tol.bound_slack - d, "|extrapolated - raw at largest A| <= 2 error_bar"));
      const Json& li = v.at("limit_identity");
      const double gap = std::max(get(li, "rel_gap"), get(li, "half_line_rel"));
      add(make_check("viscosity.limit_identity", gap < tol.limit_identity && !li.at("no_front").get<bool>(), gap,
                     tol.limit_identity, tol.limit_identity - gap));
    }
  }

  const Json* kpp = sec.contains("kpp_formula") ? &sec.at("kpp_formula") : nullptr;
  if (kpp) {
    if (kpp->contains("failure")) {
      add(make_check("kpp_formula.converged", false, 0.0, 0.0, 0.0, kpp->at("failure").get<std::string>()));
    } else {
      const double v = get(kpp->at("estimate"), "value");
      const bool ok = constant_flow ? std::abs(v) <= tol.bound_slack : v > 0.0 && v <= alpha_max;
      add(make_check("kpp_formula.in_range", ok, v, alpha_max, alpha_max - v, "inside (0, max alpha]"));
    }
  }

  if (sec.contains("cutoff")) {
    const Json& c = sec.at("cutoff");
    if (c.contains("failure")) {
      add(make_check("cutoff.converged", false, 0.0, 0.0, 0.0, c.at("failure").get<std::string>()));
    } else {
      const Json& est = c.at("estimate");
      const Json& pts = est.at("points");
      double worst = std::numeric_limits<double>::infinity();
      for (std::size_t k = 1; k < pts.size(); ++k) worst = std::min(worst, get(pts[k], "value") - get(pts[k - 1], "value"));
      add(make_check("cutoff.monotone", worst >= -1e-6, worst, 0.0, worst,
                     "smallest increment as theta' decreases"));
      in_range("cutoff.in_range", est);
      if (kpp && !kpp->contains("failure")) {
        const double kv = get(kpp->at("estimate"), "value"), kb = get(kpp->at("estimate"), "error_bar");
        const double cv = get(est, "value"), cb = get(est, "error_bar");
        const double d = std::abs(cv - kv);
        add(make_check("cutoff.route_agreement", d <= cb + kb, d, cb + kb, cb + kb - d,
                       "|cutoff limit - kpp formula| within the combined error bars"));
        const double rel = (cb + kb) / std::abs(kv);
        add(make_check("cutoff.error_bar", rel <= tol.route_rel, rel, tol.route_rel, tol.route_rel - rel,
                       "combined error bars relative to the formula value"));
      }
    }
  }

  if (sec.contains("asymptotic")) {
    const Json& a = sec.at("asymptotic");
    if (a.contains("failure")) {
      add(make_check("asymptotic.converged", false, 0.0, 0.0, 0.0, a.at("failure").get<std::string>()));
    } else {
      for (const Json& c : a.at("checks")) add(c);
    }
  }
  return checks;
}

int check_report(const Json& report, std::vector<std::string>& messages) {
  const Json checks = build_checks(report);
  std::map<std::string, std::string> stored;
  if (report.contains("checks")) {
    for (const Json& c : report.at("checks")) stored[c.at("name").get<std::string>()] = c.at("status").get<std::string>();
  }
  int code = 0;
  for (const Json& c : checks) {
    const std::string name = c.at("name").get<std::string>();
    const std::string status = c.at("status").get<std::string>();
    if (status != "pass") {
      code = 1;
      messages.push_back("fail: " + name);
    }
    auto it = stored.find(name);
    if (it == stored.end()) {
      code = 1;
      messages.push_back("missing from report: " + name);
    } else if (it->second != status) {
      code = 1;
      messages.push_back("status differs from report: " + name);
    }
  }
  if (stored.size() != checks.size()) {
    code = 1;
    messages.push_back("report lists " + std::to_string(stored.size()) + " checks, recomputed " +
                       std::to_string(checks.size()));
  }
  return code;
}

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256_hex: digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < len; ++k) {
    out += hex[md[k] >> 4];
    out += hex[md[k] & 15];
  }
  return out;
}

// ---------------------------------------------------------------------------
// sections

namespace {

struct Context {
  const ExperimentConfig& cfg;
  TorusGrid torus;
  FlowProfile flow;
  Reaction reaction;
  WindowOptions wopts;
  SolveOptions sopts;
  fs::path out_dir;
};

struct SectionOutput {
  Json data;
  Json timing = Json::object();
  int solver_calls = 0;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

SectionOutput reference_section(const Context& ctx) {
  SectionOutput out;
  const FlowProfile& f = ctx.flow;
  const NondegeneracyResult nd = check_nondegeneracy(f, 4);
  out.data = Json{{"alpha_max", number(f.alpha_max())},
                  {"alpha_min", number(f.alpha_min())},
                  {"beta", number(f.beta())},
                  {"zero_flow", f.is_zero()},
                  {"constant_flow", f.sup_norm() == 0.0},
                  {"nondegenerate", nd.nondegenerate}};
  if (ctx.reaction.theta() > 0.0) {
    // c*(0, f): the zero-flow front at A = 1.
    const FrontSolution sol = solve_front(1.0, flows::zero(ctx.torus), ctx.reaction, ctx.torus, ctx.wopts, ctx.sopts);
    out.solver_calls = 1;
    out.data["c0"] = number(sol.speed());
    out.data["c0_solution"] = solution_summary(sol);
  }
  return out;
}

Json entry_json(const SpeedEntry& e, const Context& ctx) {
  const FrontSolution& sol = *e.solution;
  Json j{{"A", e.A},
         {"c_star", number(e.c_star)},
         {"gamma_A", number(e.gamma_A)},
         {"gamma_raw", number(e.c_star / e.A)},
         {"identities", to_json(e.identities)},
         {"limit_identity", to_json(limit_identity_check(sol, ctx.cfg.tol.limit_identity))},
         {"solution", solution_summary(sol)}};
  if (ctx.cfg.certificate) {
    try {
      j["certificate"] = to_json(certificate_upper_bound(sol));
    } catch (const std::exception& ex) {
      j["certificate"] = Json{{"failure", ex.what()}};
    }
  }
  return j;
}

// Shifts `sol` by `shift` in x (linear interpolation, flat extension) and
// solves again from there on the same grid.
double shifted_restart(const FrontSolution& sol, double shift, const SolveOptions& opts) {
  const CylinderGrid& g = sol.grid;
  const std::size_t m = g.torus().size();
  FrontGuess guess;
  guess.gamma = sol.gamma;
  guess.U.resize(g.size());
  for (int i = 0; i < g.n_x(); ++i) {
    const double s = std::clamp((g.x(i) + shift - g.x_min()) / g.dx(), 0.0, static_cast<double>(g.n_x() - 1));
    const int i0 = std::min(static_cast<int>(s), g.n_x() - 2);
    const double t = s - i0;
    for (std::size_t j = 0; j < m; ++j) guess.U[g.at(i, j)] = (1.0 - t) * sol.value(i0, j) + t * sol.value(i0 + 1, j);
  }
  return solve_front_scaled(sol.amplitude, sol.flow, sol.reaction, g, guess, opts).gamma;
}

SectionOutput sweep_section(const Context& ctx) {
  SectionOutput out;
  const ExperimentConfig& cfg = ctx.cfg;
  const SpeedCurve curve = continuation_in_A(cfg.A_schedule, ctx.flow, ctx.reaction, ctx.torus, ctx.wopts, ctx.sopts);
  out.solver_calls = curve.solver_calls;
  Json entries = Json::array(), ramp = Json::array(), times = Json::object();
  for (const auto& e : curve.ramp) {
    ramp.push_back(Json{{"A", e.A}, {"gamma_A", number(e.gamma_A)}, {"c_star", number(e.c_star)}});
    times[fmt_A(e.A) + " (ramp)"] = e.wall_time;
  }
  for (std::size_t k = 0; k < curve.entries.size(); ++k) {
    const SpeedEntry& e = curve.entries[k];
    entries.push_back(entry_json(e, ctx));
    if (k > 0 && e.solution && curve.entries[k - 1].solution) {
      entries.back()["profile_change"] = number(profile_difference(*curve.entries[k - 1].solution, *e.solution));
    }
    times[fmt_A(e.A)] = e.wall_time;
    if (cfg.dump_profiles) {
      fs::create_directories(ctx.out_dir / "profiles");
      std::ofstream(ctx.out_dir / "profiles" / ("A_" + fmt_A(e.A) + ".json")) << solution_to_json(*e.solution).dump(1)
                                                                               << "\n";
    }
  }
  out.timing["per_A"] = times;
  out.data = Json{{"entries", entries}, {"ramp", ramp}};
  if (curve.truncated) {
    out.data["failure"] = "A = " + fmt_A(curve.failed_A) + ": " + curve.failure;
    out.data["failed_A"] = curve.failed_A;
  }
  if (curve.entries.size() >= 3) {
    const AsymptoteFit f = fit_asymptote(curve);
    out.data["fit"] = Json{{"gamma", number(f.gamma)},
                           {"intercept", number(f.intercept)},
                           {"residual", number(f.residual)},
                           {"gamma_stderr", number(f.gamma_stderr)},
                           {"used", f.used}};
  }
  auto find = [&](double A) -> const SpeedEntry* {
    for (const auto& e : curve.entries) {
      if (e.A == A) return &e;
    }
    return nullptr;
  };
  if (cfg.barrier_A > 0.0) {
    Json b{{"A", cfg.barrier_A}};
    const SpeedEntry* e = find(cfg.barrier_A);
    double gmin = std::numeric_limits<double>::infinity();
    for (const auto& s : curve.entries) gmin = std::min(gmin, s.gamma_A);
    try {
      if (!e) throw std::runtime_error("no converged solve at this amplitude");
      if (!(gmin > 0.0)) throw std::runtime_error("lower speed is not positive");
      const double lam = decay_rate(cfg.barrier_A, gmin, ctx.flow);
      b["gamma_lower"] = number(gmin);
      b["lambda_lower"] = number(lam);
      b["report"] = to_json(check_exponential_barrier(*e->solution, lam));
    } catch (const std::exception& ex) {
      b["failure"] = ex.what();
    }
    out.data["barrier"] = b;
  }
  if (cfg.gauge_A > 0.0) {
    Json g{{"A", cfg.gauge_A}};
    const SpeedEntry* e = find(cfg.gauge_A);
    try {
      if (!e) throw std::runtime_error("no converged solve at this amplitude");
      const FrontSolution& sol = *e->solution;
      const double span = sol.grid.x_max() - sol.grid.x_min();
      Json shifts = Json::array();
      double worst = 0.0;
      for (double s : {-0.02 * span, 0.0137 * span}) {
        const double gamma = shifted_restart(sol, s, ctx.sopts);
        ++out.solver_calls;
        shifts.push_back(Json{{"shift", s}, {"gamma", number(gamma)}});
        worst = std::max(worst, std::abs(gamma - sol.gamma));
      }
      g["restarts"] = shifts;
      g["max_gamma_difference"] = number(worst);
    } catch (const std::exception& ex) {
      g["failure"] = ex.what();
    }
    out.data["gauge"] = g;
  }
  return out;
}

SectionOutput lipschitz_section(const Context& ctx, const Json& sweep) {
  SectionOutput out;
  const ExperimentConfig& cfg = ctx.cfg;
  const double eps = cfg.lipschitz_shift;
  Field raw = ctx.flow.raw();
  struct Perturbation {
    std::string name;
    Field delta;
  };
  std::vector<Perturbation> list;
  list.push_back({"constant", Field(raw.size(), eps)});
  Field bump(raw.size());
  for (std::size_t j = 0; j < raw.size(); ++j) {
    bump[j] = 0.5 * eps * (1.0 + std::sin(2.0 * std::numbers::pi * ctx.torus.coordinate(j, 0)));
  }
  list.push_back({"sine_bump", bump});

  Json perts = Json::array();
  for (const auto& p : list) {
    Field shifted = raw;
    double sup = 0.0;
    for (std::size_t j = 0; j < raw.size(); ++j) {
      shifted[j] += p.delta[j];
      sup = std::max(sup, std::abs(p.delta[j]));
    }
    const FlowProfile flow = normalize_flow(ctx.torus, shifted);
    Json pj{{"name", p.name}, {"sup_norm", sup}};
    double diff = 0.0;
    for (std::size_t j = 0; j < raw.size(); ++j) diff = std::max(diff, std::abs(flow.alpha()[j] - ctx.flow.alpha()[j]));
    Json entries = Json::array();
    if (diff <= 1e-14 * std::max(1.0, ctx.flow.sup_norm())) {
      // Same mean-zero problem: only beta moves.
      pj["reused_base"] = true;
      for (const Json& e : sweep.at("entries")) {
        const double g = get(e, "gamma_A");
        entries.push_back(Json{{"A", get(e, "A")}, {"gamma_A", number(g)}, {"gamma_raw", number(g + flow.beta())}});
      }
    } else {
      pj["reused_base"] = false;
      const SpeedCurve curve = continuation_in_A(cfg.A_schedule, flow, ctx.reaction, ctx.torus, ctx.wopts, ctx.sopts,
                                                 false);
      out.solver_calls += curve.solver_calls;
      for (const auto& e : curve.entries) {
        entries.push_back(Json{{"A", e.A}, {"gamma_A", number(e.gamma_A)}, {"gamma_raw", number(e.c_star / e.A)}});
      }
      if (curve.truncated) pj["failure"] = "A = " + fmt_A(curve.failed_A) + ": " + curve.failure;
    }
    pj["entries"] = entries;
    perts.push_back(std::move(pj));
  }
  out.data = Json{{"perturbations", perts}};
  return out;
}

SectionOutput viscosity_section(const Context& ctx, const Json* sweep) {
  SectionOutput out;
  const ExperimentConfig& cfg = ctx.cfg;
  // Reuse the sweep when it already holds every scheduled amplitude.
  if (sweep) {
    std::map<double, const Json*> byA;
    for (const Json& e : sweep->at("entries")) byA[get(e, "A")] = &e;
    bool all = true;
    for (double a : cfg.viscosity_schedule) all = all && byA.count(a);
    if (all) {
      SpeedCurve curve;
      Json changes = Json::array();
      for (double a : cfg.viscosity_schedule) {
        SpeedEntry s;
        s.A = a;
        s.gamma_A = get(*byA[a], "gamma_A");
        curve.entries.push_back(std::move(s));
      }
      // consecutive in the sweep only when no amplitude lies in between
      for (std::size_t k = 1; k < cfg.viscosity_schedule.size(); ++k) {
        const Json& e = *byA[cfg.viscosity_schedule[k]];
        const auto prev = std::prev(byA.find(cfg.viscosity_schedule[k]))->first;
        changes.push_back(prev == cfg.viscosity_schedule[k - 1] && e.contains("profile_change") ? e.at("profile_change")
                                                                                                : Json(nullptr));
      }
      out.data = Json{{"source", "sweep"},
                      {"estimate", to_json(extrapolate_viscosity(curve, ctx.flow))},
                      {"profile_changes", changes},
                      {"limit_identity", byA[cfg.viscosity_schedule.back()]->at("limit_identity")}};
      return out;
    }
  }
  const ViscosityResult v =
      gamma_star_by_viscosity(ctx.flow, ctx.reaction, ctx.torus, cfg.viscosity_schedule, ctx.wopts, ctx.sopts);
  out.solver_calls = v.curve.solver_calls;
  Json changes = Json::array();
  for (std::size_t k = 1; k < v.curve.entries.size(); ++k) {
    const auto& a = v.curve.entries[k - 1].solution;
    const auto& b = v.curve.entries[k].solution;
    changes.push_back(a && b ? number(profile_difference(*a, *b)) : Json(nullptr));
  }
  out.data = Json{{"source", "continuation"},
                  {"estimate", to_json(v.estimate)},
                  {"profile_changes", changes},
                  {"limit_identity", to_json(limit_identity_check(*v.profile, cfg.tol.limit_identity))},
                  {"profile", solution_summary(*v.profile)}};
  return out;
}

SectionOutput cutoff_section(const Context& ctx) {
  SectionOutput out;
  const ExperimentConfig& cfg = ctx.cfg;
  const CutoffResult r = gamma_star_by_cutoff(ctx.flow, ctx.reaction, ctx.torus, cfg.theta_primes, cfg.cutoff_schedule,
                                              ctx.wopts, ctx.sopts, cfg.cutoff_model);
  out.solver_calls = r.solver_calls;
  Json levels = Json::array();
  for (std::size_t k = 0; k < r.per_level.size(); ++k) {
    Json l = to_json(r.per_level[k]);
    l["theta_prime"] = cfg.theta_primes[k];
    levels.push_back(std::move(l));
  }
  out.data = Json{{"estimate", to_json(r.estimate)}, {"per_level", levels}};
  return out;
}

SectionOutput kpp_section(const Context& ctx) {
  SectionOutput out;
  const KppLimitResult r = kpp_limit_speed_detail(ctx.flow, ctx.reaction.fprime0());
  GammaStarEstimate e;
  e.route = GammaStarRoute::kpp_formula;
  e.value = r.value;
  e.error_bar = 1e-10;
  e.model = "lagrange_dual_bisection";
  e.bounds_applicable = !ctx.flow.is_zero();
  e.lower_strict = e.value > 0.0;
  e.upper_strict = e.value < ctx.flow.alpha_max();
  out.data = Json{{"result", to_json(r)}, {"estimate", to_json(e)}};
  return out;
}

SectionOutput asymptotic_section(const Context& ctx) {
  SectionOutput out;
  out.data = asymptotic_regime_checks(ctx.flow, ctx.reaction.fprime0(), ctx.cfg.M_list, ctx.cfg.tol);
  return out;
}

class Cache {
 public:
  Cache(fs::path dir, bool enabled) : dir_(std::move(dir)), enabled_(enabled) {}

  std::optional<Json> load(const Json& key) const {
    if (!enabled_) return std::nullopt;
    std::ifstream in(path(key), std::ios::binary);
    if (!in) return std::nullopt;
    try {
      Json j = Json::parse(in);
      if (j.at("key") != key) return std::nullopt;
      return j.at("data");
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }

  void store(const Json& key, const Json& data) const {
    if (!enabled_) return;
    fs::create_directories(dir_);
    const fs::path target = path(key);
    std::ostringstream tid;
    tid << std::this_thread::get_id();
    const fs::path tmp = target.string() + ".tmp." + tid.str();
    {
      std::ofstream out(tmp, std::ios::binary);
      out << Json{{"key", key}, {"data", data}}.dump();
      if (!out) throw std::runtime_error("cache: cannot write " + tmp.string());
    }
    fs::rename(tmp, target);
  }

 private:
  fs::path path(const Json& key) const { return dir_ / (sha256_hex(key.dump()) + ".json"); }
  fs::path dir_;
  bool enabled_;
};

// Runs tasks on at most `threads` workers; each task stores its own result.
void run_tasks(std::vector<std::function<void()>>& tasks, int threads) {
  const int n = std::max(1, std::min<int>(threads, static_cast<int>(tasks.size())));
  if (n == 1) {
    for (auto& t : tasks) t();
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < n; ++w) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < tasks.size(); k = next++) tasks[k]();
    });
  }
  for (auto& th : pool) th.join();
}

std::string csv_number(const Json& v) { return v.is_null() ? "nan" : v.dump(); }

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  if (options.grid_refine < 0 || options.grid_refine > 4) throw ConfigError("--grid-refine", "must lie in [0, 4]");
  if (options.threads < 1) throw ConfigError("--threads", "must be >= 1");
  const auto t_start = Clock::now();
  const fs::path out_dir = options.out_dir.empty() ? fs::path(cfg.output_dir) : fs::path(options.out_dir);
  const fs::path cache_dir = options.cache_dir.empty() ? out_dir / "cache" : fs::path(options.cache_dir);
  const Cache cache(cache_dir, cfg.cache && !options.no_cache);

  const TorusGrid torus = TorusGrid(cfg.grid.dim, cfg.grid.points).refined(options.grid_refine);
  Context ctx{cfg, torus, make_flow(cfg.flow, torus), make_reaction(cfg.reaction), {}, {}, out_dir};
  ctx.wopts.n_x = ((cfg.grid.n_x - 1) << options.grid_refine) + 1;
  ctx.sopts.newton_tol = cfg.tol.newton;
  ctx.sopts.tol_bc = cfg.tol.tol_bc;
  ctx.sopts.validate();
  if (cfg.dump_profiles && options.write_files) fs::create_directories(out_dir);

  const bool run_all = options.mode == RunMode::run;
  const bool do_sweep = cfg.sweep && options.mode != RunMode::gammastar;
  const bool do_lipschitz = cfg.lipschitz && run_all;
  const bool do_limit = options.mode != RunMode::speeds;

  const Json& canon = cfg.canonical;
  auto key_for = [&](const std::string& section, Json extra) {
    return Json{{"section", section},       {"version", SHEARFRONT_VERSION}, {"grid_refine", options.grid_refine},
                {"flow", canon.at("flow")}, {"reaction", canon.at("reaction")}, {"grid", canon.at("grid")},
                {"solver", {{"newton", cfg.tol.newton}, {"tol_bc", cfg.tol.tol_bc}, {"limit_identity", cfg.tol.limit_identity}}},
                {"extra", std::move(extra)}};
  };

  std::mutex mu;
  std::map<std::string, Json> sections;
  RunResult result;
  Json timing_sections = Json::object();

  auto compute = [&](const std::string& name, const Json& key, const std::function<SectionOutput()>& fn) {
    const auto t0 = Clock::now();
    if (auto hit = cache.load(key)) {
      std::lock_guard<std::mutex> lock(mu);
      sections[name] = std::move(*hit);
      ++result.cache_hits;
      timing_sections[name] = Json{{"wall_time", seconds_since(t0)}, {"cached", true}, {"solver_calls", 0}};
      return;
    }
    SectionOutput s;
    bool failed = false;
    try {
      s = fn();
    } catch (const std::exception& ex) {
      s.data = Json{{"failure", ex.what()}};
      failed = true;
    }
    // Round trip through text so fresh and cached sections are identical.
    Json data = Json::parse(s.data.dump());
    if (!failed && !data.contains("failure")) cache.store(key, data);
    std::lock_guard<std::mutex> lock(mu);
    sections[name] = std::move(data);
    result.solver_calls += s.solver_calls;
    Json t{{"wall_time", seconds_since(t0)}, {"cached", false}, {"solver_calls", s.solver_calls}};
    for (auto it = s.timing.begin(); it != s.timing.end(); ++it) t[it.key()] = it.value();
    timing_sections[name] = t;
  };

  std::vector<std::function<void()>> first;
  first.push_back([&] { compute("reference", key_for("reference", Json::object()), [&] { return reference_section(ctx); }); });
  if (do_sweep) {
    first.push_back([&] {
      compute("sweep", key_for("sweep", {{"A_schedule", canon.at("A_schedule")}, {"routes", canon.at("routes").at("sweep")}}),
              [&] { return sweep_section(ctx); });
    });
  }
  if (do_limit && cfg.cutoff) {
    first.push_back([&] {
      compute("cutoff", key_for("cutoff", canon.at("routes").at("cutoff")), [&] { return cutoff_section(ctx); });
    });
  }
  if (do_limit && cfg.kpp_formula) {
    first.push_back([&] { compute("kpp_formula", key_for("kpp_formula", Json::object()), [&] { return kpp_section(ctx); }); });
  }
  if (do_limit && cfg.asymptotic) {
    first.push_back([&] {
      compute("asymptotic",
              key_for("asymptotic", {{"M", canon.at("routes").at("asymptotic").at("M")}, {"tolerances", canon.at("tolerances")}}),
              [&] { return asymptotic_section(ctx); });
    });
  }
  if (do_limit && cfg.viscosity && !do_sweep) {
    first.push_back([&] {
      compute("viscosity", key_for("viscosity", canon.at("routes").at("viscosity")),
              [&] { return viscosity_section(ctx, nullptr); });
    });
  }
  run_tasks(first, options.threads);

  std::vector<std::function<void()>> second;
  const Json* sweep = sections.count("sweep") && !sections["sweep"].contains("failure") ? &sections["sweep"] : nullptr;
  if (do_lipschitz && sweep) {
    second.push_back([&] {
      compute("lipschitz",
              key_for("lipschitz", {{"A_schedule", canon.at("A_schedule")}, {"routes", canon.at("routes").at("lipschitz")}}),
              [&] { return lipschitz_section(ctx, *sweep); });
    });
  } else if (do_lipschitz) {
    sections["lipschitz"] = Json{{"failure", "sweep failed"}};
  }
  if (do_limit && cfg.viscosity && do_sweep) {
    second.push_back([&] {
      compute("viscosity",
              key_for("viscosity", {{"schedule", canon.at("routes").at("viscosity")},
                                    {"A_schedule", canon.at("A_schedule")},
                                    {"sweep", canon.at("routes").at("sweep")}}),
              [&] { return viscosity_section(ctx, sweep); });
    });
  }
  run_tasks(second, options.threads);

  // Fixed section order keeps the report bytes independent of scheduling.
  Json sec = Json::object();
  for (const char* name : {"reference", "sweep", "lipschitz", "viscosity", "cutoff", "kpp_formula", "asymptotic"}) {
    if (sections.count(name)) sec[name] = sections[name];
  }
  Json estimates = Json::array();
  if (sec.contains("sweep") && sec["sweep"].contains("fit")) {
    const Json& f = sec["sweep"]["fit"];
    GammaStarEstimate e;
    e.route = GammaStarRoute::sweep_extrapolation;
    e.value = get(f, "gamma");
    e.error_bar = get(f, "gamma_stderr");
    e.model = "affine_top_half";
    for (const Json& en : sec["sweep"]["entries"]) e.points.push_back({get(en, "A"), get(en, "gamma_A"), 0.0});
    e.bounds_applicable = !ctx.flow.is_zero();
    e.lower_strict = e.value > 0.0;
    e.upper_strict = e.value < ctx.flow.alpha_max();
    estimates.push_back(to_json(e));
  }
  for (const char* name : {"viscosity", "cutoff", "kpp_formula"}) {
    if (sec.contains(name) && sec[name].contains("estimate")) estimates.push_back(sec[name]["estimate"]);
  }

  Json report{{"schema", "shearfront-report/1"},
              {"version", SHEARFRONT_VERSION},
              {"mode", options.mode == RunMode::run ? "run" : options.mode == RunMode::speeds ? "speeds" : "gammastar"},
              {"grid_refine", options.grid_refine},
              {"config", canon},
              {"sections", sec},
              {"estimates", estimates}};
  Json checks = build_checks(report);
  std::size_t passed = 0;
  for (const Json& c : checks) {
    if (c.at("status") == "pass") {
      ++passed;
    } else {
      result.failures.push_back(c.at("name").get<std::string>());
    }
  }
  report["checks"] = checks;
  report["summary"] = Json{{"checks", checks.size()},
                           {"passed", passed},
                           {"failed", checks.size() - passed},
                           {"status", passed == checks.size() ? "pass" : "fail"}};
  result.exit_code = passed == checks.size() ? 0 : 1;

  result.timings = Json{{"total_wall_time", seconds_since(t_start)},
                        {"solver_calls", result.solver_calls},
                        {"cache_hits", result.cache_hits},
                        {"threads", options.threads},
                        {"sections", timing_sections}};
  result.report = std::move(report);

  if (options.write_files) {
    fs::create_directories(out_dir);
    std::ofstream(out_dir / "report.json", std::ios::binary) << result.report.dump(2) << "\n";
    std::ofstream(out_dir / "timings.json", std::ios::binary) << result.timings.dump(2) << "\n";
    {
      std::ofstream csv(out_dir / "speeds.csv", std::ios::binary);
      csv << "# shearfront speeds.csv schema 1\n";
      csv << "A,c_star,gamma_A,rel_err_reaction,rel_err_energy\n";
      if (sec.contains("sweep")) {
        for (const Json& e : sec["sweep"]["entries"]) {
          csv << csv_number(e["A"]) << "," << csv_number(e["c_star"]) << "," << csv_number(e["gamma_A"]) << ","
              << csv_number(e["identities"]["rel_err_reaction"]) << ","
              << csv_number(e["identities"]["rel_err_energy"]) << "\n";
        }
      }
    }
    {
      std::ofstream csv(out_dir / "gammastar.csv", std::ios::binary);
      csv << "# shearfront gammastar.csv schema 1\n";
      csv << "route,value,error_bar\n";
      for (const Json& e : estimates) {
        csv << e["route"].get<std::string>() << "," << csv_number(e["value"]) << "," << csv_number(e["error_bar"]) << "\n";
      }
    }
  }
  return result;
}

}  // namespace shearfront
