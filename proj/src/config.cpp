#include "vtc/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "vtc/errors.hpp"

namespace vtc {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!allowed.count(key)) throw ConfigError(path.empty() ? key : path + "." + key, "unknown key");
  }
}

double get_double(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError(key, "expected a number");
  return v.get<double>();
}

std::uint64_t get_unsigned(const json& v, const std::string& key) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    throw ConfigError(key, "expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

bool get_bool(const json& v, const std::string& key) {
  if (!v.is_boolean()) throw ConfigError(key, "expected true or false");
  return v.get<bool>();
}

std::string get_string(const json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError(key, "expected a string");
  return v.get<std::string>();
}

std::vector<double> get_vector(const json& v, const std::string& key) {
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array() || v.empty()) throw ConfigError(key, "expected a number or a non-empty array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(get_double(v[i], key + "[" + std::to_string(i) + "]"));
  return out;
}

Vec to_vec(const std::vector<double>& v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

Scheme parse_scheme(const std::string& s, const std::string& key) {
  if (s == "euler") return Scheme::euler;
  if (s == "rk4") return Scheme::rk4;
  throw ConfigError(key, "expected \"euler\" or \"rk4\", got \"" + s + "\"");
}

ProblemSelection parse_problem(const json& j) {
  ProblemSelection sel;
  if (j.is_string()) {
    sel.builtin = j.get<std::string>();
    return sel;
  }
  reject_unknown(j, "problem", {"builtin", "family", "params", "horizon", "threshold", "x0", "box_lo", "box_hi"});
  if (j.contains("builtin") && j.contains("family")) {
    throw ConfigError("problem", "give either builtin or family, not both");
  }
  if (j.contains("builtin")) sel.builtin = get_string(j["builtin"], "problem.builtin");
  if (j.contains("family")) {
    sel.builtin.clear();
    sel.family = get_string(j["family"], "problem.family");
  }
  if (j.contains("params")) {
    if (sel.family.empty()) throw ConfigError("problem.params", "params require a family");
    if (!j["params"].is_object()) throw ConfigError("problem.params", "expected an object");
    sel.params = j["params"];
  }
  if (j.contains("horizon")) sel.horizon = get_double(j["horizon"], "problem.horizon");
  if (j.contains("threshold")) sel.threshold = get_double(j["threshold"], "problem.threshold");
  if (j.contains("x0")) sel.x0 = get_vector(j["x0"], "problem.x0");
  if (j.contains("box_lo")) sel.box_lo = get_vector(j["box_lo"], "problem.box_lo");
  if (j.contains("box_hi")) sel.box_hi = get_vector(j["box_hi"], "problem.box_hi");
  return sel;
}

// Reads numeric fields of a parameter object into named slots, rejecting unknown names.
class ParamReader {
 public:
  ParamReader(const json& params, std::string path) : params_(params), path_(std::move(path)) {}

  ParamReader& num(const std::string& name, double& slot) {
    known_.insert(name);
    if (params_.contains(name)) slot = get_double(params_[name], path_ + "." + name);
    return *this;
  }
  ParamReader& flag(const std::string& name, bool& slot) {
    known_.insert(name);
    if (params_.contains(name)) slot = get_bool(params_[name], path_ + "." + name);
    return *this;
  }
  void finish() const { reject_unknown(params_, path_, known_); }

 private:
  const json& params_;
  std::string path_;
  std::set<std::string> known_;
};

BuiltinProblem build_family(const std::string& family, const json& params) {
  const std::string path = "problem.params";
  if (family == "toy-linear-deterministic") {
    ToyLinearParams p;
    ParamReader(params, path)
        .num("horizon", p.horizon)
        .num("threshold", p.threshold)
        .num("x0", p.x0)
        .num("u_lo", p.u_lo)
        .num("u_hi", p.u_hi)
        .num("psi_weight", p.psi_weight)
        .num("psi_target", p.psi_target)
        .num("reference_value", p.reference_value)
        .finish();
    return make_toy_linear_deterministic(p);
  }
  if (family == "toy-linear-sde") {
    ToyLinearSdeParams p;
    ParamReader(params, path)
        .num("theta", p.theta)
        .num("sigma", p.sigma)
        .num("horizon", p.horizon)
        .num("threshold", p.threshold)
        .num("x0", p.x0)
        .num("u_lo", p.u_lo)
        .num("u_hi", p.u_hi)
        .num("psi_weight", p.psi_weight)
        .flag("quadratic_constraint", p.quadratic_constraint)
        .num("reference_value", p.reference_value)
        .finish();
    return make_toy_linear_sde(p);
  }
  if (family == "scalar-polynomial") {
    ScalarPolynomialParams p;
    ParamReader r(params, path);
    r.num("a0", p.a0).num("a1", p.a1).num("a2", p.a2).num("c1", p.c1).num("c2", p.c2).num("c3", p.c3);
    r.num("s0", p.s0).num("s1", p.s1).num("s2", p.s2);
    r.num("r2", p.r2).num("r1", p.r1).num("e2", p.e2).num("e1", p.e1);
    r.num("p2", p.p2).num("p1", p.p1);
    r.num("q1", p.q1).num("q2", p.q2).num("q3", p.q3);
    r.num("horizon", p.horizon).num("threshold", p.threshold).num("x0", p.x0);
    r.num("u_lo", p.u_lo).num("u_hi", p.u_hi).num("reference_value", p.reference_value);
    r.finish();
    return make_scalar_polynomial(p);
  }
  throw RegistryError("unknown problem family \"" + family +
                      "\"; valid families: toy-linear-deterministic, toy-linear-sde, scalar-polynomial");
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  reject_unknown(j, "", {"problem", "grid", "paths", "seed", "scheme", "force_monte_carlo", "adjoint", "control",
                         "direction", "rho_list", "probes", "tol", "case_tol", "max_iters", "out", "threads"});
  ExperimentConfig cfg;
  if (j.contains("problem")) cfg.problem = parse_problem(j["problem"]);
  if (j.contains("grid")) cfg.grid = get_unsigned(j["grid"], "grid");
  if (j.contains("paths")) cfg.paths = get_unsigned(j["paths"], "paths");
  if (j.contains("seed")) cfg.seed = get_unsigned(j["seed"], "seed");
  if (j.contains("scheme")) cfg.scheme = parse_scheme(get_string(j["scheme"], "scheme"), "scheme");
  if (j.contains("force_monte_carlo")) cfg.force_monte_carlo = get_bool(j["force_monte_carlo"], "force_monte_carlo");
  if (j.contains("adjoint")) {
    const std::string a = get_string(j["adjoint"], "adjoint");
    if (a == "deterministic") {
      cfg.adjoint = AdjointMode::deterministic;
    } else if (a == "regression") {
      cfg.adjoint = AdjointMode::regression;
    } else {
      throw ConfigError("adjoint", "expected \"deterministic\" or \"regression\", got \"" + a + "\"");
    }
  }
  if (j.contains("control")) {
    const json& c = j["control"];
    if (c.is_string()) {
      if (c.get<std::string>() != "reference") throw ConfigError("control", "expected \"reference\" or numbers");
    } else {
      cfg.control.reference = false;
      cfg.control.value = get_vector(c, "control");
    }
  }
  if (j.contains("direction")) cfg.direction = get_vector(j["direction"], "direction");
  if (j.contains("rho_list")) cfg.rho_list = get_vector(j["rho_list"], "rho_list");
  if (j.contains("probes")) cfg.probes = get_unsigned(j["probes"], "probes");
  if (j.contains("tol")) cfg.tol = get_double(j["tol"], "tol");
  if (j.contains("case_tol")) cfg.case_tol = get_double(j["case_tol"], "case_tol");
  if (j.contains("max_iters")) cfg.max_iters = get_unsigned(j["max_iters"], "max_iters");
  if (j.contains("out")) cfg.out = get_string(j["out"], "out");
  if (j.contains("threads")) cfg.threads = static_cast<int>(get_unsigned(j["threads"], "threads"));
  validate_config(cfg);
  build_problem(cfg.problem);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot read " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, false);
  } catch (const json::parse_error& e) {
    throw ConfigError("--config", path.string() + ": " + e.what());
  }
  return parse_config(j);
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.grid < 10) throw ConfigError("grid", "N must be at least 10");
  if (cfg.paths < 1) throw ConfigError("paths", "M must be at least 1");
  if (cfg.probes < 2) throw ConfigError("probes", "at least 2 probes per coordinate are needed");
  if (!(cfg.tol >= 0.0)) throw ConfigError("tol", "must be non-negative");
  if (cfg.case_tol && !(*cfg.case_tol >= 0.0)) throw ConfigError("case_tol", "must be non-negative");
  if (cfg.rho_list.empty()) throw ConfigError("rho_list", "must not be empty");
  for (double r : cfg.rho_list) {
    if (r == 0.0 || !std::isfinite(r)) throw ConfigError("rho_list", "entries must be finite and non-zero");
  }
  if (cfg.threads < 0) throw ConfigError("threads", "must be non-negative");
}

BuiltinProblem build_problem(const ProblemSelection& sel) {
  BuiltinProblem base = sel.family.empty() ? register_builtin(sel.builtin) : build_family(sel.family, sel.params);
  if (!sel.horizon && !sel.threshold && !sel.x0 && !sel.box_lo && !sel.box_hi) return base;
  ProblemData data = base.spec.data();
  if (sel.horizon) data.horizon = *sel.horizon;
  if (sel.threshold) data.threshold = *sel.threshold;
  if (sel.x0) {
    if (static_cast<int>(sel.x0->size()) != data.state_dim) throw ConfigError("problem.x0", "wrong dimension");
    data.initial_state = to_vec(*sel.x0);
  }
  if (sel.box_lo || sel.box_hi) {
    Vec lo = sel.box_lo ? to_vec(*sel.box_lo) : data.box.lo();
    Vec hi = sel.box_hi ? to_vec(*sel.box_hi) : data.box.hi();
    if (lo.size() != data.control_dim || hi.size() != data.control_dim) {
      throw ConfigError("problem.box_lo", "wrong dimension");
    }
    data.box = ControlBox(lo, hi);
  }
  ProblemSpec spec(std::move(data));
  auto reference = base.reference_control;
  const ControlBox box = spec.box();
  return BuiltinProblem{spec, [reference, box](const TimeGrid& g) {
                          const ControlPath c = reference(g);
                          return ControlPath(g, c.values(), box);
                        }};
}

TimeGrid make_grid(const ExperimentConfig& cfg, const ProblemSpec& spec) {
  return TimeGrid(spec.horizon(), cfg.grid);
}

SimulationOptions make_simulation(const ExperimentConfig& cfg, const ProblemSpec& spec) {
  SimulationOptions o;
  o.paths = cfg.paths;
  o.seed = cfg.seed;
  o.force_monte_carlo = cfg.force_monte_carlo;
  const bool deterministic = spec.diffusion_free() && !cfg.force_monte_carlo;
  if (deterministic && cfg.paths != 1) {
    throw ConfigError("paths", "a diffusion-free problem runs with M = 1 unless force_monte_carlo is set");
  }
  if (cfg.scheme) {
    if (*cfg.scheme == Scheme::rk4 && !deterministic) throw ConfigError("scheme", "rk4 needs deterministic mode");
    o.scheme = *cfg.scheme;
  } else {
    o.scheme = deterministic ? Scheme::rk4 : Scheme::euler;
  }
  return o;
}

ControlPath make_control(const ExperimentConfig& cfg, const BuiltinProblem& problem, const TimeGrid& grid) {
  if (cfg.control.reference) return problem.reference_control(grid);
  const int k = problem.spec.control_dim();
  std::vector<double> v = cfg.control.value;
  if (v.size() == 1 && k > 1) v.assign(static_cast<std::size_t>(k), v.front());
  if (static_cast<int>(v.size()) != k) throw ConfigError("control", "wrong dimension");
  try {
    return ControlPath::constant(grid, to_vec(v), problem.spec.box());
  } catch (const BoxViolation& e) {
    throw ConfigError("control", e.what());
  }
}

Direction make_direction(const ExperimentConfig& cfg, const ProblemSpec& spec, const TimeGrid& grid) {
  const int k = spec.control_dim();
  std::vector<double> v = cfg.direction;
  if (v.size() == 1 && k > 1) v.assign(static_cast<std::size_t>(k), v.front());
  if (static_cast<int>(v.size()) != k) throw ConfigError("direction", "wrong dimension");
  return Direction::constant(grid, to_vec(v));
}

HittingOptions make_hitting(const ExperimentConfig& cfg) {
  HittingOptions h;
  if (cfg.case_tol) h.case_tol = *cfg.case_tol;
  return h;
}

std::vector<double> parse_number_list(const std::string& text, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(key, "not a number: \"" + item + "\"");
    }
  }
  if (out.empty()) throw ConfigError(key, "empty list");
  return out;
}

}  // namespace vtc
