#include "lasersim/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <memory>
#include <regex>
#include <set>
#include <sstream>

#include <omp.h>

#include "lasersim/analysis.hpp"
#include "lasersim/closed_forms.hpp"
#include "lasersim/io.hpp"
#include "lasersim/kernels.hpp"
#include "lasersim/lindblad.hpp"
#include "lasersim/maxwell_bloch.hpp"
#include "lasersim/observables.hpp"

#ifndef LASERSIM_VERSION
#define LASERSIM_VERSION "0.0.0"
#endif

namespace lasersim {

using nlohmann::json;

const char* library_version() { return LASERSIM_VERSION; }

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Steady:
      return "steady";
    case ExperimentKind::Evolve:
      return "evolve";
    case ExperimentKind::Sweep:
      return "sweep";
    case ExperimentKind::Stability:
      return "stability";
    case ExperimentKind::Verify:
      return "verify";
  }
  return "unknown";
}

ExperimentKind experiment_kind_from_string(const std::string& s) {
  for (auto k : {ExperimentKind::Steady, ExperimentKind::Evolve, ExperimentKind::Sweep,
                 ExperimentKind::Stability, ExperimentKind::Verify}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown experiment kind '" + s + "'");
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const NumericalError*>(&e) != nullptr) return kExitNumerical;
  return kExitConfig;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

const std::set<std::string> kTopLevelKeys = {
    "kind",    "params",         "space",      "integrator", "initial_state", "observables",
    "bounds",  "checks",         "generator",  "rotating_frame", "drive",     "sweep",
    "truncation", "epsilon",     "snapshot",   "seed_free",  "description"};

const std::vector<std::string> kDefaultObservables = {
    "trace_distance_to_stationary", "mean_photon", "inversion", "abs_A", "abs_S"};

const std::vector<std::string> kGenerators = {"mean_field", "linear", "constant_drive",
                                              "mb_driven"};

const std::vector<std::string> kChecks = {"stationarity", "ehrenfest", "theta_tracking",
                                          "truncation", "lyapunov"};

const std::vector<std::string> kSweepVariables = {"C_b", "kappa", "gamma", "d", "g", "omega"};

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

Complex complex_from_json(const json& j, const std::string& what) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    return {j[0].get<double>(), j[1].get<double>()};
  }
  throw ConfigError(what + " must be a number or [re, im]");
}

json complex_to_json(Complex z) { return json::array({z.real(), z.imag()}); }

double number_at(const json& block, const char* key, const std::string& where) {
  const json& v = block.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(where + "." + key + " must be finite");
  return x;
}

std::vector<std::string> string_list(const json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + " must be a list of strings");
  std::vector<std::string> out;
  for (const auto& e : j) {
    if (!e.is_string()) throw ConfigError(what + " must be a list of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

std::vector<double> grid_from_json(const json& s) {
  std::vector<double> grid;
  if (s.contains("grid")) {
    if (!s["grid"].is_array()) throw ConfigError("sweep.grid must be a list of numbers");
    for (const auto& v : s["grid"]) {
      if (!v.is_number()) throw ConfigError("sweep.grid must be a list of numbers");
      grid.push_back(v.get<double>());
    }
  } else if (s.contains("start") && s.contains("stop") && s.contains("step")) {
    const double a = number_at(s, "start", "sweep");
    const double b = number_at(s, "stop", "sweep");
    const double h = number_at(s, "step", "sweep");
    if (!(h > 0.0) || b < a) throw ConfigError("sweep needs start <= stop and step > 0");
    const long n = std::lround((b - a) / h);
    if (n > 1000000) throw ConfigError("sweep grid too large");
    for (long k = 0; k <= n; ++k) grid.push_back(a + k * h);
  } else {
    throw ConfigError("sweep needs either grid or start/stop/step");
  }
  if (grid.empty()) throw ConfigError("sweep grid is empty");
  return grid;
}

}  // namespace

ExperimentConfig parse_config(const json& j, std::optional<ExperimentKind> expected) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  for (const auto& item : j.items()) {
    if (!kTopLevelKeys.count(item.key())) {
      throw ConfigError("unknown configuration key '" + item.key() + "'");
    }
  }
  ExperimentConfig c;
  try {
    if (j.contains("kind")) {
      if (!j["kind"].is_string()) throw ConfigError("kind must be a string");
      c.kind = experiment_kind_from_string(j["kind"].get<std::string>());
      if (expected && *expected != c.kind) {
        throw ConfigError("subcommand '" + to_string(*expected) + "' does not match kind '" +
                          to_string(c.kind) + "' in the configuration");
      }
    } else if (expected) {
      c.kind = *expected;
    } else {
      throw ConfigError("configuration has no kind");
    }

    if (!j.contains("params")) throw ConfigError("missing params block");
    c.params_json = j["params"];
    c.params = params_from_json(c.params_json);

    if (j.contains("space")) {
      const json& s = j["space"];
      if (!s.is_object() || !s.contains("n_max") || !s["n_max"].is_number_integer()) {
        throw ConfigError("space must be {\"n_max\": integer}");
      }
      const int n = s["n_max"].get<int>();
      if (n < 1) throw ConfigError("space.n_max must be >= 1");
      c.space = make_space(n);
    }

    if (j.contains("integrator")) {
      const json& in = j["integrator"];
      if (!in.is_object()) throw ConfigError("integrator must be an object");
      if (in.contains("dt")) c.dt = number_at(in, "dt", "integrator");
      if (in.contains("t_end")) c.t_end = number_at(in, "t_end", "integrator");
      if (in.contains("sample_every")) {
        if (!in["sample_every"].is_number_integer()) {
          throw ConfigError("integrator.sample_every must be an integer");
        }
        c.sample_every = in["sample_every"].get<int>();
      }
      if (c.dt < 0.0) throw ConfigError("integrator.dt must be positive");
      if (c.t_end < 0.0) throw ConfigError("integrator.t_end must be >= 0");
      if (c.sample_every < 1) throw ConfigError("integrator.sample_every must be >= 1");
    }

    if (j.contains("initial_state")) {
      if (!j["initial_state"].is_string()) throw ConfigError("initial_state must be a string");
      c.initial_state = j["initial_state"].get<std::string>();
    } else if (c.kind == ExperimentKind::Sweep) {
      c.initial_state = "coherent:0.1,atom:(0.5,0)";
    }

    c.observables = j.contains("observables") ? string_list(j["observables"], "observables")
                                              : kDefaultObservables;
    for (const auto& o : c.observables) {
      if (!ObservableSet::is_known(o)) throw ConfigError("unknown observable '" + o + "'");
    }
    if (j.contains("bounds")) c.bounds = string_list(j["bounds"], "bounds");
    for (const auto& b : c.bounds) {
      if (!contains(known_bound_ids(), b)) throw ConfigError("unknown bound id '" + b + "'");
    }
    if (j.contains("checks")) c.checks = string_list(j["checks"], "checks");
    for (const auto& k : c.checks) {
      if (!contains(kChecks, k)) throw ConfigError("unknown check '" + k + "'");
    }

    if (j.contains("generator")) {
      if (!j["generator"].is_string()) throw ConfigError("generator must be a string");
      c.generator = j["generator"].get<std::string>();
      if (!contains(kGenerators, c.generator)) {
        throw ConfigError("unknown generator '" + c.generator + "'");
      }
    }
    if (j.contains("rotating_frame")) {
      if (!j["rotating_frame"].is_boolean()) throw ConfigError("rotating_frame must be boolean");
      c.rotating_frame = j["rotating_frame"].get<bool>();
    }
    if (j.contains("drive")) {
      const json& d = j["drive"];
      if (!d.is_object()) throw ConfigError("drive must be an object");
      if (d.contains("alpha0")) c.alpha0 = complex_from_json(d["alpha0"], "drive.alpha0");
      if (d.contains("beta0")) c.beta0 = complex_from_json(d["beta0"], "drive.beta0");
      c.drive_given = true;
    }

    if (j.contains("sweep")) {
      const json& s = j["sweep"];
      if (!s.is_object() || !s.contains("variable") || !s["variable"].is_string()) {
        throw ConfigError("sweep needs a string variable");
      }
      c.sweep_variable = s["variable"].get<std::string>();
      if (!contains(kSweepVariables, c.sweep_variable)) {
        throw ConfigError("unknown sweep variable '" + c.sweep_variable + "'");
      }
      c.sweep_grid = grid_from_json(s);
    }

    if (j.contains("truncation")) {
      const json& t = j["truncation"];
      if (!t.is_object() || !t.contains("n_max") || !t["n_max"].is_array()) {
        throw ConfigError("truncation must be {\"n_max\": [...], \"tol\": x}");
      }
      for (const auto& v : t["n_max"]) {
        if (!v.is_number_integer() || v.get<int>() < 1) {
          throw ConfigError("truncation.n_max entries must be integers >= 1");
        }
        c.truncation_n_max.push_back(v.get<int>());
      }
      if (t.contains("tol")) c.truncation_tol = number_at(t, "tol", "truncation");
    }
    if (j.contains("epsilon")) {
      c.epsilon = number_at(j, "epsilon", "config");
      if (!(c.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    }
    if (j.contains("snapshot")) {
      if (!j["snapshot"].is_boolean()) throw ConfigError("snapshot must be boolean");
      c.snapshot = j["snapshot"].get<bool>();
    }
    if (j.contains("seed_free")) {
      if (!j["seed_free"].is_boolean() || !j["seed_free"].get<bool>()) {
        throw ConfigError("seed_free must be true: every computation is deterministic");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("configuration: ") + e.what());
  }

  // Kind-specific requirements.
  switch (c.kind) {
    case ExperimentKind::Evolve:
    case ExperimentKind::Verify:
      if (!(c.t_end > 0.0)) throw ConfigError(to_string(c.kind) + " needs integrator.t_end > 0");
      break;
    case ExperimentKind::Sweep:
      if (c.sweep_grid.empty()) throw ConfigError("sweep needs a sweep block");
      if (!(c.t_end > 0.0)) throw ConfigError("sweep needs integrator.t_end > 0");
      break;
    case ExperimentKind::Stability:
      if (c.sweep_grid.empty()) throw ConfigError("stability needs a sweep block over C_b");
      if (c.sweep_variable != "C_b") throw ConfigError("stability sweeps must vary C_b");
      break;
    case ExperimentKind::Steady:
      break;
  }
  if (c.kind == ExperimentKind::Verify && c.bounds.empty() && c.checks.empty()) {
    throw ConfigError("verify needs at least one bound or check");
  }
  if (c.generator == "constant_drive" && !c.drive_given) {
    throw ConfigError("generator constant_drive needs a drive block");
  }
  return c;
}

json ExperimentConfig::resolved() const {
  json j;
  j["kind"] = to_string(kind);
  j["params"] = to_json(params);
  j["space"] = {{"n_max", space.n_max}};
  j["integrator"] = {{"dt", dt}, {"t_end", t_end}, {"sample_every", sample_every}};
  j["initial_state"] = initial_state;
  j["observables"] = observables;
  j["bounds"] = bounds;
  j["checks"] = checks;
  j["generator"] = generator;
  j["rotating_frame"] = rotating_frame;
  j["drive"] = {{"alpha0", complex_to_json(alpha0)}, {"beta0", complex_to_json(beta0)},
                {"given", drive_given}};
  if (!sweep_grid.empty()) j["sweep"] = {{"variable", sweep_variable}, {"grid", sweep_grid}};
  if (!truncation_n_max.empty()) {
    j["truncation"] = {{"n_max", truncation_n_max}, {"tol", truncation_tol}};
  }
  j["epsilon"] = epsilon;
  j["snapshot"] = snapshot;
  j["seed_free"] = true;
  return j;
}

// ---------------------------------------------------------------------------
// Initial states

namespace {

const std::string kNum = R"([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)";

Complex parse_complex_token(const std::string& s) {
  static const std::regex plain("^(" + kNum + ")$");
  static const std::regex pair(R"(^\()" + ("(" + kNum + ")") + "," + ("(" + kNum + ")") +
                               R"(\)$)");
  std::smatch m;
  if (std::regex_match(s, m, plain)) return {std::stod(m[1]), 0.0};
  if (std::regex_match(s, m, pair)) return {std::stod(m[1]), std::stod(m[2])};
  throw ConfigError("cannot parse complex value '" + s + "'");
}

}  // namespace

DensityMatrix make_initial_state(const std::string& spec_in, const LaserParams& p,
                                 const SpaceSpec& space) {
  std::string spec;
  for (char ch : spec_in) {
    if (!std::isspace(static_cast<unsigned char>(ch))) spec += ch;
  }
  if (spec == "stationary") return stationary_state(p, space);

  static const std::regex cycle("^limit_cycle:(" + kNum + ")$");
  static const std::regex coherent(R"(^coherent:(\(?[^,()]+(?:,[^,()]+)?\)?),atom:\(()" + kNum +
                                   R"(),(.+)\)$)");
  static const std::regex basis(R"(^product_basis:(\d+),(\+|-|plus|minus)$)");
  std::smatch m;
  if (std::regex_match(spec, m, cycle)) {
    const LaserParams frame = p.with_omega(0.0);
    if (!(cooperative_parameter(frame) > 1.0)) {
      throw ConfigError("limit_cycle initial state needs C_b > 1");
    }
    return limit_cycle_state(p, 0.0, std::stod(m[1]), space);
  }
  if (std::regex_match(spec, m, coherent)) {
    const Complex zeta = parse_complex_token(m[1]);
    const double p_plus = std::stod(m[2]);
    const std::string coh_text = m[3];
    Complex coh;
    // atom:(P,C) or atom:(P,Cre,Cim)
    const auto comma = coh_text.find(',');
    if (comma != std::string::npos && coh_text.front() != '(') {
      coh = {std::stod(coh_text.substr(0, comma)), std::stod(coh_text.substr(comma + 1))};
    } else {
      coh = parse_complex_token(coh_text);
    }
    if (!(p_plus >= 0.0 && p_plus <= 1.0) || std::norm(coh) > p_plus * (1.0 - p_plus) + 1e-15) {
      throw ConfigError("atom:(p, c) is not a valid 2x2 density matrix");
    }
    try {
      const FieldVector f = coherent_vector(zeta, space.n_max);
      return DensityMatrix::product(f.amplitudes * f.amplitudes.adjoint(),
                                    atom_state(p_plus, coh), space);
    } catch (const TruncationError& e) {
      throw TruncationError(std::string("initial state: ") + e.what());
    }
  }
  if (std::regex_match(spec, m, basis)) {
    const int n = std::stoi(m[1]);
    if (n > space.n_max) throw ConfigError("product_basis level is above n_max");
    const bool plus = m[2] == "+" || m[2] == "plus";
    CMatrix rho = CMatrix::Zero(space.dim(), space.dim());
    const int i = SpaceSpec::index(n, plus ? kPlus : kMinus);
    rho(i, i) = 1.0;
    return DensityMatrix{rho, space, 0.0};
  }
  throw ConfigError("cannot parse initial_state '" + spec_in + "'");
}

// ---------------------------------------------------------------------------
// Runners

namespace {

struct Context {
  const ExperimentConfig& cfg;
  ArtifactWriter& out;
  RunOutcome& outcome;
  bool check;
  double dt_override;  // 0 when absent
  std::vector<DensityMatrix> emitted_states;
  std::vector<std::string> csv_files;

  double dt_for(const LaserParams& p, const SpaceSpec& space) const {
    if (dt_override > 0.0) return dt_override;
    if (cfg.dt > 0.0) return cfg.dt;
    return default_lindblad_dt(p, space);
  }
  void fail_verification(const std::string& msg) {
    outcome.messages.push_back(msg);
    outcome.exit_code = std::max(outcome.exit_code, kExitVerification);
  }
  void write_csv(const std::string& name, const std::string& body) {
    out.write_text(name, body);
    csv_files.push_back(name);
  }
};

LaserParams frame_of(const ExperimentConfig& cfg, const LaserParams& p) {
  return cfg.rotating_frame ? p.with_omega(0.0) : p;
}

struct Trajectory {
  EvolveResult result;
  GeneratorKind kind;
  std::shared_ptr<DriveFunctions> drives;
};

Trajectory run_generator(const std::string& name, const ExperimentConfig& cfg,
                         const LaserParams& p, const DensityMatrix& rho0, double dt,
                         bool keep_states, const SampleObserver& observer) {
  const LaserParams frame = frame_of(cfg, p);
  std::optional<Generator> gen;
  Trajectory tr;
  if (name == "mean_field") {
    gen = Generator::mean_field(p, cfg.rotating_frame);
  } else if (name == "linear") {
    gen = Generator::linear_h(frame);
  } else if (name == "constant_drive") {
    tr.drives = std::make_shared<DriveFunctions>(DriveFunctions::constant(cfg.alpha0, cfg.beta0));
    gen = Generator::driven(frame, *tr.drives);
  } else {  // mb_driven
    const double mb_dt = std::min(default_mb_dt(frame), dt);
    auto interp = std::make_shared<const MBInterpolant>(
        integrate_mb(means(rho0), frame, cfg.t_end, mb_dt, 1), frame);
    DriveFunctions d = DriveFunctions::from_maxwell_bloch(interp, frame.g());
    if (cfg.drive_given) {
      d.alpha0 = cfg.alpha0;
      d.beta0 = cfg.beta0;
    }
    tr.drives = std::make_shared<DriveFunctions>(d);
    gen = Generator::driven(frame, *tr.drives);
  }
  tr.kind = gen->kind();
  EvolveOptions opt;
  opt.dt = dt;
  opt.t_end = cfg.t_end;
  opt.sample_every = cfg.sample_every;
  opt.keep_states = keep_states;
  tr.result = evolve(rho0, *gen, opt, observer);
  return tr;
}

json diagnostics_json(const DensityDiagnostics& d) {
  return {{"hermiticity_error", d.hermiticity_error},
          {"trace_error", d.trace_error},
          {"min_eigenvalue", d.min_eigenvalue},
          {"top_leakage", d.top_leakage}};
}

json regime_json(const LaserParams& p) {
  const RegimeReport r = classify_regime(p);
  json j = {{"c_b", r.c_b},
            {"first_threshold_exceeded", r.first_threshold_exceeded},
            {"regime", to_string(r.regime)}};
  j["second_threshold"] = std::isfinite(r.second_threshold) ? json(r.second_threshold) : json("inf");
  return j;
}

json mb_state_json(const MBState& s) {
  return {{"A", complex_to_json(s.A)}, {"S", complex_to_json(s.S)}, {"D", s.D}};
}

std::vector<std::string> with_time(const std::vector<std::string>& names) {
  std::vector<std::string> h{"t"};
  h.insert(h.end(), names.begin(), names.end());
  return h;
}

BoundReport check_bound(Context& ctx, const std::string& id, const LaserParams& p,
                        const DensityMatrix& rho0, const Trajectory& tr) {
  const ExperimentConfig& cfg = ctx.cfg;
  const LaserParams frame = frame_of(cfg, p);
  BoundInputs in;
  in.params = &frame;
  in.kind = tr.kind;
  in.alpha0 = cfg.alpha0;
  in.beta0 = cfg.beta0;
  in.drives = tr.drives.get();
  DensityMatrix target = stationary_state(frame, rho0.space);
  std::vector<DensityMatrix> semigroup;
  if (id == "constant_drive") {
    target = linear_equilibrium(frame, cfg.alpha0, cfg.beta0, rho0.space);
  } else if (id == "voc_distance") {
    if (tr.drives == nullptr) {
      BoundReport r;
      r.bound_id = id;
      r.hypothesis_ok = false;
      r.hypothesis_note = "voc_distance needs a driven trajectory";
      return r;
    }
    target = linear_equilibrium(frame, tr.drives->alpha0, tr.drives->beta0, rho0.space);
    EvolveOptions opt;
    opt.dt = tr.result.dt;
    opt.t_end = cfg.t_end;
    opt.sample_every = cfg.sample_every;
    semigroup = evolve(rho0, Generator::autonomous(frame, tr.drives->alpha0, tr.drives->beta0),
                       opt)
                    .states;
    in.semigroup_states = &semigroup;
  }
  return verify_explicit_bound(id, tr.result.times, tr.result.states, target, in);
}

void run_steady(Context& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  const LaserParams& p = cfg.params;
  const DensityMatrix rho = stationary_state(p, cfg.space);
  const double res_mf = generator_meanfield(rho, p, false).cwiseAbs().maxCoeff();
  const double res_rot = generator_meanfield(rho, p, true).cwiseAbs().maxCoeff();
  const double res_lin = generator_linear_h(rho, p).cwiseAbs().maxCoeff();

  OperatorMatrix op{rho.entries, cfg.space, "stationary_state"};
  ctx.out.write_json("stationary_state.json", to_json(op));
  ctx.emitted_states.push_back(rho);

  json rep;
  rep["params"] = to_json(p);
  rep["regime"] = regime_json(p);
  rep["generator_residual"] = {{"mean_field", res_mf}, {"mean_field_rotating", res_rot},
                               {"linear", res_lin}};
  rep["residual_ok"] = std::max({res_mf, res_rot, res_lin}) < 1e-12;
  rep["diagnostics"] = diagnostics_json(diagnose(rho.entries, cfg.space));
  json eqs = json::array();
  for (const auto& e : mb_equilibria(p)) {
    json je = mb_state_json(e.state);
    je["phase_family"] = e.phase_family;
    eqs.push_back(je);
  }
  rep["mb_equilibria"] = eqs;

  const LaserParams frame = p.with_omega(0.0);
  if (cooperative_parameter(frame) > 1.0) {
    const DensityMatrix cycle = limit_cycle_state(frame, 0.0, 0.0, cfg.space);
    const double res_cycle = generator_meanfield(cycle, frame, true).cwiseAbs().maxCoeff();
    ctx.out.write_json("limit_cycle_state.json",
                       to_json(OperatorMatrix{cycle.entries, cfg.space, "limit_cycle_state"}));
    ctx.emitted_states.push_back(cycle);
    rep["limit_cycle"] = {{"theta", 0.0},
                          {"rotating_residual", res_cycle},
                          {"abs_A", std::abs(kernels::trace_a(cycle.entries, cfg.space))},
                          {"inversion", means(cycle).D}};
  }
  ctx.out.write_json("steady_report.json", rep);
  if (ctx.check && !rep["residual_ok"].get<bool>()) {
    ctx.fail_verification("stationary generator residual above 1e-12");
  }
}

void run_evolve(Context& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  const LaserParams& p = cfg.params;
  const DensityMatrix rho0 = make_initial_state(cfg.initial_state, p, cfg.space);
  const double dt = ctx.dt_for(p, cfg.space);
  const ObservableSet obs(cfg.observables, p, cfg.space);

  std::ostringstream obs_csv, means_csv;
  CsvWriter obs_w(obs_csv, with_time(cfg.observables));
  CsvWriter means_w(means_csv, {"t", "re_A", "im_A", "re_S", "im_S", "D"});
  std::vector<double> last_obs;
  const Trajectory tr = run_generator(
      cfg.generator, cfg, p, rho0, dt, !cfg.bounds.empty(),
      [&](double t, const DensityMatrix& rho) {
        std::vector<double> row{t};
        last_obs = obs.evaluate(rho);
        row.insert(row.end(), last_obs.begin(), last_obs.end());
        obs_w.row(row);
        const MBState m = means(rho);
        means_w.row({t, m.A.real(), m.A.imag(), m.S.real(), m.S.imag(), m.D});
      });
  ctx.write_csv("observables.csv", obs_csv.str());
  ctx.write_csv("means.csv", means_csv.str());
  ctx.emitted_states.push_back(tr.result.final_state);

  json summary;
  summary["generator"] = cfg.generator;
  summary["rotating_frame"] = cfg.rotating_frame;
  summary["regime"] = regime_json(p);
  summary["dt"] = tr.result.dt;
  summary["steps"] = tr.result.steps;
  summary["samples"] = tr.result.times.size();
  summary["worst_diagnostics"] = diagnostics_json(tr.result.worst);
  summary["final_diagnostics"] = diagnostics_json(diagnose(tr.result.final_state.entries, cfg.space));
  json fin;
  for (std::size_t k = 0; k < cfg.observables.size(); ++k) fin[cfg.observables[k]] = last_obs[k];
  summary["final_observables"] = fin;

  if (cfg.generator == "mean_field") {
    const LaserParams frame = frame_of(cfg, p);
    const MBTrajectory mb = integrate_mb(means(rho0), frame, cfg.t_end, tr.result.dt,
                                         cfg.sample_every);
    std::ostringstream mb_csv;
    write_csv(mb_csv, mb);
    ctx.write_csv("mb_trajectory.csv", mb_csv.str());
  }

  if (!cfg.bounds.empty()) {
    json reports = json::array();
    for (const auto& id : cfg.bounds) {
      const BoundReport r = check_bound(ctx, id, p, rho0, tr);
      reports.push_back(r.to_json());
      if (!r.holds()) ctx.fail_verification("bound " + id + " failed");
    }
    ctx.out.write_json("bounds.json", reports);
  }
  if (cfg.snapshot) {
    ctx.out.write_json("final_state.json", to_json(OperatorMatrix{tr.result.final_state.entries,
                                                                  cfg.space, "final_state"}));
  }
  ctx.out.write_json("summary.json", summary);
}

LaserParams sweep_point(const ExperimentConfig& cfg, double v) {
  const LaserParams& b = cfg.params;
  const std::string& var = cfg.sweep_variable;
  if (var == "C_b") {
    if (!(b.d() > 0.0)) throw ConfigError("C_b sweeps need d > 0 in the base parameters");
    return LaserParams::with_cooperative(b.kappa(), b.gamma(), b.d(), v, b.omega());
  }
  double kappa = b.kappa(), gamma = b.gamma(), d = b.d(), g = b.g(), omega = b.omega();
  if (var == "kappa") kappa = v;
  if (var == "gamma") gamma = v;
  if (var == "d") d = v;
  if (var == "g") g = v;
  if (var == "omega") omega = v;
  return LaserParams::from_decay(kappa, gamma, d, g, omega);
}

void run_sweep(Context& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  const std::size_t n = cfg.sweep_grid.size();
  std::vector<LaserParams> points;
  for (double v : cfg.sweep_grid) points.push_back(sweep_point(cfg, v));

  struct Row {
    MBState final_means;
    std::vector<double> observables;
    DensityMatrix final_state;
  };
  std::vector<Row> rows(n);
  std::vector<std::exception_ptr> errors(n);

  // Points are independent; each keeps its own state. The kernel's nested
  // region runs serially inside this loop.
#pragma omp parallel for schedule(dynamic)
  for (std::size_t k = 0; k < n; ++k) {
    try {
      const LaserParams& p = points[k];
      const DensityMatrix rho0 = make_initial_state(cfg.initial_state, p, cfg.space);
      const ObservableSet obs(cfg.observables, p, cfg.space);
      EvolveOptions opt;
      opt.dt = ctx.dt_for(p, cfg.space);
      opt.t_end = cfg.t_end;
      opt.sample_every = std::numeric_limits<int>::max();
      opt.keep_states = false;
      const EvolveResult r = evolve(rho0, Generator::mean_field(p, cfg.rotating_frame), opt);
      rows[k] = Row{means(r.final_state), obs.evaluate(r.final_state), r.final_state};
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<std::string> header{cfg.sweep_variable, "c_b", "regime", "abs_A_final",
                                  "abs_A_closed_form", "inversion_final", "inversion_closed_form"};
  header.insert(header.end(), cfg.observables.begin(), cfg.observables.end());
  std::ostringstream csv;
  CsvWriter w(csv, header);
  for (std::size_t k = 0; k < n; ++k) {
    const LaserParams frame = points[k].with_omega(0.0);
    const double c_b = cooperative_parameter(frame);
    const double r0 = lasing_amplitude(frame);
    const double d_closed = c_b > 1.0 ? frame.d() / c_b : frame.d();
    std::vector<std::string> cells{CsvWriter::format(cfg.sweep_grid[k]), CsvWriter::format(c_b),
                                   to_string(classify_regime(frame).regime),
                                   CsvWriter::format(std::abs(rows[k].final_means.A)),
                                   CsvWriter::format(r0), CsvWriter::format(rows[k].final_means.D),
                                   CsvWriter::format(d_closed)};
    for (double v : rows[k].observables) cells.push_back(CsvWriter::format(v));
    w.row_text(cells);
    ctx.emitted_states.push_back(rows[k].final_state);
  }
  ctx.write_csv("sweep.csv", csv.str());
}

void run_stability(Context& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  const double kappa = cfg.params.kappa();
  const double gamma = cfg.params.gamma();
  std::ostringstream csv;
  CsvWriter w(csv, {"C_b", "branch", "max_real_part", "classification"});
  json spectra = json::array();
  for (double c : cfg.sweep_grid) {
    if (c > 1.0) {
      const StabilityReport r = stability_at(kappa, gamma, c);
      w.row_text({CsvWriter::format(c), "lasing", CsvWriter::format(r.max_real_part),
                  to_string(r.classification)});
      json ev = json::array();
      for (const Complex& z : r.eigenvalues) ev.push_back(complex_to_json(z));
      spectra.push_back({{"c_b", c}, {"eigenvalues", ev}, {"cubic_coeffs", r.cubic_coeffs}});
    } else {
      // Below threshold only the origin exists; its (A, S) block has
      // eigenvalues -(k+g)/2 +- sqrt((k-g)^2/4 + C_b k g), D relaxes at -2 gamma.
      const double top = -(kappa + gamma) / 2.0 +
                         std::sqrt((kappa - gamma) * (kappa - gamma) / 4.0 + c * kappa * gamma);
      const double mr = std::max(top, -2.0 * gamma);
      const std::string cls = mr < 0.0 ? "Stable" : (mr == 0.0 ? "Marginal" : "Unstable");
      w.row_text({CsvWriter::format(c), "origin", CsvWriter::format(mr), cls});
    }
  }
  ctx.write_csv("stability.csv", csv.str());
  ctx.out.write_json("spectra.json", spectra);

  const double lo = std::max(1.0, *std::min_element(cfg.sweep_grid.begin(), cfg.sweep_grid.end()));
  const double hi = *std::max_element(cfg.sweep_grid.begin(), cfg.sweep_grid.end());
  json hopf;
  hopf["kappa"] = kappa;
  hopf["gamma"] = gamma;
  const double closed = second_threshold(kappa, gamma);
  hopf["closed_form"] = std::isfinite(closed) ? json(closed) : json("inf");
  if (hi > lo) {
    const HopfSearch h = locate_hopf(kappa, gamma, lo, hi);
    hopf["found"] = h.found;
    hopf["sign_changes"] = h.sign_changes;
    if (h.found) {
      hopf["bisection"] = h.c_b;
      hopf["bisection_iterations"] = h.iterations;
      const bool agree = std::isfinite(closed) && std::abs(h.c_b - closed) <= 1e-6 * closed;
      hopf["agree"] = agree;
      if (!agree) ctx.fail_verification("bisected Hopf point disagrees with the closed form");
    } else {
      const bool expected_none = !(std::isfinite(closed) && closed > lo && closed <= hi);
      hopf["agree"] = expected_none;
      if (!expected_none) ctx.fail_verification("closed-form threshold in range but no flip found");
    }
  }
  ctx.out.write_json("hopf.json", hopf);
}

void run_verify(Context& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  const LaserParams& p = cfg.params;
  const LaserParams frame = frame_of(cfg, p);
  const DensityMatrix rho0 = make_initial_state(cfg.initial_state, p, cfg.space);
  const double dt = ctx.dt_for(p, cfg.space);
  json report;
  report["regime"] = regime_json(p);

  json bounds = json::array();
  for (const auto& id : cfg.bounds) {
    std::string gen = "mean_field";
    if (id == "linear_decay") gen = "linear";
    if (id == "constant_drive") gen = "constant_drive";
    if (id == "voc_distance") gen = "mb_driven";
    if (gen == "constant_drive" && !cfg.drive_given) {
      throw ConfigError("bound constant_drive needs a drive block");
    }
    const Trajectory tr = run_generator(gen, cfg, p, rho0, dt, true, {});
    const BoundReport r = check_bound(ctx, id, p, rho0, tr);
    json jr = r.to_json();
    jr["worst_diagnostics"] = diagnostics_json(tr.result.worst);
    bounds.push_back(jr);
    ctx.emitted_states.push_back(tr.result.final_state);
    std::ostringstream csv;
    CsvWriter w(csv, {"t", "lhs", "rhs"});
    for (std::size_t k = 0; k < r.times.size(); ++k) w.row({r.times[k], r.lhs[k], r.rhs[k]});
    ctx.write_csv("bound_" + id + ".csv", csv.str());
    if (!r.holds()) ctx.fail_verification("bound " + id + " failed");
  }
  report["bounds"] = bounds;

  json checks = json::object();
  for (const auto& name : cfg.checks) {
    json c;
    bool pass = false;
    if (name == "stationarity") {
      const DensityMatrix st = stationary_state(p, cfg.space);
      const double res = generator_meanfield(st, p, cfg.rotating_frame).cwiseAbs().maxCoeff();
      c["generator_residual"] = res;
      pass = res < 1e-12;
    } else if (name == "ehrenfest") {
      const EhrenfestReport e =
          ehrenfest_check(rho0, p, cfg.t_end, dt, cfg.sample_every, cfg.rotating_frame);
      c["max_deviation"] = e.max_deviation;
      c["worst_diagnostics"] = diagnostics_json(e.worst);
      pass = e.max_deviation < 1e-6;
    } else if (name == "theta_tracking") {
      ThetaTrackingOptions o;
      o.epsilon = cfg.epsilon;
      o.t_end = cfg.t_end;
      o.dt = dt;
      o.sample_every = cfg.sample_every;
      const ThetaTrackingReport t = theta_tracking_check(rho0, p, o);
      c["theta_infinity"] = t.theta;
      c["initial_distance"] = t.initial_distance;
      c["final_distance"] = t.final_distance;
      c["distance_rate"] = t.distance_fit.fitted_rate;
      c["gap_rate"] = t.gap_fit.fitted_rate;
      c["worst_diagnostics"] = diagnostics_json(t.worst);
      pass = t.tracking_ok;
      ctx.emitted_states.push_back(t.final_state);
    } else if (name == "truncation") {
      const std::vector<int> cutoffs =
          cfg.truncation_n_max.empty() ? std::vector<int>{16, 24, 32} : cfg.truncation_n_max;
      const TruncationStudy st = truncation_study(
          [&](int n_max) {
            const SpaceSpec space = make_space(n_max);
            const DensityMatrix r0 = make_initial_state(cfg.initial_state, p, space);
            const ObservableSet obs(cfg.observables, p, space);
            std::vector<double> all;
            run_generator(cfg.generator, cfg, p, r0, dt, false,
                          [&](double, const DensityMatrix& rho) {
                            const auto v = obs.evaluate(rho);
                            all.insert(all.end(), v.begin(), v.end());
                          });
            return all;
          },
          cutoffs, cfg.truncation_tol);
      c["n_max"] = st.n_max;
      c["max_deviation"] = st.max_deviation;
      c["aborted"] = st.aborted;
      pass = st.converged;
    } else if (name == "lyapunov") {
      const MBTrajectory mb =
          integrate_mb(means(rho0), frame, cfg.t_end, default_mb_dt(frame), 100);
      const LyapunovReport l = lyapunov_certificates(mb, frame);
      c["energy_holds"] = l.energy.all_hold;
      c["sharpened_applicable"] = l.sharpened_applicable;
      if (l.sharpened_applicable) c["sharpened_holds"] = l.sharpened.all_hold;
      pass = l.energy.all_hold && (!l.sharpened_applicable || l.sharpened.all_hold);
    }
    c["pass"] = pass;
    checks[name] = c;
    if (!pass) ctx.fail_verification("check " + name + " failed");
  }
  report["checks"] = checks;
  report["pass"] = ctx.outcome.exit_code == kExitOk;
  ctx.out.write_json("verify_report.json", report);
}

bool csv_cells_finite(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      if (cell == "nan" || cell == "-nan" || cell == "inf" || cell == "-inf") return false;
    }
  }
  return true;
}

void run_output_checks(Context& ctx) {
  for (const auto& rho : ctx.emitted_states) {
    try {
      require_valid(rho);
    } catch (const NumericalError& e) {
      ctx.fail_verification(std::string("output state invariant: ") + e.what());
    }
  }
  for (const auto& name : ctx.csv_files) {
    if (!csv_cells_finite(ctx.out.path(name))) {
      ctx.fail_verification("non-finite value in " + name);
    }
  }
  for (const auto& name : ctx.out.files()) {
    if (!std::filesystem::exists(ctx.out.path(name))) {
      ctx.fail_verification("manifest lists missing file " + name);
    }
  }
}

}  // namespace

RunOutcome run_experiment(const ExperimentConfig& cfg_in, const std::filesystem::path& out,
                          const RunOptions& opt) {
  ExperimentConfig cfg = cfg_in;
  if (opt.n_max) {
    if (*opt.n_max < 1) throw ConfigError("--n-max must be >= 1");
    cfg.space = make_space(*opt.n_max);
  }
  if (opt.dt) {
    if (!(*opt.dt > 0.0)) throw ConfigError("--dt must be positive");
    cfg.dt = *opt.dt;
  }

  RunOutcome outcome;
  ArtifactWriter writer(out);
  Context ctx{cfg, writer, outcome, opt.check, 0.0, {}, {}};
  try {
    switch (cfg.kind) {
      case ExperimentKind::Steady:
        run_steady(ctx);
        break;
      case ExperimentKind::Evolve:
        run_evolve(ctx);
        break;
      case ExperimentKind::Sweep:
        run_sweep(ctx);
        break;
      case ExperimentKind::Stability:
        run_stability(ctx);
        break;
      case ExperimentKind::Verify:
        run_verify(ctx);
        break;
    }
    if (opt.check) run_output_checks(ctx);
  } catch (const std::exception& e) {
    outcome.exit_code = exit_code_for(e);
    outcome.messages.push_back(e.what());
  }

  json manifest;
  manifest["tool"] = "lasersim";
  manifest["version"] = library_version();
  manifest["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." +
                              std::to_string(EIGEN_MAJOR_VERSION) + "." +
                              std::to_string(EIGEN_MINOR_VERSION);
  manifest["kind"] = to_string(cfg.kind);
  manifest["config"] = cfg.resolved();
  manifest["check"] = opt.check;
  manifest["exit_code"] = outcome.exit_code;
  manifest["messages"] = outcome.messages;
  manifest["files"] = writer.files();
  outcome.files = writer.files();
  writer.write_json("manifest.json", manifest);
  return outcome;
}

}  // namespace lasersim
