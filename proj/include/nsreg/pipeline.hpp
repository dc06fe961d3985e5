#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "nsreg/analytic.hpp"
#include "nsreg/config.hpp"
#include "nsreg/diagnostics.hpp"
#include "nsreg/dss.hpp"
#include "nsreg/io.hpp"
#include "nsreg/localization.hpp"
#include "nsreg/norms.hpp"
#include "nsreg/semigroup.hpp"
#include "nsreg/solver.hpp"

namespace nsreg {

/// A library error tagged with the stage that raised it.
class StageFailure : public std::runtime_error {
 public:
  StageFailure(std::string stage, const Error& e)
      : std::runtime_error("stage '" + stage + "': " + e.what()), stage_(std::move(stage)), kind_(e.kind()) {}
  const std::string& stage() const { return stage_; }
  ErrorKind kind() const { return kind_; }

 private:
  std::string stage_;
  ErrorKind kind_;
};

template <class F>
auto run_stage(const std::string& stage, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const StageFailure&) {
    throw;
  } catch (const Error& e) {
    throw StageFailure(stage, e);
  } catch (const nlohmann::json::exception& e) {
    throw StageFailure(stage, Error(ErrorKind::ConfigError, e.what()));
  } catch (const fs::filesystem_error& e) {
    throw StageFailure(stage, Error(ErrorKind::IoError, e.what()));
  }
}

/// 0 success, 2 configuration or input, 3 numerical gate, 4 coverage gap.
inline int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::ConfigError:
    case ErrorKind::InvalidArgument:
    case ErrorKind::IoError:
      return 2;
    case ErrorKind::CoverageGap:
      return 4;
    default:
      return 3;
  }
}

// ---- data stage ----------------------------------------------------------------------

struct DataBundle {
  std::string label;
  std::optional<SpectralField> field;
  std::optional<ScalarFn> magnitude;  // analytic magnitude for norm-only presets
  std::optional<DssProfile> profile;
};

inline DssProfile profile_from(const Json& cfg) {
  const Json& d = cfg["dss"];
  const std::string path = d["path"].get<std::string>();
  if (!path.empty()) return read_profile(path);
  const std::string name = d["profile"].get<std::string>();
  double lam = d["lambda"].get<double>(), amp = d["amplitude"].get<double>();
  if (name == "swirl") return swirl_profile(lam, amp);
  if (name == "self-similar") return self_similar_profile(lam, amp);
  if (name == "oscillating") return oscillating_profile(lam, amp);
  if (name == "zero") return zero_profile(lam);
  fail(ErrorKind::ConfigError, "unknown DSS profile '" + name + "'");
}

/// Extension of the profile cut off radially, projected, dealiased and mean free.
inline SpectralField dss_grid_field(const DssProfile& p, const GridSpec& g, double amp, double inner, double outer) {
  require(0 < inner && inner < outer && 2 * outer <= g.length + 1e-12, ErrorKind::ConfigError,
          "DSS cutoff needs 0 < inner < outer <= L/2");
  VectorFn ext = extend_dss(p);
  SpectralField v = spectral_from(g, [&](const Vec3& x) {
    double r = norm(x);
    return r > 0 ? amp * radial_bump(r, inner, outer) * ext(x) : Vec3{};
  });
  v = leray_project(v);
  dealias(v);
  for (auto& c : v.comp) c[0] = 0.0;
  return v;
}

inline DataBundle make_data(const Json& cfg) {
  const GridSpec g = grid_of(cfg);
  const Json& d = cfg["data"];
  const std::string src = d["source"].get<std::string>();
  const double amp = d["amplitude"].get<double>();
  DataBundle b;
  if (src == "snapshot") {
    SpectralField v = read_snapshot(d["path"].get<std::string>());
    b.label = "snapshot";
    b.field = v;
    return b;
  }
  if (src == "dss_profile") {
    std::string path = d["path"].get<std::string>();
    require(!path.empty(), ErrorKind::ConfigError, "data.path is required for source dss_profile");
    b.profile = read_profile(path);
    b.field = dss_grid_field(*b.profile, g, amp, d["inner"].get<double>(), d["outer"].get<double>());
    b.label = "dss-profile-file";
    return b;
  }
  const std::string name = d["preset"].get<std::string>();
  b.label = name;
  if (name == "zero") {
    b.field = zero_field(g);
  } else if (name == "taylor-green") {
    b.field = spectral_from(g, taylor_green_data(amp));
  } else if (name == "shear") {
    b.field = spectral_from(g, shear_mode_data(amp));
  } else if (name == "shear-pair") {
    b.field = spectral_from(g, shear_pair_data(amp));
  } else if (name == "random") {
    b.field = random_solenoidal(g, cfg["seed"].get<std::uint64_t>(), d["max_mode"].get<int>(), amp);
  } else if (name == "inverse-radius") {
    b.magnitude = [amp](const Vec3& x) {
      double r = norm(x);
      return r > 0 ? amp / r : 0.0;
    };
  } else if (name == "dss") {
    b.profile = profile_from(cfg);
    b.field = dss_grid_field(*b.profile, g, amp, d["inner"].get<double>(), d["outer"].get<double>());
  } else {
    fail(ErrorKind::ConfigError, "unknown data preset '" + name + "'");
  }
  return b;
}

inline const SpectralField& require_field(const DataBundle& b) {
  require(b.field.has_value(), ErrorKind::ConfigError, "data preset '" + b.label + "' has no velocity field");
  return *b.field;
}

// ---- norm ----------------------------------------------------------------------------

/// One report per entry of the norm menu; returns the reports in menu order.
inline std::vector<Json> run_norms(const Json& cfg, const DataBundle& data) {
  std::vector<Json> out;
  if (cfg["norms"].empty()) return out;
  std::unique_ptr<MagnitudeSource> src;
  if (data.magnitude)
    src = magnitude_of(*data.magnitude);
  else
    src = magnitude_of(require_field(data));
  for (const auto& n : cfg["norms"]) {
    const std::string kind = n["kind"].get<std::string>();
    NormReport r;
    if (kind == "herz") {
      double p = n["p"].get<double>();
      HerzParams hp = HerzParams::critical(p);
      if (!n["s"].is_null()) hp.s = n["s"].get<double>();
      const std::string flavor = n["flavor"].get<std::string>();
      require(flavor == "shell" || flavor == "ball", ErrorKind::ConfigError, "herz flavor must be shell or ball");
      hp.flavor = flavor == "shell" ? HerzFlavor::ShellSup : HerzFlavor::BallEquivalent;
      r = herz_norm(*src, hp, {n["k_min"].get<int>(), n["k_max"].get<int>()});
    } else if (kind == "lp" || kind == "weak_lp") {
      Region reg{to_vec3(n["center"]), n["inner"].get<double>(), n["outer"].get<double>()};
      r = kind == "lp" ? lp_norm(*src, reg, n["p"].get<double>()) : weak_lp_norm(*src, reg, n["p"].get<double>());
    } else if (kind == "uloc") {
      r = uloc_norm(*src, n["q"].get<double>(), n["rho"].get<double>());
    } else {
      double rad = n["r"].get<double>();
      r.norm_id = "data_quantity_nr";
      r.params = {{"r", rad}};
      r.value = data_quantity_nr(*src, rad);
    }
    out.push_back(to_json(r));
  }
  return out;
}

// ---- simulate --------------------------------------------------------------------------

struct SimulationOutcome {
  TrajectoryLedger ledger;
  Json report;
};

inline SnapshotPolicy policy_of(const Json& cfg) {
  const Json& s = cfg["solver"];
  SnapshotPolicy pol;
  pol.stride = s["stride"].get<int>();
  pol.t_begin = s["t_begin"].get<double>();
  pol.store_pressure = s["store_pressure"].get<bool>();
  double dense = cfg["diagnostics"]["lei"]["tau"].get<double>();
  if (cfg["diagnostics"]["lei"]["enabled"].get<bool>() && cfg["diagnostics"]["lei"]["t0"].is_null())
    pol.dense_from = s["T"].get<double>() - dense;
  return pol;
}

inline SimulationOutcome run_simulate(const Json& cfg, const SpectralField& v0) {
  const Json& s = cfg["solver"];
  double T = s["T"].get<double>(), dt = s["dt"].get<double>();
  require(T >= 0 && dt > 0, ErrorKind::ConfigError, "solver needs T >= 0 and dt > 0");
  StepOptions so;
  so.cfl_limit = cfg["budgets"]["cfl"].get<double>();
  SimulationOutcome o;
  o.ledger = evolve(v0, T, dt, policy_of(cfg), so);
  double defect = energy_equality_defect(o.ledger);
  o.report = {{"module", "ns-solver"},
              {"T", T},
              {"dt", o.ledger.dt},
              {"steps", o.ledger.step_times.size() - 1},
              {"snapshots", o.ledger.snapshots.size()},
              {"scheme", o.ledger.scheme},
              {"energy_initial", o.ledger.energy.front()},
              {"energy_final", o.ledger.energy.back()},
              {"energy_equality_defect", defect}};
  return o;
}

// ---- diagnose --------------------------------------------------------------------------

struct DiagnosticsOutcome {
  Json report;
  std::vector<std::pair<std::string, std::string>> tables;  // file name, CSV text
  std::vector<std::string> oracles;
};

namespace detail {

inline std::vector<Vec3> random_points(std::mt19937_64& rng, int count, double radius) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec3> pts;
  while (int(pts.size()) < count) {
    Vec3 x{u(rng), u(rng), u(rng)};
    if (dot(x, x) <= 1.0) pts.push_back(radius * x);
  }
  return pts;
}

inline std::vector<double> auto_radii(const GridSpec& g, double t0) {
  const double rmin = 4.0 * g.spacing() * 1.01;
  const double rmax = std::min(0.999 * std::sqrt(t0), 0.25 * g.length);
  std::vector<double> r;
  for (double x = rmax; x >= rmin && r.size() < 3; x /= 1.5) r.push_back(x);
  return r;
}

inline double psi_weight(double theta, double beta) {
  double c3 = std::pow(ball_volume(1.0), -1.0 / 3.0);
  return std::pow(theta, 2.0 / 3.0 + beta) / (2.0 * c3);
}

inline std::string verdict_word(bool pass) { return pass ? "pass" : "fail"; }

}  // namespace detail

inline std::vector<std::string> cylinder_columns() {
  return {"x0", "y0", "z0", "t0", "r", "C", "D", "phi", "B", "Psi", "verdict"};
}

inline DiagnosticsOutcome run_diagnose(const Json& cfg, const TrajectoryLedger& led) {
  DiagnosticsOutcome out;
  const Json& d = cfg["diagnostics"];
  const Json& bud = cfg["budgets"];
  const GridSpec& g = led.grid;
  const double t_end = led.t_end();
  std::mt19937_64 rng(cfg["seed"].get<std::uint64_t>());
  Json rep = Json::object();
  rep["ledger"] = {{"grid", grid_json(g)}, {"t_end", t_end}, {"snapshots", led.snapshots.size()}, {"dt", led.dt}};

  if (d["energy_equality"].get<bool>()) {
    double defect = run_stage("diagnose:energy_equality", [&] { return energy_equality_defect(led); });
    double tol = bud["energy_tol"].get<double>();
    rep["energy_equality"] = {{"module", "ns-solver"}, {"defect", defect}, {"budget", tol},
                              {"verdict", detail::verdict_word(defect <= tol)}};
    out.oracles.push_back("energy equality defect");
  }

  if (d["lei"]["enabled"].get<bool>()) {
    const Json& l = d["lei"];
    TestFunctionSpec phi;
    phi.center = to_vec3(l["center"]);
    phi.t0 = l["t0"].is_null() ? t_end : l["t0"].get<double>();
    phi.temporal_scale = l["tau"].get<double>();
    phi.spatial_scale = std::min(l["spatial_scale"].get<double>(), 0.45 * g.length);
    LeiTerms t = run_stage("diagnose:lei", [&] { return local_energy_residual(led, phi); });
    double tol = bud["lei_tol"].get<double>();
    rep["lei"] = {{"module", "ns-solver"},
                  {"t0", phi.t0},
                  {"tau", phi.temporal_scale},
                  {"spatial_scale", phi.spatial_scale},
                  {"residual", t.residual},
                  {"relative", t.relative},
                  {"time_samples", t.time_samples},
                  {"budget", tol},
                  {"verdict", detail::verdict_word(std::abs(t.relative) <= tol)}};
    out.oracles.push_back("local energy inequality residual");
  }

  const double theta = d["decay"]["theta"].get<double>(), beta = d["decay"]["beta"].get<double>();
  CknBudgets ckn{bud["eps_ckn"].get<double>(), bud["c_ckn"].get<double>()};

  if (d["cylinders"]["enabled"].get<bool>()) {
    const Json& c = d["cylinders"];
    double t0 = c["t0"].is_null() ? t_end : c["t0"].get<double>();
    std::vector<Vec3> centers;
    for (const auto& x : c["centers"]) centers.push_back(to_vec3(x));
    for (const Vec3& x : detail::random_points(rng, c["random_centers"].get<int>(), 0.25 * g.length)) centers.push_back(x);
    std::vector<double> radii = c["radii"].empty() ? detail::auto_radii(g, t0) : c["radii"].get<std::vector<double>>();
    require(!radii.empty(), ErrorKind::UnresolvedCylinder, "no resolvable cylinder radius for this grid and horizon");
    CsvTable csv(cylinder_columns());
    Json rows = Json::array();
    const double w = detail::psi_weight(theta, beta);
    for (const Vec3& x0 : centers)
      for (double r : radii) {
        CylinderQuantities q = run_stage("diagnose:cylinders", [&] { return cylinder_quantities(led, {x0, t0, r}); });
        CknVerdict v = ckn_flag(q, ckn);
        std::string word = v.flagged_regular ? "flagged-regular" : "not-flagged";
        csv.row().add(x0.x).add(x0.y).add(x0.z).add(t0).add(r).add(q.C).add(q.D).add(q.phi).add(q.B).add(q.phi + w * q.B).add(word);
        rows.push_back({{"x0", vec_json(x0)},
                        {"t0", t0},
                        {"r", r},
                        {"C", q.C},
                        {"D", q.D},
                        {"phi", q.phi},
                        {"B", q.B},
                        {"pressure_form", to_string(q.form)},
                        {"gauge", "mean-zero"},
                        {"volume_error", q.volume_error},
                        {"time_error", q.time_error},
                        {"sum", v.sum},
                        {"eps_budget", v.eps_budget},
                        {"sup_half", v.sup_half},
                        {"sup_budget", v.sup_budget},
                        {"verdict", word}});
      }
    rep["cylinders"] = {{"module", "ckn-diagnostics"}, {"budgets", {{"eps_ckn", ckn.eps_ckn}, {"c_ckn", ckn.c_ckn}}},
                        {"rows", rows}};
    out.tables.push_back({"cylinders.csv", csv.str()});
    out.oracles.push_back("CKN cylinder quantities");
  }

  if (d["decay"]["enabled"].get<bool>()) {
    const Json& c = d["decay"];
    double t0 = c["t0"].is_null() ? t_end : c["t0"].get<double>();
    double r0 = c["r0"].is_null() ? std::min(0.999 * std::sqrt(t0), 0.25 * g.length) : c["r0"].get<double>();
    Vec3 x0 = to_vec3(c["x0"]);
    DecayLedger dl = run_stage("diagnose:decay",
                               [&] { return decay_ledger(led, x0, t0, theta, beta, r0, c["max_rungs"].get<int>()); });
    CsvTable csv(cylinder_columns());
    Json rungs = Json::array();
    for (const auto& r : dl.rungs) {
      std::string word = r.degenerate ? "degenerate" : (&r == &dl.rungs.front() ? "first" : (r.within ? "within" : "outside"));
      csv.row().add(x0.x).add(x0.y).add(x0.z).add(t0).add(r.r).add(r.C).add(r.D).add(r.phi).add(r.B).add(r.Psi).add(word);
      rungs.push_back({{"r", r.r}, {"C", r.C}, {"D", r.D}, {"phi", r.phi}, {"B", r.B}, {"Psi", r.Psi}, {"ratio", r.ratio}, {"verdict", word}});
    }
    rep["decay"] = {{"module", "ckn-diagnostics"},
                    {"theta", theta},
                    {"beta", beta},
                    {"target_ratio", std::pow(theta, beta)},
                    {"c3", dl.c3},
                    {"fraction_within", dl.fraction_within},
                    {"terminated_early", dl.terminated_early},
                    {"termination", dl.termination},
                    {"rungs", rungs}};
    out.tables.push_back({"decay.csv", csv.str()});
    out.oracles.push_back("decay ledger");
  }

  if (d["energy_check"]["enabled"].get<bool>()) {
    double r = d["energy_check"]["r"].get<double>(), c0 = bud["c0"].get<double>();
    EnergyCheck e = run_stage("diagnose:energy_check", [&] { return apriori_energy_check(led, r, c0); });
    rep["energy_check"] = {{"module", "ckn-diagnostics"}, {"r", r},        {"c0", c0},
                           {"N_r", e.nr},                  {"sigma", e.sigma}, {"window", e.window},
                           {"A0", e.a0},                   {"max_ratio", e.max_ratio}, {"budget", 2.0},
                           {"measured_constant", e.measured_constant},
                           {"verdict", detail::verdict_word(e.passes)}};
    out.oracles.push_back("a priori energy bound");
  }

  if (d["pressure_check"]["enabled"].get<bool>()) {
    const Json& c = d["pressure_check"];
    double pb = bud["pressure_budget"].get<double>();
    std::optional<double> budget = pb > 0 ? std::optional<double>(pb) : std::nullopt;
    PressureApriori p = run_stage("diagnose:pressure_check", [&] {
      return pressure_apriori_check(led, c["r"].get<double>(), c["s"].get<double>(), c["q"].get<double>(),
                                    bud["c0"].get<double>(), 0.0, budget);
    });
    rep["pressure_check"] = {{"module", "ckn-diagnostics"}, {"r", p.r},   {"s", p.s},
                             {"q", p.q},                     {"N_r", p.nr}, {"sup_value", p.sup_value},
                             {"measured_constant", p.measured_constant},
                             {"budget", budget ? Json(*budget) : Json(nullptr)},
                             {"verdict", budget ? detail::verdict_word(p.within_budget) : "recorded"}};
    out.oracles.push_back("pressure a priori bound");
  }

  if (d["paraboloid"]["enabled"].get<bool>()) {
    const Json& c = d["paraboloid"];
    double radius = c["radius"].is_null() ? 0.25 * g.length : c["radius"].get<double>();
    std::uniform_real_distribution<double> ut(0.0, 1.0);
    std::vector<ProbePoint> probes;
    for (const Vec3& x : detail::random_points(rng, c["probes"].get<int>(), radius))
      probes.push_back({x, t_end * (1.0 - ut(rng))});
    double c1 = bud["c1"].get<double>(), eps = bud["eps_paraboloid"].get<double>();
    RegularityMap m = run_stage("diagnose:paraboloid",
                                [&] { return paraboloid_map(led, c["sigma2"].get<double>(), probes, c1, eps); });
    CsvTable csv({"x", "y", "z", "t", "admitted", "value", "verdict"});
    int admitted = 0;
    for (std::size_t i = 0; i < probes.size(); ++i) {
      admitted += m.admitted[i];
      csv.row().add(probes[i].x.x).add(probes[i].x.y).add(probes[i].x.z).add(probes[i].t)
          .add(m.admitted[i] ? "1" : "0").add(m.values[i]).add(to_string(m.verdicts[i]));
    }
    rep["paraboloid"] = {{"module", "ckn-diagnostics"}, {"sigma2", m.sigma2}, {"c1_budget", c1},
                         {"eps_budget", eps},           {"probes", probes.size()}, {"admitted", admitted},
                         {"max_value", m.max_value}};
    out.tables.push_back({"paraboloid.csv", csv.str()});
    out.oracles.push_back("paraboloid regularity map");
  }
  out.report = rep;
  return out;
}

// ---- DSS, localization and Picard commands ----------------------------------------------------

inline Json run_verify_dss(const Json& cfg, const DssProfile& p) {
  DssSampling s;
  s.count = cfg["dss"]["samples"].get<int>();
  s.seed = cfg["seed"].get<std::uint64_t>();
  double defect = verify_dss(extend_dss(p), p.lambda, s);
  return {{"module", "dss-data"}, {"lambda", p.lambda}, {"samples", s.count}, {"defect", defect},
          {"seam_tolerance", p.seam_tolerance}, {"seam_defect", seam_defect(p)}};
}

inline Json run_compute_mu(const Json& cfg, const DssProfile& p, CsvTable* table = nullptr) {
  double eps0 = cfg["budgets"]["eps0"].get<double>();
  MuSelection sel = compute_mu(p, eps0);
  SmallnessCheck sm = mu_smallness_check(p, sel, cfg["dss"]["smallness_samples"].get<int>(), cfg["seed"].get<std::uint64_t>());
  if (table)
    for (std::size_t i = 0; i < sel.breakpoints.size(); ++i)
      table->row().add((long long)i).add(sel.breakpoints[i]).add(i ? sel.increments[i - 1] : 0.0);
  return {{"module", "dss-data"},
          {"epsilon0", eps0},
          {"epsilon_reading", sel.epsilon_reading},
          {"increment_cap", sel.increment_cap},
          {"breakpoints", sel.breakpoints},
          {"mu", sel.mu},
          {"steps", sel.steps},
          {"smallness", {{"samples", sm.samples}, {"max_ratio", sm.max_ratio}, {"holds", sm.holds}}}};
}

inline Json run_bogovskii(const Json& cfg, const SpectralField& v) {
  const Json& b = cfg["bogovskii"];
  CutoffSpec cut{to_vec3(b["center"]), b["inner"].get<double>(), b["outer"].get<double>()};
  double p = b["p"].get<double>();
  LocalizedField a = bogovskii_correct(v, cut, p);
  Json rep = {{"module", "localization"},
              {"inner", cut.inner},
              {"outer", cut.outer},
              {"p", p},
              {"ratio", a.ratio},
              {"norm_a", a.norm_a},
              {"norm_v", a.norm_v},
              {"div_residual", a.div_residual},
              {"div_budget", 1e-8},
              {"core_error", a.core_error},
              {"core_budget", 1e-10},
              {"leakage", a.leakage},
              {"leakage_budget", 1e-10},
              {"compatibility", a.compatibility},
              {"cutoff_bounds", {{"first", a.bounds.first}, {"second", a.bounds.second}}}};
  if (b["newtonian"].get<bool>()) {
    NewtonianCorrection n = newtonian_correction(v, cut);
    rep["newtonian"] = {{"subtracted_mean", n.subtracted_mean}, {"div_residual", n.div_residual},
                        {"core_deviation", n.core_deviation}};
  }
  return rep;
}

struct PicardOutcome {
  Json report;
  CsvTable table{{"k", "diff_norm", "ratio", "wall_time"}};
};

/// Wall times go only to the table; the report stays reproducible.
inline PicardOutcome run_picard(const Json& cfg, const SpectralField& v0) {
  const Json& c = cfg["picard"];
  PicardOptions opt;
  opt.mesh = c["mesh"].get<int>();
  opt.max_iter = c["max_iter"].get<int>();
  opt.tol = c["tol"].get<double>();
  opt.data_gate = cfg["budgets"]["data_gate"].get<double>();
  double T = c["T"].get<double>();
  KatoResult k = kato_picard(v0, T, opt);
  PicardOutcome o;
  Json hist = Json::array();
  for (const auto& h : k.state.history) {
    o.table.row().add((long long)h.k).add(h.diff).add(h.ratio).add(h.wall_time);
    hist.push_back({{"k", h.k}, {"diff_norm", h.diff}, {"ratio", h.ratio}});
  }
  o.report = {{"module", "semigroup-engine"},
              {"T", T},
              {"mesh", opt.mesh},
              {"data_l3", k.data_l3},
              {"data_gate", opt.data_gate},
              {"converged", k.state.converged},
              {"final_ratio", k.state.final_ratio},
              {"sup_sqrt_t_linf", k.sup_sqrt_t_linf},
              {"l5_norm", k.l5_norm},
              {"history", hist}};
  return o;
}

// ---- pipeline --------------------------------------------------------------------------------

struct PipelineOutcome {
  Json summary;
  DiagnosticsOutcome diagnostics;
  SimulationOutcome simulation;
  std::vector<Json> norms;
};

inline PipelineOutcome run_pipeline(const Json& cfg) {
  PipelineOutcome o;
  DataBundle data = run_stage("data", [&] { return make_data(cfg); });
  const SpectralField& v0 = run_stage("data", [&]() -> const SpectralField& { return require_field(data); });
  o.norms = run_stage("norm", [&] { return run_norms(cfg, data); });
  o.simulation = run_stage("simulate", [&] { return run_simulate(cfg, v0); });
  o.diagnostics = run_stage("diagnose", [&] { return run_diagnose(cfg, o.simulation.ledger); });
  std::vector<std::string> oracles = o.diagnostics.oracles;
  Json s;
  s["schema_version"] = kSchemaVersion;
  s["seed"] = cfg["seed"];
  s["data"] = {{"label", data.label}, {"grid", grid_json(v0.grid)}, {"energy", kinetic_energy(v0)}};
  s["budgets"] = cfg["budgets"];
  s["simulate"] = o.simulation.report;
  s["norms"] = o.norms;
  s["diagnostics"] = o.diagnostics.report;
  if (data.profile) {
    s["dss"] = run_stage("dss", [&] {
      Json j = run_compute_mu(cfg, *data.profile);
      j["verify"] = run_verify_dss(cfg, *data.profile);
      return j;
    });
    oracles.push_back("compute_mu breakpoints");
    oracles.push_back("DSS extension defect");
    Json k = run_stage("picard", [&] { return run_picard(cfg, v0).report; });
    s["kato"] = {{"decay_metric", k["sup_sqrt_t_linf"]}, {"l5_norm", k["l5_norm"]}, {"data_l3", k["data_l3"]},
                 {"converged", k["converged"]}, {"final_ratio", k["final_ratio"]}, {"T", k["T"]}};
    oracles.push_back("Kato mild solution");
  }
  s["oracles"] = oracles;
  o.summary = s;
  return o;
}

}  // namespace nsreg
