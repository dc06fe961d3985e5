#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nsreg/pipeline.hpp"

using namespace nsreg;

namespace {

struct Common {
  std::string config;
  std::string out;
  long long seed = -1;
  int threads = 1;
  std::vector<std::string> budgets;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "experiment config (JSON)");
  sub->add_option("--out", c.out, "output directory");
  sub->add_option("--seed", c.seed, "seed for randomized probe placement");
  sub->add_option("--threads", c.threads, "FFT threads")->check(CLI::PositiveNumber);
  sub->add_option("--budget", c.budgets, "KEY=VALUE budget override (repeatable)");
}

Json load(const Common& c) {
  std::string text;
  if (!c.config.empty()) {
    require(fs::exists(c.config), ErrorKind::ConfigError, "config file " + c.config + " does not exist");
    text = read_file(c.config);
  }
  Json cfg = parse_config(text);
  for (const auto& b : c.budgets) apply_budget_override(cfg, b);
  if (c.seed >= 0) cfg["seed"] = c.seed;
  if (!c.out.empty()) cfg["output"] = c.out;
  set_fft_threads(c.threads);
  return cfg;
}

fs::path out_dir(const Json& cfg) {
  fs::path p = cfg["output"].get<std::string>();
  fs::create_directories(p);
  return p;
}

void write_json(const fs::path& p, const Json& j) { atomic_write(p, j.dump(2) + "\n"); }

void write_diagnostics(const fs::path& dir, const DiagnosticsOutcome& d) {
  write_json(dir / "report.json", d.report);
  for (const auto& [name, text] : d.tables) atomic_write(dir / name, text);
}

void write_norms(const fs::path& dir, const std::vector<Json>& norms) {
  for (std::size_t i = 0; i < norms.size(); ++i)
    write_json(dir / ("norm_" + std::to_string(i) + "_" + norms[i]["norm_id"].get<std::string>() + ".json"), norms[i]);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nsreg: regularity diagnostics laboratory"};
  app.require_subcommand(1);
  Common c;
  std::string ledger_path;
  auto* norm = app.add_subcommand("norm", "norm reports for the configured data");
  auto* simulate = app.add_subcommand("simulate", "evolve the data and write a trajectory ledger");
  auto* diagnose = app.add_subcommand("diagnose", "diagnostics on an existing ledger");
  auto* pipeline = app.add_subcommand("pipeline", "data, simulate, diagnose and summary");
  auto* verify = app.add_subcommand("verify-dss", "self-similarity defect of the DSS extension");
  auto* mu = app.add_subcommand("compute-mu", "breakpoint recursion for the DSS profile");
  auto* bog = app.add_subcommand("bogovskii", "divergence-free localization of the data");
  auto* picard = app.add_subcommand("picard", "Kato mild solution by Picard iteration");
  for (auto* s : {norm, simulate, diagnose, pipeline, verify, mu, bog, picard}) add_common(s, c);
  diagnose->add_option("--ledger", ledger_path, "ledger directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    Json cfg = run_stage("config", [&] { return load(c); });
    fs::path dir = run_stage("output", [&] { return out_dir(cfg); });

    if (norm->parsed()) {
      auto data = run_stage("data", [&] { return make_data(cfg); });
      auto reports = run_stage("norm", [&] { return run_norms(cfg, data); });
      run_stage("output", [&] { write_norms(dir, reports); });
    } else if (simulate->parsed()) {
      auto data = run_stage("data", [&] { return make_data(cfg); });
      auto sim = run_stage("simulate", [&] { return run_simulate(cfg, require_field(data)); });
      run_stage("output", [&] {
        write_ledger(dir / "ledger", sim.ledger);
        write_json(dir / "simulate.json", sim.report);
      });
    } else if (diagnose->parsed()) {
      auto led = run_stage("ledger", [&] { return read_ledger(ledger_path); });
      auto diag = run_stage("diagnose", [&] { return run_diagnose(cfg, led); });
      run_stage("output", [&] { write_diagnostics(dir, diag); });
    } else if (pipeline->parsed()) {
      auto res = run_pipeline(cfg);
      run_stage("output", [&] {
        write_ledger(dir / "ledger", res.simulation.ledger);
        write_json(dir / "simulate.json", res.simulation.report);
        write_norms(dir, res.norms);
        write_diagnostics(dir, res.diagnostics);
        write_json(dir / "summary.json", res.summary);
      });
    } else if (verify->parsed()) {
      auto p = run_stage("data", [&] { return profile_from(cfg); });
      auto rep = run_stage("verify-dss", [&] { return run_verify_dss(cfg, p); });
      run_stage("output", [&] { write_json(dir / "verify_dss.json", rep); });
    } else if (mu->parsed()) {
      auto p = run_stage("data", [&] { return profile_from(cfg); });
      CsvTable table({"i", "breakpoint", "increment"});
      auto rep = run_stage("compute-mu", [&] { return run_compute_mu(cfg, p, &table); });
      run_stage("output", [&] {
        write_json(dir / "mu.json", rep);
        atomic_write(dir / "mu_breakpoints.csv", table.str());
      });
    } else if (bog->parsed()) {
      auto data = run_stage("data", [&] { return make_data(cfg); });
      auto rep = run_stage("bogovskii", [&] { return run_bogovskii(cfg, require_field(data)); });
      run_stage("output", [&] { write_json(dir / "bogovskii.json", rep); });
    } else if (picard->parsed()) {
      auto data = run_stage("data", [&] { return make_data(cfg); });
      auto res = run_stage("picard", [&] { return run_picard(cfg, require_field(data)); });
      run_stage("output", [&] {
        write_json(dir / "picard.json", res.report);
        atomic_write(dir / "picard.csv", res.table.str());
      });
    }
  } catch (const StageFailure& f) {
    std::cerr << "nsreg: " << f.what() << "\n";
    return exit_code_for(f.kind());
  } catch (const std::exception& e) {
    std::cerr << "nsreg: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
