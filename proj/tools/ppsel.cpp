// ppsel: simulate point patterns, fit and select intensity models, run
// replicated studies, and run the oracle checks.

#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oracles.hpp"
#include "ppsel/error.hpp"
#include "ppsel/experiment.hpp"

namespace {

using namespace ppsel;

struct CovariateOptions {
  std::vector<std::string> grids;
  std::size_t p = 6;
  std::uint64_t seed = 1;
  std::vector<std::size_t> grid_dims{201, 101};

  void add(CLI::App* app) {
    app->add_option("--covariates", grids,
                    "CSV grid files, one per covariate (default: synthetic fields)");
    app->add_option("--p", p, "number of synthetic covariates");
    app->add_option("--covariate-seed", seed, "seed of the synthetic covariates");
    app->add_option("--grid", grid_dims, "synthetic covariate lattice nx ny")->expected(2);
  }

  CovariateSet build(const Window& w) const {
    if (grids.empty()) return synth_covariates(seed, p, w, grid_dims[0], grid_dims[1]);
    std::vector<CovariateField> fields;
    for (const auto& g : grids) {
      fields.push_back(load_grid(g, w, std::filesystem::path(g).stem().string()));
    }
    return standardize(CovariateSet(std::move(fields)));
  }
};

Window to_window(const std::vector<double>& v) { return Window(v[0], v[1], v[2], v[3]); }

// Writes to `path`, or stdout when empty or "-".
template <class F>
void with_output(const std::string& path, F&& write) {
  if (path.empty() || path == "-") {
    write(std::cout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  write(out);
}

PointPattern read_pattern(const std::string& path, const Window& w) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_pattern_csv(in, w);
}

ModelSpec parse_model(const std::string& text) {
  // "1,3,4" (one-based covariates), "{1,3}", or "" for intercept only.
  std::vector<std::size_t> subset;
  std::string token;
  for (char c : text + ",") {
    if (c == ',' ) {
      if (!token.empty()) {
        const int j = std::stoi(token);
        if (j < 1) throw InvalidArgument("covariate indices are one-based");
        subset.push_back(static_cast<std::size_t>(j - 1));
      }
      token.clear();
    } else if (c != '{' && c != '}' && c != ' ') {
      token += c;
    }
  }
  return ModelSpec(std::move(subset));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Intensity model selection for spatial point patterns"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "simulate one point pattern as CSV");
  std::string sim_process = "poisson";
  double sim_mu = 200.0, sim_kappa = 4e-4, sim_gamma = 5.0;
  std::uint64_t sim_seed = 1;
  std::vector<double> sim_window{0.0, 500.0, 0.0, 250.0};
  std::vector<double> sim_beta{0.5, -0.25, 0.0, 0.0, 0.0, 0.0};
  std::string sim_out;
  CovariateOptions sim_cov;
  sim->add_option("--process", sim_process)->check(CLI::IsMember({"poisson", "thomas"}));
  sim->add_option("--mu", sim_mu, "expected number of points");
  sim->add_option("--kappa", sim_kappa, "parent intensity");
  sim->add_option("--gamma", sim_gamma, "offspring dispersal sd");
  sim->add_option("--seed", sim_seed);
  sim->add_option("--window", sim_window, "x_min x_max y_min y_max")->expected(4);
  sim->add_option("--beta", sim_beta, "covariate coefficients");
  sim->add_option("-o,--out", sim_out, "output CSV (default stdout)");
  sim_cov.add(sim);

  // fit
  auto* fitc = app.add_subcommand("fit", "fit one model to a pattern");
  std::string fit_pattern, fit_model, fit_out;
  std::vector<double> fit_window{0.0, 500.0, 0.0, 250.0};
  std::size_t fit_m = 0;
  CovariateOptions fit_cov;
  fitc->add_option("--pattern", fit_pattern, "pattern CSV")->required();
  fitc->add_option("--window", fit_window)->expected(4);
  fitc->add_option("--model", fit_model, "one-based covariate list, e.g. 1,2");
  fitc->add_option("--m", fit_m, "dummy points (default 4N)");
  fitc->add_option("-o,--out", fit_out);
  fit_cov.add(fitc);

  // select
  auto* selc = app.add_subcommand("select", "fit all candidate models and select");
  std::string sel_pattern, sel_pcf = "poisson", sel_out;
  std::vector<double> sel_window{0.0, 500.0, 0.0, 250.0};
  std::size_t sel_m = 0;
  double sel_rmax = 20.0;
  bool sel_once = false;
  std::vector<std::string> sel_criteria;
  CovariateOptions sel_cov;
  selc->add_option("--pattern", sel_pattern)->required();
  selc->add_option("--window", sel_window)->expected(4);
  selc->add_option("--pcf", sel_pcf)->check(CLI::IsMember({"poisson", "thomas"}));
  selc->add_option("--m", sel_m, "dummy points (default 4N)");
  selc->add_option("--r-max", sel_rmax);
  selc->add_flag("--estimate-once", sel_once, "estimate (kappa, gamma) on the full model only");
  selc->add_option("--criteria", sel_criteria);
  selc->add_option("-o,--out", sel_out, "long-format CSV (default stdout)");
  sel_cov.add(selc);

  // run
  auto* runc = app.add_subcommand("run", "run a replicated study from a config file");
  std::string run_config, run_out;
  std::optional<std::size_t> run_reps;
  std::size_t run_threads = 0;
  std::vector<std::string> run_set;
  runc->add_option("--config", run_config)->required()->check(CLI::ExistingFile);
  runc->add_option("--replicates", run_reps);
  runc->add_option("--out", run_out, "output directory");
  runc->add_option("--threads", run_threads, "worker threads (0: all cores)");
  runc->add_option("--set", run_set, "config override key=value");

  // check
  auto* chk = app.add_subcommand("check", "run oracle suites");
  std::string chk_suite = "all";
  std::uint64_t chk_seed = 1;
  chk->add_option("--suite", chk_suite)
      ->check(CLI::IsMember({"gradient", "campbell", "evidence", "t2", "all"}));
  chk->add_option("--seed", chk_seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      const auto w = to_window(sim_window);
      auto cov = sim_cov.build(w);
      if (sim_beta.size() != cov.size()) {
        throw ConfigError("--beta needs " + std::to_string(cov.size()) + " values");
      }
      const IntensitySpec unit(1.0, sim_beta, std::move(cov));
      const auto spec = unit.with_omega(calibrate_omega(unit, sim_mu));
      const auto pattern = sim_process == "thomas"
                               ? sim_thomas(spec, ThomasParams(sim_kappa, sim_gamma), w, sim_seed)
                               : sim_poisson(spec, w, sim_seed);
      with_output(sim_out, [&](std::ostream& out) { write_pattern_csv(out, pattern); });
    } else if (*fitc) {
      const auto w = to_window(fit_window);
      const auto pattern = read_pattern(fit_pattern, w);
      const auto cov = fit_cov.build(w);
      const auto model = parse_model(fit_model);
      const auto r = fit(pattern, model, cov, fit_m ? fit_m : 4 * pattern.size());
      with_output(fit_out, [&](std::ostream& out) {
        write_fit_header(out, cov.size());
        write_fit_record(out, r, cov.size());
      });
      if (!r.converged) std::cerr << "warning: fit did not converge\n";
    } else if (*selc) {
      const auto w = to_window(sel_window);
      const auto pattern = read_pattern(sel_pattern, w);
      const auto cov = sel_cov.build(w);
      SelectOptions opts;
      opts.pcf_fitting = sel_pcf == "thomas" ? PcfKind::thomas : PcfKind::poisson;
      opts.m = sel_m;
      opts.r_max = sel_rmax;
      opts.estimate_once = sel_once;
      std::vector<Criterion> crit;
      for (const auto& c : sel_criteria) crit.push_back(parse_criterion(c));
      if (crit.empty()) {
        crit.assign(kAllCriteria.begin(), kAllCriteria.end());
        if (opts.pcf_fitting == PcfKind::poisson) crit.resize(4);
      }
      const auto result = select(pattern, cov, opts);
      with_output(sel_out, [&](std::ostream& out) {
        write_selection_long_header(out);
        write_selection_long(out, result, 0, crit);
      });
      for (auto c : crit) {
        std::cerr << criterion_name(c) << ": " << result.chosen_outcome(c).model.label() << '\n';
      }
    } else if (*runc) {
      auto cfg = load_config(run_config);
      for (const auto& kv : run_set) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
      }
      if (run_reps) cfg.replicates = *run_reps;
      RunOptions opts;
      opts.output_dir = run_out;
      opts.threads = run_threads;
      opts.log = &std::cerr;
      const auto summary = run_scenario(cfg, opts);
      print_summary_table(std::cout, summary);
    } else if (*chk) {
      const auto checks = oracle::run_suite(chk_suite, chk_seed);
      oracle::print_checks(std::cout, checks);
      for (const auto& c : checks) {
        if (!c.pass) return 1;
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
