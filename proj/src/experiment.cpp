#include "ppsel/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "ppsel/error.hpp"
#include "ppsel/rng.hpp"
#include "text_io.hpp"

namespace ppsel {

namespace {

std::vector<std::string_view> split_words(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == ',')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != ',') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

double config_real(std::string_view key, std::string_view value) {
  try {
    return detail::parse_real(value, 0);
  } catch (const ParseError&) {
    throw ConfigError("`" + std::string(key) + "` expects a number, got `" +
                      std::string(value) + "`");
  }
}

std::vector<double> config_reals(std::string_view key, std::string_view value) {
  std::vector<double> out;
  for (auto w : split_words(value)) out.push_back(config_real(key, w));
  return out;
}

std::uint64_t config_count(std::string_view key, std::string_view value) {
  const double v = config_real(key, value);
  if (v < 0.0 || v != std::floor(v) || v > 9.0e15) {
    throw ConfigError("`" + std::string(key) + "` expects a non-negative integer");
  }
  return static_cast<std::uint64_t>(v);
}

bool config_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("`" + std::string(key) + "` expects true or false");
}

PcfKind parse_kind(std::string_view key, std::string_view value) {
  if (value == "poisson") return PcfKind::poisson;
  if (value == "thomas") return PcfKind::thomas;
  throw ConfigError("`" + std::string(key) + "` must be poisson or thomas");
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  long double s = 0.0L;
  for (double x : v) s += x;
  return static_cast<double>(s / static_cast<long double>(v.size()));
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double m = mean_of(v);
  long double s = 0.0L;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(static_cast<double>(s / static_cast<long double>(v.size() - 1)));
}

}  // namespace

std::size_t DummyRule::resolve(double mu) const {
  const double m = per_mu ? value * mu : value;
  return std::max<std::size_t>(4, static_cast<std::size_t>(std::llround(m)));
}

std::string DummyRule::to_string() const {
  return detail::format_double(value) + (per_mu ? "mu" : "");
}

DummyRule DummyRule::parse(std::string_view text) {
  text = detail::trim(text);
  DummyRule r;
  r.per_mu = text.size() > 2 && text.substr(text.size() - 2) == "mu";
  if (r.per_mu) text.remove_suffix(2);
  r.value = config_real("m", text);
  if (!(r.value > 0.0)) throw ConfigError("`m` must be positive");
  return r;
}

PcfKind ScenarioConfig::effective_pcf() const {
  if (pcf_fitting) return *pcf_fitting;
  return process == ProcessKind::thomas ? PcfKind::thomas : PcfKind::poisson;
}

void ScenarioConfig::set(std::string_view key, std::string_view value) {
  key = detail::trim(key);
  value = detail::trim(value);
  if (key == "name") {
    name = std::string(value);
  } else if (key == "process") {
    process = parse_kind(key, value) == PcfKind::thomas ? ProcessKind::thomas
                                                        : ProcessKind::poisson;
  } else if (key == "window") {
    const auto v = config_reals(key, value);
    if (v.size() != 4) throw ConfigError("`window` needs x_min x_max y_min y_max");
    try {
      window = Window(v[0], v[1], v[2], v[3]);
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  } else if (key == "mu") {
    mu_target = config_real(key, value);
  } else if (key == "beta") {
    beta_true = config_reals(key, value);
  } else if (key == "kappa" || key == "gamma") {
    const double v = config_real(key, value);
    const double kappa = key == "kappa" ? v : (thomas ? thomas->kappa : 1.0);
    const double gamma = key == "gamma" ? v : (thomas ? thomas->gamma : 1.0);
    try {
      thomas = ThomasParams(kappa, gamma);
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  } else if (key == "replicates") {
    replicates = config_count(key, value);
  } else if (key == "m") {
    m = DummyRule::parse(value);
  } else if (key == "m_alt") {
    if (value == "none" || value.empty()) m_alt.reset();
    else m_alt = DummyRule::parse(value);
  } else if (key == "r_max") {
    r_max = config_real(key, value);
  } else if (key == "master_seed") {
    master_seed = config_count(key, value);
  } else if (key == "covariate_seed") {
    covariate_seed = config_count(key, value);
  } else if (key == "grid") {
    const auto v = config_reals(key, value);
    if (v.size() != 2) throw ConfigError("`grid` needs nx ny");
    grid_nx = config_count(key, detail::format_double(v[0]));
    grid_ny = config_count(key, detail::format_double(v[1]));
  } else if (key == "metric_grid") {
    const auto v = config_reals(key, value);
    if (v.size() != 2) throw ConfigError("`metric_grid` needs nx ny");
    metric_nx = config_count(key, detail::format_double(v[0]));
    metric_ny = config_count(key, detail::format_double(v[1]));
  } else if (key == "criteria") {
    criteria.clear();
    for (auto w : split_words(value)) {
      try {
        criteria.push_back(parse_criterion(w));
      } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
      }
    }
  } else if (key == "pcf_fitting") {
    pcf_fitting = parse_kind(key, value);
  } else if (key == "estimate_once") {
    estimate_once = config_bool(key, value);
  } else if (key == "save_patterns") {
    save_patterns = config_bool(key, value);
  } else {
    throw ConfigError("unknown key `" + std::string(key) + "`");
  }
}

void ScenarioConfig::validate() const {
  if (replicates < 1) throw ConfigError("replicates must be at least 1");
  if (!(mu_target > 0.0)) throw ConfigError("mu must be positive");
  if (beta_true.empty()) throw ConfigError("beta must list one coefficient per covariate");
  if (beta_true.size() > 20) throw ConfigError("at most 20 covariates are supported");
  if (process == ProcessKind::thomas && !thomas) {
    throw ConfigError("a thomas process needs kappa and gamma");
  }
  if (effective_pcf() == PcfKind::thomas &&
      !(r_max > 0.0 && r_max <= 0.5 * std::min(window.width(), window.height()))) {
    throw ConfigError("r_max must lie in (0, half the shorter window side]");
  }
  if (grid_nx < 2 || grid_ny < 2 || metric_nx < 2 || metric_ny < 2) {
    throw ConfigError("grids must be at least 2x2");
  }
  if (criteria.empty()) throw ConfigError("criteria list is empty");
}

ScenarioConfig parse_config(std::istream& in) {
  ScenarioConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view text = line;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) {
      text = text.substr(0, hash);
    }
    text = detail::trim(text);
    if (text.empty() || text.front() == '[') continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    try {
      cfg.set(text.substr(0, eq), text.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  auto cfg = parse_config(in);
  return cfg;
}

const CriterionSummary& StudySummary::at(Criterion c) const {
  for (const auto& cs : criteria) {
    if (cs.criterion == c) return cs;
  }
  throw InvalidArgument("criterion `" + std::string(criterion_name(c)) +
                        "` is not in this summary");
}

StudySummary aggregate(std::string name, bool clustered,
                       const std::vector<MetricRow>& rows,
                       const std::vector<Criterion>& criteria) {
  StudySummary s;
  s.name = std::move(name);
  s.clustered = clustered;
  std::vector<std::size_t> replicates;
  std::vector<double> full_p;
  for (auto c : criteria) {
    std::vector<double> tpr, fpr, kl, ise, ps;
    for (const auto& r : rows) {
      if (r.criterion != c) continue;
      tpr.push_back(r.tpr);
      fpr.push_back(r.fpr);
      kl.push_back(r.kl);
      ise.push_back(r.ise);
      ps.push_back(r.p_star);
      if (c == criteria.front()) {
        replicates.push_back(r.replicate);
        full_p.push_back(r.full_p_star);
      }
    }
    CriterionSummary cs{c};
    cs.tpr = 100.0 * mean_of(tpr);
    cs.fpr = 100.0 * mean_of(fpr);
    cs.mise = mean_of(ise);
    cs.mkl = mean_of(kl);
    cs.mean_p_star = mean_of(ps);
    cs.sd_p_star = sd_of(ps);
    s.criteria.push_back(cs);
  }
  s.replicates_ok = replicates.size();
  s.full_model_p_star_mean = mean_of(full_p);
  s.full_model_p_star_sd = sd_of(full_p);
  return s;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricRow>& rows) {
  using detail::format_double;
  out << "replicate,criterion,model_id,n_points,tpr,fpr,kl,ise,p_star,full_p_star\n";
  for (const auto& r : rows) {
    out << r.replicate << ',' << criterion_name(r.criterion) << ',' << r.model_id << ','
        << r.n_points << ',' << format_double(r.tpr) << ',' << format_double(r.fpr) << ','
        << format_double(r.kl) << ',' << format_double(r.ise) << ','
        << format_double(r.p_star) << ',' << format_double(r.full_p_star) << '\n';
  }
}

std::vector<MetricRow> read_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty metrics file");
  std::vector<MetricRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    std::vector<std::string_view> cells;
    std::string_view rest = line;
    while (true) {
      const auto comma = rest.find(',');
      cells.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    if (cells.size() != 10) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 10 columns");
    }
    MetricRow r;
    r.replicate = static_cast<std::size_t>(detail::parse_real(cells[0], line_no));
    r.criterion = parse_criterion(cells[1]);
    r.model_id = static_cast<std::uint32_t>(detail::parse_real(cells[2], line_no));
    r.n_points = static_cast<std::size_t>(detail::parse_real(cells[3], line_no));
    r.tpr = detail::parse_real(cells[4], line_no);
    r.fpr = detail::parse_real(cells[5], line_no);
    r.kl = detail::parse_real(cells[6], line_no);
    r.ise = detail::parse_real(cells[7], line_no);
    r.p_star = detail::parse_real(cells[8], line_no);
    r.full_p_star = detail::parse_real(cells[9], line_no);
    rows.push_back(r);
  }
  return rows;
}

void write_summary_csv(std::ostream& out, const StudySummary& s) {
  using detail::format_double;
  out << "scenario,criterion,tpr_percent,fpr_percent,mise,mkl,mean_p_star,sd_p_star,"
         "replicates\n";
  for (const auto& c : s.criteria) {
    out << s.name << ',' << criterion_name(c.criterion) << ',' << format_double(c.tpr)
        << ',' << format_double(c.fpr) << ',' << format_double(c.mise) << ','
        << format_double(c.mkl) << ',' << format_double(c.mean_p_star) << ','
        << format_double(c.sd_p_star) << ',' << s.replicates_ok << '\n';
  }
}

void print_summary_table(std::ostream& out, const StudySummary& s) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << s.name << "  (" << s.replicates_ok << " replicates";
  if (s.replicates_failed) out << ", " << s.replicates_failed << " failed";
  out << ", " << std::fixed << std::setprecision(1) << s.runtime_seconds << " s)\n";
  out << std::setw(14) << "";
  for (const auto& c : s.criteria) out << std::setw(12) << criterion_name(c.criterion);
  out << '\n';
  auto row = [&](const char* label, auto get, int digits) {
    out << std::setw(14) << std::left << label << std::right;
    for (const auto& c : s.criteria) {
      out << std::setw(12) << std::fixed << std::setprecision(digits) << get(c);
    }
    out << '\n';
  };
  row("TPR (%)", [](const auto& c) { return c.tpr; }, 1);
  row("FPR (%)", [](const auto& c) { return c.fpr; }, 1);
  row("MISE", [](const auto& c) { return c.mise; }, 4);
  row("MKL", [](const auto& c) { return c.mkl; }, 4);
  if (s.clustered) {
    row("Mean(p*)", [](const auto& c) { return c.mean_p_star; }, 1);
    row("SD(p*)", [](const auto& c) { return c.sd_p_star; }, 1);
    out << "full model p*: mean " << std::setprecision(1) << s.full_model_p_star_mean
        << ", sd " << s.full_model_p_star_sd << '\n';
  }
  out.flags(flags);
  out.precision(precision);
}

namespace {

struct ReplicateOutput {
  bool ok = false;
  std::string failure;
  std::vector<MetricRow> rows;
  std::string long_csv;
  std::string pattern_csv;
  std::vector<std::string> model_failures;
};

struct Scenario {
  const ScenarioConfig& cfg;
  CovariateSet cov;
  IntensitySpec truth;
  MetricGrid metrics;
};

ReplicateOutput run_replicate(const Scenario& sc, std::size_t r) {
  const auto& cfg = sc.cfg;
  ReplicateOutput out;
  try {
    const auto seed = derive_seed(cfg.master_seed, r);
    const auto pattern = cfg.process == ProcessKind::thomas
                             ? sim_thomas(sc.truth, *cfg.thomas, cfg.window, seed)
                             : sim_poisson(sc.truth, cfg.window, seed);
    if (cfg.save_patterns) {
      std::ostringstream os;
      write_pattern_csv(os, pattern);
      out.pattern_csv = os.str();
    }
    if (pattern.empty()) throw EmptyPattern("simulated pattern has no points");

    SelectOptions opts;
    opts.pcf_fitting = cfg.effective_pcf();
    opts.m = cfg.m.resolve(cfg.mu_target);
    opts.r_max = cfg.r_max;
    opts.estimate_once = cfg.estimate_once;
    auto result = select(pattern, sc.cov, opts);
    result.informative_set = sc.truth.informative_set();

    std::optional<SelectionResult> alt;
    if (cfg.m_alt) {
      SelectOptions alt_opts;
      alt_opts.m = cfg.m_alt->resolve(cfg.mu_target);
      alt = select(pattern, sc.cov, alt_opts);
    }
    auto source = [&](Criterion c) -> const SelectionResult& {
      return c == Criterion::bic_nm && alt ? *alt : result;
    };

    for (const auto& mo : result.models) {
      if (!mo.ok) {
        out.model_failures.push_back(std::to_string(mo.model.mask()) + ",\"" +
                                     mo.failure + "\"");
      }
    }

    const auto& full = result.models.back();
    if (full.ok && result.nesting_gap > 1e-6 * std::max(1.0, std::abs(full.report.loglik))) {
      out.model_failures.push_back(std::to_string(full.model.mask()) +
                                   ",\"nested loglik gap " +
                                   detail::format_double(result.nesting_gap) + "\"");
    }

    std::ostringstream long_csv;
    const double full_p = full.ok ? full.report.p_star
                                  : std::numeric_limits<double>::quiet_NaN();
    for (auto c : cfg.criteria) {
      const auto& res = source(c);
      write_selection_long(long_csv, res, r, {c});
      const auto& chosen = res.chosen_outcome(c);
      const auto m = sc.metrics.evaluate(chosen.model, *chosen.fit);
      MetricRow row;
      row.replicate = r;
      row.criterion = c;
      row.model_id = chosen.model.mask();
      row.n_points = pattern.size();
      row.tpr = m.tpr;
      row.fpr = m.fpr;
      row.kl = m.kl;
      row.ise = m.ise;
      row.p_star = chosen.report.p_star;
      row.full_p_star = full_p;
      out.rows.push_back(row);
    }
    out.long_csv = long_csv.str();
    out.ok = true;
  } catch (const Error& e) {
    out.failure = e.what();
  }
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
}

}  // namespace

StudySummary run_scenario(const ScenarioConfig& cfg, const RunOptions& options) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();

  auto cov = synth_covariates(cfg.covariate_seed, cfg.beta_true.size(), cfg.window,
                              cfg.grid_nx, cfg.grid_ny);
  const IntensitySpec unit(1.0, cfg.beta_true, cov);
  auto truth = unit.with_omega(calibrate_omega(unit, cfg.mu_target));
  MetricGrid metrics(truth, cfg.metric_nx, cfg.metric_ny);
  const Scenario sc{cfg, std::move(cov), std::move(truth), std::move(metrics)};

  std::vector<ReplicateOutput> outputs(cfg.replicates);
  std::size_t threads = options.threads ? options.threads
                                        : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, cfg.replicates);
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t r = next++; r < cfg.replicates; r = next++) {
      outputs[r] = run_replicate(sc, r);
      if (options.log && !outputs[r].ok) {
        std::lock_guard lock(log_mutex);
        *options.log << "replicate " << r << " failed: " << outputs[r].failure << '\n';
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  std::vector<MetricRow> rows;
  std::size_t failed = 0;
  for (const auto& o : outputs) {
    if (!o.ok) {
      ++failed;
      continue;
    }
    rows.insert(rows.end(), o.rows.begin(), o.rows.end());
  }

  auto summary = aggregate(cfg.name, cfg.effective_pcf() == PcfKind::thomas, rows,
                           cfg.criteria);
  summary.replicates_failed = failed;
  summary.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (!options.output_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(options.output_dir);
    std::ostringstream long_csv, metrics_csv, summary_csv, failures;
    write_selection_long_header(long_csv);
    failures << "replicate,model_id,reason\n";
    for (std::size_t r = 0; r < outputs.size(); ++r) {
      long_csv << outputs[r].long_csv;
      if (!outputs[r].ok) failures << r << ",,\"" << outputs[r].failure << "\"\n";
      for (const auto& mf : outputs[r].model_failures) failures << r << ',' << mf << '\n';
    }
    write_metrics_csv(metrics_csv, rows);
    write_summary_csv(summary_csv, summary);
    write_file(options.output_dir / "selection_long.csv", long_csv.str());
    write_file(options.output_dir / "metrics.csv", metrics_csv.str());
    write_file(options.output_dir / "summary.csv", summary_csv.str());
    write_file(options.output_dir / "failures.csv", failures.str());
    if (cfg.save_patterns) {
      fs::create_directories(options.output_dir / "patterns");
      for (std::size_t r = 0; r < outputs.size(); ++r) {
        if (outputs[r].pattern_csv.empty()) continue;
        std::ostringstream name;
        name << "rep_" << std::setw(4) << std::setfill('0') << r << ".csv";
        write_file(options.output_dir / "patterns" / name.str(), outputs[r].pattern_csv);
      }
    }
  }

  if (static_cast<double>(summary.replicates_ok) < 0.9 * static_cast<double>(cfg.replicates)) {
    throw Error("only " + std::to_string(summary.replicates_ok) + " of " +
                std::to_string(cfg.replicates) + " replicates succeeded");
  }
  return summary;
}

}  // namespace ppsel
