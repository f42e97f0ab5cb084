#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ppsel/selection.hpp"

namespace ppsel {

enum class ProcessKind { poisson, thomas };

// Number of quadrature dummy points: either absolute or a multiple of mu.
struct DummyRule {
  double value = 4.0;
  bool per_mu = true;

  std::size_t resolve(double mu) const;
  std::string to_string() const;
  static DummyRule parse(std::string_view text);  // "4mu" or "3200"
};

struct ScenarioConfig {
  std::string name = "scenario";
  ProcessKind process = ProcessKind::poisson;
  Window window{0.0, 1000.0, 0.0, 500.0};
  double mu_target = 0.0;
  std::vector<double> beta_true;
  std::optional<ThomasParams> thomas;
  std::size_t replicates = 100;
  DummyRule m;
  // Second fit at a different dummy count, used only for bic_nm.
  std::optional<DummyRule> m_alt;
  double r_max = 20.0;
  std::uint64_t master_seed = 1;
  std::uint64_t covariate_seed = 1;
  std::size_t grid_nx = 201;
  std::size_t grid_ny = 101;
  std::vector<Criterion> criteria{Criterion::aic, Criterion::bic_n,
                                  Criterion::bic_w, Criterion::bic_nm};
  std::optional<PcfKind> pcf_fitting;  // defaults to the process kind
  bool estimate_once = false;
  bool save_patterns = false;
  std::size_t metric_nx = 801;
  std::size_t metric_ny = 401;

  PcfKind effective_pcf() const;
  // Throws ConfigError.
  void validate() const;
  // Sets one `key = value` entry. Throws ConfigError for unknown keys or
  // malformed values.
  void set(std::string_view key, std::string_view value);
};

// Flat `key = value` lines; `#` starts a comment, `[section]` lines are
// ignored. Throws ConfigError.
ScenarioConfig parse_config(std::istream& in);
ScenarioConfig load_config(const std::filesystem::path& path);

struct CriterionSummary {
  Criterion criterion;
  double tpr = 0.0;  // percent
  double fpr = 0.0;  // percent
  double mise = 0.0;
  double mkl = 0.0;
  double mean_p_star = 0.0;  // of the selected models
  double sd_p_star = 0.0;
};

struct StudySummary {
  std::string name;
  bool clustered = false;
  std::vector<CriterionSummary> criteria;
  double full_model_p_star_mean = 0.0;
  double full_model_p_star_sd = 0.0;
  std::size_t replicates_ok = 0;
  std::size_t replicates_failed = 0;
  double runtime_seconds = 0.0;

  const CriterionSummary& at(Criterion c) const;
};

// One row per (replicate, criterion): the selected model and its metrics.
struct MetricRow {
  std::size_t replicate = 0;
  Criterion criterion = Criterion::aic;
  std::uint32_t model_id = 0;
  std::size_t n_points = 0;
  double tpr = 0.0;
  double fpr = 0.0;
  double kl = 0.0;
  double ise = 0.0;
  double p_star = 0.0;
  double full_p_star = 0.0;  // p* of the full model in this replicate
};

// Means over replicates; sample (n - 1) standard deviations.
StudySummary aggregate(std::string name, bool clustered,
                       const std::vector<MetricRow>& rows,
                       const std::vector<Criterion>& criteria);

void write_metrics_csv(std::ostream& out, const std::vector<MetricRow>& rows);
std::vector<MetricRow> read_metrics_csv(std::istream& in);
void write_summary_csv(std::ostream& out, const StudySummary& s);
// Human-readable table: criteria across, TPR/FPR/MISE/MKL (and p*) down.
void print_summary_table(std::ostream& out, const StudySummary& s);

struct RunOptions {
  std::filesystem::path output_dir;  // empty: no files
  std::size_t threads = 0;           // 0: hardware concurrency
  std::ostream* log = nullptr;
};

// Simulates, selects and evaluates every replicate. Writes
// selection_long.csv, metrics.csv, summary.csv, failures.csv (and
// patterns/rep_NNNN.csv when save_patterns) under output_dir. Throws Error
// when fewer than 90% of replicates succeed.
StudySummary run_scenario(const ScenarioConfig& cfg, const RunOptions& options = {});

}  // namespace ppsel
