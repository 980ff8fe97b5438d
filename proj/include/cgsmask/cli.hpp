#ifndef CGSMASK_CLI_HPP
#define CGSMASK_CLI_HPP

#include <chrono>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cgsmask/baselines.hpp"
#include "cgsmask/metrics.hpp"
#include "cgsmask/optimizer.hpp"
#include "cgsmask/perturbation.hpp"
#include "cgsmask/synthdata.hpp"

namespace cgsmask::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kModelError = 3,
  kIoError = 4,
};

/// Maps an exception to the documented process exit code.
int exit_code_for(const std::exception& e);

// ---- bench --------------------------------------------------------------

enum class TopFractionMode { None, Preserve, Binary };

struct BenchConfig {
  std::vector<DatasetKind> datasets;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> methods;  // subset of cgs, fo, fp, rise
  std::filesystem::path output_dir = "bench_out";
  Index features = 50;
  Index steps = 50;
  OptimizerConfig optimizer;
  // strip budget overrides; unset fields fall back to the per-dataset defaults
  std::optional<int> strip_count;
  std::optional<int> strip_len_min;
  std::optional<int> strip_len_max;
  BaselineConfig baselines;
  PerturbationSpec perturbation = PerturbationSpec::make_constant(0.0);
  MetricsConfig metrics;
  double top_fraction = 0.10;
  TopFractionMode top_fraction_mode = TopFractionMode::Preserve;
  int workers = 1;
  bool record_seconds = true;
  bool write_masks = true;

  OptimizerConfig optimizer_for(DatasetKind kind, std::uint64_t seed) const;
};

/// Parses the JSON config; unknown keys and bad values raise ConfigError.
BenchConfig parse_bench_config(const nlohmann::json& j);
BenchConfig load_bench_config(const std::filesystem::path& path);

struct RunRow {
  std::string method;
  std::string dataset;
  std::uint64_t seed = 0;
  double aup = 0.0;
  double aur = 0.0;
  double dm = 0.0;
  double em = 0.0;
  double delta_p = 0.0;
  double seconds = 0.0;
  std::string error;  // empty on success
};

struct Stat {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single value
};

struct SummaryRow {
  std::string method;
  std::string dataset;
  std::size_t runs = 0;
  std::size_t failures = 0;
  Stat aup, aur, dm, em, delta_p, seconds;
};

struct RunReport {
  std::vector<RunRow> rows;
  std::vector<SummaryRow> summary;

  std::string report_csv() const;
  std::string summary_csv() const;
};

Stat mean_std(const std::vector<double>& values);
/// Groups rows by (method, dataset) in first-appearance order; failed rows are counted but not averaged.
std::vector<SummaryRow> summarize(const std::vector<RunRow>& rows);

/// Scores one saliency map against ground truth (AUP, AUR, D_M, E_M).
RunRow score_map(const Matrix& map, const GroundTruth& gt, const MetricsConfig& metrics);

/// Runs every (dataset, seed, method) combination and writes report.csv,
/// summary.csv and per-run mask JSONs into cfg.output_dir.
RunReport run_bench(const BenchConfig& cfg);

// ---- explain ------------------------------------------------------------

struct ExplainOptions {
  std::optional<std::filesystem::path> series;
  std::optional<std::string> model_command;
  std::optional<TaskKind> task;
  std::optional<DatasetKind> synthetic_kind;
  std::uint64_t synthetic_seed = 0;
  OptimizerConfig optimizer;
  PerturbationSpec perturbation = PerturbationSpec::make_constant(0.0);
  std::filesystem::path out_mask = "mask.json";
  std::filesystem::path out_history = "history.csv";
  std::optional<std::filesystem::path> out_series;
  std::optional<std::filesystem::path> out_ground_truth;
  std::chrono::milliseconds model_timeout{30'000};
};

struct ExplainResult {
  RunResult run;
  double seconds = 0.0;
  std::string summary_line;
};

ExplainResult run_explain(const ExplainOptions& opts);
std::string history_csv(const std::vector<double>& history);

// ---- evaluate -----------------------------------------------------------

struct EvaluateOptions {
  std::filesystem::path mask;
  std::filesystem::path series;
  std::optional<std::filesystem::path> ground_truth;
  std::optional<std::string> model_command;
  PerturbationSpec perturbation = PerturbationSpec::make_constant(0.0);
  MetricsConfig metrics;
};

/// Metrics JSON: always "dm" and "em"; "aup"/"aur" with ground truth;
/// "delta_p" with a model.
nlohmann::json run_evaluate(const EvaluateOptions& opts);

// ---- render -------------------------------------------------------------

/// SVG heat map: one cell per (feature, step), 0 red through 1 green.
std::string render_heatmap_svg(const Matrix& mask, const std::vector<std::string>& labels);
void render_heatmap(const std::filesystem::path& mask_path, const std::filesystem::path& series_path,
                    const std::filesystem::path& out_path);

}  // namespace cgsmask::cli

#endif  // CGSMASK_CLI_HPP
