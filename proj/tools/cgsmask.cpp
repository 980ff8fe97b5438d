// Command-line front end: bench, explain, evaluate, render.

#include <iostream>

#include <CLI11.hpp>

#include "cgsmask/cli.hpp"
#include "cgsmask/modeladapter.hpp"
#include "cgsmask/parallel.hpp"

namespace {

using namespace cgsmask;

std::pair<DatasetKind, std::uint64_t> parse_synthetic(const std::string& spec) {
  const auto colon = spec.find(':');
  const DatasetKind kind = parse_dataset_kind(spec.substr(0, colon));
  if (colon == std::string::npos) return {kind, 0};
  try {
    return {kind, std::stoull(spec.substr(colon + 1))};
  } catch (const std::logic_error&) {
    throw ConfigError("bad seed in --synthetic '" + spec + "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Strip-mask saliency for black-box time-series models"};
  app.require_subcommand(1);

  // bench
  auto* bench = app.add_subcommand("bench", "Run the synthetic benchmark described by a JSON config");
  std::string bench_config;
  bench->add_option("config", bench_config, "Benchmark config file")->required();

  // explain
  auto* explain = app.add_subcommand("explain", "Optimise a strip mask for one input");
  cli::ExplainOptions ex;
  std::string series, model_cmd, task, synthetic, perturbation = "constant:0", neighborhood = "moore";
  int strips = 0, len_min = 0, len_max = 0;
  double timeout_s = 30.0;
  explain->add_option("--series", series, "Input series CSV");
  explain->add_option("--model", model_cmd, "External model command (line-JSON protocol)");
  explain->add_option("--task", task, "Expected task: regression or classification");
  explain->add_option("--synthetic", synthetic, "Synthetic instance KIND[:SEED], e.g. rare_feature:0");
  explain->add_option("--generations", ex.optimizer.generations, "Generations N")->capture_default_str();
  explain->add_option("--grid-rows", ex.optimizer.grid_rows, "Grid rows m")->capture_default_str();
  explain->add_option("--grid-cols", ex.optimizer.grid_cols, "Grid columns n")->capture_default_str();
  explain->add_option("--pc", ex.optimizer.p_crossover, "Crossover probability")->capture_default_str();
  explain->add_option("--pm", ex.optimizer.p_mutation, "Mutation probability")->capture_default_str();
  explain->add_option("--pt", ex.optimizer.p_translation, "Translation probability")->capture_default_str();
  explain->add_option("--neighborhood", neighborhood, "moore or von_neumann")->capture_default_str();
  auto* strips_opt = explain->add_option("--strips", strips, "Strips per mask U");
  auto* len_min_opt = explain->add_option("--len-min", len_min, "Minimum strip length");
  auto* len_max_opt = explain->add_option("--len-max", len_max, "Maximum strip length");
  explain->add_option("--max-translation", ex.optimizer.max_translation, "Largest shift (0 = T/10)");
  explain->add_option("--seed", ex.optimizer.seed, "Random seed")->capture_default_str();
  auto* workers_opt = explain->add_option("--workers", ex.optimizer.workers, "Worker threads / model processes");
  explain->add_option("--perturbation", perturbation, "constant:<c>, mean or window:<K>")->capture_default_str();
  explain->add_option("--timeout", timeout_s, "Per-prediction timeout in seconds")->capture_default_str();
  std::string out_mask = "mask.json", out_history = "history.csv", out_series, out_gt;
  explain->add_option("--out-mask", out_mask, "Mask JSON output")->capture_default_str();
  explain->add_option("--out-history", out_history, "Fitness history CSV output")->capture_default_str();
  explain->add_option("--out-series", out_series, "Also write the input series CSV");
  explain->add_option("--out-gt", out_gt, "Also write ground truth JSON (synthetic only)");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Compute metrics for a saved mask");
  cli::EvaluateOptions ev;
  std::string ev_mask, ev_series, ev_gt, ev_model, ev_perturbation = "constant:0", ev_out;
  evaluate->add_option("--mask", ev_mask, "Mask JSON")->required();
  evaluate->add_option("--series", ev_series, "Series CSV")->required();
  evaluate->add_option("--gt", ev_gt, "Ground truth JSON");
  evaluate->add_option("--model", ev_model, "External model command");
  evaluate->add_option("--perturbation", ev_perturbation, "constant:<c>, mean or window:<K>")->capture_default_str();
  evaluate->add_option("--beta", ev.metrics.discreteness_threshold, "Discreteness threshold")->capture_default_str();
  evaluate->add_option("--out", ev_out, "Write metrics JSON here instead of stdout");

  // render
  auto* render = app.add_subcommand("render", "Render a mask as an SVG heat map");
  std::string r_mask, r_series, r_out = "mask.svg";
  render->add_option("--mask", r_mask, "Mask JSON")->required();
  render->add_option("--series", r_series, "Series CSV (for feature labels)")->required();
  render->add_option("--out", r_out, "SVG output")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kConfigError;
  }

  try {
    if (*bench) {
      const cli::BenchConfig cfg = cli::load_bench_config(bench_config);
      const cli::RunReport report = cli::run_bench(cfg);
      std::cout << report.summary_csv();
      return cli::kOk;
    }

    if (*explain) {
      if (!series.empty()) ex.series = series;
      if (!model_cmd.empty()) ex.model_command = model_cmd;
      if (!task.empty()) ex.task = parse_task_kind(task);
      StripSettings settings = default_strip_settings(DatasetKind::RareFeature);
      if (!synthetic.empty()) {
        const auto [kind, seed] = parse_synthetic(synthetic);
        ex.synthetic_kind = kind;
        ex.synthetic_seed = seed;
        settings = default_strip_settings(kind);
      }
      ex.optimizer.strip_count = strips_opt->count() ? strips : settings.strip_count;
      ex.optimizer.strip_len_min = len_min_opt->count() ? len_min : settings.len_min;
      ex.optimizer.strip_len_max = len_max_opt->count() ? len_max : settings.len_max;
      ex.optimizer.neighborhood = parse_neighborhood(neighborhood);
      if (!workers_opt->count()) ex.optimizer.workers = workers_from_env(1);
      ex.perturbation = parse_perturbation(perturbation);
      ex.model_timeout = std::chrono::milliseconds(static_cast<long long>(timeout_s * 1000.0));
      ex.out_mask = out_mask;
      ex.out_history = out_history;
      if (!out_series.empty()) ex.out_series = out_series;
      if (!out_gt.empty()) ex.out_ground_truth = out_gt;
      const cli::ExplainResult result = cli::run_explain(ex);
      std::cout << result.summary_line << "\n";
      return cli::kOk;
    }

    if (*evaluate) {
      ev.mask = ev_mask;
      ev.series = ev_series;
      if (!ev_gt.empty()) ev.ground_truth = ev_gt;
      if (!ev_model.empty()) ev.model_command = ev_model;
      ev.perturbation = parse_perturbation(ev_perturbation);
      const std::string json = cli::run_evaluate(ev).dump() + "\n";
      if (ev_out.empty()) {
        std::cout << json;
      } else {
        write_file_atomic(ev_out, json);
      }
      return cli::kOk;
    }

    if (*render) {
      cli::render_heatmap(r_mask, r_series, r_out);
      return cli::kOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::exit_code_for(e);
  }
  return cli::kFailure;
}
