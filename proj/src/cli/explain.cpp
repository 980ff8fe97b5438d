#include <chrono>
#include <sstream>

#include "cgsmask/cli.hpp"
#include "cgsmask/modeladapter.hpp"

namespace cgsmask::cli {

std::string history_csv(const std::vector<double>& history) {
  std::string out = "generation,best_delta\n";
  for (std::size_t g = 0; g < history.size(); ++g) out += std::to_string(g) + "," + format_double(history[g]) + "\n";
  return out;
}

ExplainResult run_explain(const ExplainOptions& opts) {
  const auto started = std::chrono::steady_clock::now();

  std::optional<TimeSeries> x;
  std::optional<GroundTruth> gt;
  std::shared_ptr<const BlackBoxModel> model;

  if (opts.synthetic_kind) {
    if (opts.series) throw ConfigError("explain: --series and --synthetic are mutually exclusive");
    SyntheticInstance inst = make_instance(*opts.synthetic_kind, opts.synthetic_seed);
    x = inst.x;
    gt = inst.gt;
    model = inst.model;
  } else {
    if (!opts.series) throw ConfigError("explain: provide --series or --synthetic");
    x = read_series_csv(*opts.series);
  }

  if (opts.model_command) {
    ExternalModelOptions mopts;
    mopts.predict_timeout = opts.model_timeout;
    mopts.expected_task = opts.task;
    model = std::make_shared<ExternalModelPool>(*opts.model_command, opts.optimizer.workers, mopts);
  }
  if (!model) throw ConfigError("explain: a model command is required unless --synthetic is used");

  opts.optimizer.validate(x->steps());
  FitnessEvaluator evaluator(*model, *x, opts.perturbation);
  ExplainResult result{run(evaluator, opts.optimizer), 0.0, {}};
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  write_mask_json(result.run.best_mask, opts.out_mask);
  write_file_atomic(opts.out_history, history_csv(result.run.history));
  if (opts.out_series) write_series_csv(*opts.out_series, *x);
  if (opts.out_ground_truth) {
    if (!gt) throw ConfigError("explain: ground truth output needs --synthetic");
    write_ground_truth_json(*gt, *opts.out_ground_truth);
  }

  std::ostringstream os;
  os << "best_delta=" << format_double(result.run.best_fitness) << " evaluations=" << result.run.evaluations
     << " seconds=" << result.seconds;
  result.summary_line = os.str();
  return result;
}

}  // namespace cgsmask::cli
