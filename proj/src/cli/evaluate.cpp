#include "cgsmask/cli.hpp"
#include "cgsmask/modeladapter.hpp"

namespace cgsmask::cli {

nlohmann::json run_evaluate(const EvaluateOptions& opts) {
  const AnyMask mask = read_mask_json(opts.mask);
  const TimeSeries x = read_series_csv(opts.series);
  const Matrix values = mask_values(mask);
  if (values.rows() != x.features() || values.cols() != x.steps()) {
    throw DimensionError("mask is " + std::to_string(values.rows()) + "x" + std::to_string(values.cols()) +
                         " but series is " + std::to_string(x.features()) + "x" + std::to_string(x.steps()));
  }

  nlohmann::json out;
  out["dm"] = discreteness(values, opts.metrics.discreteness_threshold);
  out["em"] = entropy(values);
  if (opts.ground_truth) {
    const GroundTruth gt = read_ground_truth_json(*opts.ground_truth, x.features(), x.steps());
    const AreaScores area = aup_aur(values, gt, opts.metrics);
    out["aup"] = area.aup;
    out["aur"] = area.aur;
  }
  if (opts.model_command) {
    ExternalModel model(*opts.model_command);
    FitnessEvaluator evaluator(model, x, opts.perturbation);
    out["delta_p"] = evaluator.evaluate(DenseMask(values));
  }
  return out;
}

}  // namespace cgsmask::cli
