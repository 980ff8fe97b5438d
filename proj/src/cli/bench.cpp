#include <chrono>
#include <cmath>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "cgsmask/cli.hpp"
#include "cgsmask/modeladapter.hpp"
#include "cgsmask/parallel.hpp"

namespace cgsmask::cli {

using nlohmann::json;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kConfigError;
  if (dynamic_cast<const ModelError*>(&e)) return kModelError;
  if (dynamic_cast<const IoError*>(&e)) return kIoError;
  if (dynamic_cast<const std::filesystem::filesystem_error*>(&e)) return kIoError;
  return kFailure;
}

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read_into(const json& obj, const char* key, T& out, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for '" + std::string(key) + "' in " + where);
  }
}

template <typename T>
void read_into(const json& obj, const char* key, std::optional<T>& out, const std::string& where) {
  if (obj.contains(key)) {
    T v{};
    read_into(obj, key, v, where);
    out = v;
  }
}

const std::set<std::string> kMethods = {"cgs", "fo", "fp", "rise"};

std::string csv_number(double v) { return std::isnan(v) ? "nan" : format_double(v); }

}  // namespace

OptimizerConfig BenchConfig::optimizer_for(DatasetKind kind, std::uint64_t seed) const {
  OptimizerConfig cfg = optimizer;
  const StripSettings strips = default_strip_settings(kind);
  cfg.strip_count = strip_count.value_or(strips.strip_count);
  cfg.strip_len_min = strip_len_min.value_or(strips.len_min);
  cfg.strip_len_max = strip_len_max.value_or(strips.len_max);
  cfg.seed = seed;
  cfg.workers = workers;
  return cfg;
}

BenchConfig parse_bench_config(const json& j) {
  reject_unknown(j,
                 {"datasets", "seeds", "methods", "output_dir", "d", "t", "optimizer", "baselines", "perturbation",
                  "metrics", "top_fraction", "top_fraction_mode", "workers", "record_seconds", "write_masks"},
                 "bench config");
  BenchConfig cfg;
  const std::string where = "bench config";

  std::vector<std::string> datasets;
  read_into(j, "datasets", datasets, where);
  if (datasets.empty()) throw ConfigError("bench config: 'datasets' must list at least one dataset");
  for (const auto& d : datasets) cfg.datasets.push_back(parse_dataset_kind(d));

  read_into(j, "seeds", cfg.seeds, where);
  if (cfg.seeds.empty()) throw ConfigError("bench config: 'seeds' must list at least one seed");

  read_into(j, "methods", cfg.methods, where);
  if (cfg.methods.empty()) throw ConfigError("bench config: 'methods' must list at least one method");
  for (const auto& m : cfg.methods) {
    if (!kMethods.count(m)) throw ConfigError("bench config: unknown method '" + m + "'");
  }

  std::string output_dir = cfg.output_dir.string();
  read_into(j, "output_dir", output_dir, where);
  cfg.output_dir = output_dir;
  read_into(j, "d", cfg.features, where);
  read_into(j, "t", cfg.steps, where);
  if (cfg.features < 1 || cfg.steps < 1) throw ConfigError("bench config: d and t must be positive");

  if (j.contains("optimizer")) {
    const json& o = j["optimizer"];
    const std::string w = "optimizer";
    reject_unknown(o,
                   {"generations", "grid_rows", "grid_cols", "p_crossover", "p_mutation", "p_translation",
                    "neighborhood", "strip_count", "strip_len_min", "strip_len_max", "max_translation"},
                   w);
    read_into(o, "generations", cfg.optimizer.generations, w);
    read_into(o, "grid_rows", cfg.optimizer.grid_rows, w);
    read_into(o, "grid_cols", cfg.optimizer.grid_cols, w);
    read_into(o, "p_crossover", cfg.optimizer.p_crossover, w);
    read_into(o, "p_mutation", cfg.optimizer.p_mutation, w);
    read_into(o, "p_translation", cfg.optimizer.p_translation, w);
    std::string nb = to_string(cfg.optimizer.neighborhood);
    read_into(o, "neighborhood", nb, w);
    cfg.optimizer.neighborhood = parse_neighborhood(nb);
    read_into(o, "strip_count", cfg.strip_count, w);
    read_into(o, "strip_len_min", cfg.strip_len_min, w);
    read_into(o, "strip_len_max", cfg.strip_len_max, w);
    read_into(o, "max_translation", cfg.optimizer.max_translation, w);
  }

  if (j.contains("baselines")) {
    const json& b = j["baselines"];
    reject_unknown(b, {"repeats", "rise_masks", "rise_keep_prob"}, "baselines");
    read_into(b, "repeats", cfg.baselines.repeats, "baselines");
    read_into(b, "rise_masks", cfg.baselines.rise_masks, "baselines");
    read_into(b, "rise_keep_prob", cfg.baselines.rise_keep_prob, "baselines");
  }

  if (j.contains("perturbation")) {
    std::string p;
    read_into(j, "perturbation", p, where);
    cfg.perturbation = parse_perturbation(p);
  }

  if (j.contains("metrics")) {
    const json& m = j["metrics"];
    reject_unknown(m, {"beta", "alpha_grid"}, "metrics");
    read_into(m, "beta", cfg.metrics.discreteness_threshold, "metrics");
    read_into(m, "alpha_grid", cfg.metrics.alpha_grid, "metrics");
  }
  cfg.metrics.validate();

  read_into(j, "top_fraction", cfg.top_fraction, where);
  if (!(cfg.top_fraction > 0.0 && cfg.top_fraction <= 1.0)) throw ConfigError("bench config: top_fraction must lie in (0,1]");
  std::string mode = "preserve";
  read_into(j, "top_fraction_mode", mode, where);
  if (mode == "none") {
    cfg.top_fraction_mode = TopFractionMode::None;
  } else if (mode == "preserve") {
    cfg.top_fraction_mode = TopFractionMode::Preserve;
  } else if (mode == "binary") {
    cfg.top_fraction_mode = TopFractionMode::Binary;
  } else {
    throw ConfigError("bench config: top_fraction_mode must be none, preserve or binary");
  }

  read_into(j, "workers", cfg.workers, where);
  cfg.workers = workers_from_env(cfg.workers);
  if (cfg.workers < 1) throw ConfigError("bench config: workers must be >= 1");
  read_into(j, "record_seconds", cfg.record_seconds, where);
  read_into(j, "write_masks", cfg.write_masks, where);

  cfg.baselines.workers = cfg.workers;
  cfg.baselines.validate();
  for (const auto kind : cfg.datasets) cfg.optimizer_for(kind, 0).validate(cfg.steps);
  return cfg;
}

BenchConfig load_bench_config(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  return parse_bench_config(j);
}

Stat mean_std(const std::vector<double>& values) {
  Stat s;
  if (values.empty()) return {std::nan(""), std::nan("")};
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return s;
}

std::vector<SummaryRow> summarize(const std::vector<RunRow>& rows) {
  std::vector<SummaryRow> out;
  std::vector<std::vector<const RunRow*>> groups;
  for (const auto& r : rows) {
    std::size_t g = 0;
    while (g < out.size() && (out[g].method != r.method || out[g].dataset != r.dataset)) ++g;
    if (g == out.size()) {
      SummaryRow row;
      row.method = r.method;
      row.dataset = r.dataset;
      out.push_back(std::move(row));
      groups.emplace_back();
    }
    groups[g].push_back(&r);
  }
  for (std::size_t g = 0; g < out.size(); ++g) {
    std::vector<double> aup, aur, dm, em, dp, sec;
    for (const RunRow* r : groups[g]) {
      ++out[g].runs;
      if (!r->error.empty()) {
        ++out[g].failures;
        continue;
      }
      aup.push_back(r->aup);
      aur.push_back(r->aur);
      dm.push_back(r->dm);
      em.push_back(r->em);
      dp.push_back(r->delta_p);
      sec.push_back(r->seconds);
    }
    out[g].aup = mean_std(aup);
    out[g].aur = mean_std(aur);
    out[g].dm = mean_std(dm);
    out[g].em = mean_std(em);
    out[g].delta_p = mean_std(dp);
    out[g].seconds = mean_std(sec);
  }
  return out;
}

std::string RunReport::report_csv() const {
  std::ostringstream os;
  os << "method,dataset,seed,aup,aur,dm,em,delta_p,seconds\n";
  for (const auto& r : rows) {
    os << r.method << ',' << r.dataset << ',' << r.seed << ',' << csv_number(r.aup) << ',' << csv_number(r.aur) << ','
       << csv_number(r.dm) << ',' << csv_number(r.em) << ',' << csv_number(r.delta_p) << ','
       << csv_number(r.seconds) << '\n';
  }
  return os.str();
}

std::string RunReport::summary_csv() const {
  std::ostringstream os;
  os << "method,dataset,runs,failures,aup_mean,aup_std,aur_mean,aur_std,dm_mean,dm_std,em_mean,em_std,"
        "delta_p_mean,delta_p_std,seconds_mean,seconds_std\n";
  for (const auto& s : summary) {
    os << s.method << ',' << s.dataset << ',' << s.runs << ',' << s.failures;
    for (const Stat* st : {&s.aup, &s.aur, &s.dm, &s.em, &s.delta_p, &s.seconds}) {
      os << ',' << csv_number(st->mean) << ',' << csv_number(st->std);
    }
    os << '\n';
  }
  return os.str();
}

RunRow score_map(const Matrix& map, const GroundTruth& gt, const MetricsConfig& metrics) {
  RunRow row;
  const AreaScores area = aup_aur(map, gt, metrics);
  row.aup = area.aup;
  row.aur = area.aur;
  row.dm = static_cast<double>(discreteness(map, metrics.discreteness_threshold));
  row.em = entropy(map);
  return row;
}

namespace {

Matrix select_top(const Matrix& map, const BenchConfig& cfg) {
  switch (cfg.top_fraction_mode) {
    case TopFractionMode::None:
      return map;
    case TopFractionMode::Preserve:
      return top_fraction_values(map, cfg.top_fraction);
    case TopFractionMode::Binary:
      return top_fraction(map, cfg.top_fraction).cast<double>();
  }
  return map;
}

RunRow run_one(const BenchConfig& cfg, const SyntheticInstance& inst, const std::string& method, std::uint64_t seed,
               const std::filesystem::path& mask_path) {
  FitnessEvaluator evaluator(*inst.model, inst.x, cfg.perturbation);
  RunRow row;
  std::optional<AnyMask> mask;
  double delta_p = 0.0;

  if (method == "cgs") {
    RunResult result = run(evaluator, cfg.optimizer_for(inst.kind, seed));
    const Matrix dense = result.best_mask.dense().cast<double>();
    row = score_map(dense, inst.gt, cfg.metrics);
    delta_p = result.best_fitness;
    mask = std::move(result.best_mask);
  } else {
    BaselineConfig bcfg = cfg.baselines;
    bcfg.seed = seed;
    bcfg.workers = cfg.workers;
    DenseMask map = method == "fo"   ? feature_occlusion(*inst.model, inst.x, cfg.perturbation, cfg.workers)
                    : method == "fp" ? feature_permutation(*inst.model, inst.x, bcfg)
                                     : rise(*inst.model, inst.x, bcfg, cfg.perturbation);
    const Matrix selected = select_top(map.values(), cfg);
    row = score_map(selected, inst.gt, cfg.metrics);
    delta_p = evaluator.evaluate(top_fraction(map.values(), cfg.top_fraction));
    mask = DenseMask(selected);
  }
  row.delta_p = delta_p;
  if (cfg.write_masks) write_mask_json(*mask, mask_path);
  return row;
}

}  // namespace

RunReport run_bench(const BenchConfig& cfg) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) throw IoError("cannot create output directory " + cfg.output_dir.string());
  if (cfg.write_masks) {
    fs::create_directories(cfg.output_dir / "masks", ec);
    fs::create_directories(cfg.output_dir / "instances", ec);
    if (ec) throw IoError("cannot create mask directory under " + cfg.output_dir.string());
  }

  RunReport report;
  for (const auto kind : cfg.datasets) {
    for (const auto seed : cfg.seeds) {
      const std::string dataset = to_string(kind);
      const std::string stem = dataset + "_" + std::to_string(seed);
      std::optional<SyntheticInstance> inst;
      std::string instance_error;
      try {
        inst = make_instance(kind, seed, cfg.features, cfg.steps);
        if (cfg.write_masks) {
          write_series_csv(cfg.output_dir / "instances" / (stem + ".csv"), inst->x);
          write_ground_truth_json(inst->gt, cfg.output_dir / "instances" / (stem + "_gt.json"));
        }
      } catch (const IoError&) {
        throw;
      } catch (const Error& e) {
        instance_error = e.what();
      }

      for (const auto& method : cfg.methods) {
        RunRow row;
        const auto started = std::chrono::steady_clock::now();
        try {
          if (!inst) throw ModelError(instance_error);
          row = run_one(cfg, *inst, method, seed, cfg.output_dir / "masks" / (stem + "_" + method + ".json"));
        } catch (const IoError&) {
          throw;
        } catch (const Error& e) {
          const double nan = std::nan("");
          row = RunRow{};
          row.aup = row.aur = row.dm = row.em = row.delta_p = nan;
          row.error = e.what();
          std::cerr << "bench: " << method << " on " << stem << " failed: " << e.what() << "\n";
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        row.method = method;
        row.dataset = dataset;
        row.seed = seed;
        row.seconds = cfg.record_seconds ? seconds : 0.0;
        report.rows.push_back(std::move(row));
      }
    }
  }
  report.summary = summarize(report.rows);

  write_file_atomic(cfg.output_dir / "report.csv", report.report_csv());
  write_file_atomic(cfg.output_dir / "summary.csv", report.summary_csv());
  std::string errors;
  for (const auto& r : report.rows) {
    if (!r.error.empty()) errors += r.method + "," + r.dataset + "," + std::to_string(r.seed) + ": " + r.error + "\n";
  }
  if (!errors.empty()) write_file_atomic(cfg.output_dir / "errors.log", errors);
  return report;
}

}  // namespace cgsmask::cli
