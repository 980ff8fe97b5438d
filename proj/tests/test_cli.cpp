#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include <sys/wait.h>

#include "cgsmask/cli.hpp"
#include "cgsmask/error.hpp"
#include "cgsmask/modeladapter.hpp"

using namespace cgsmask;
using nlohmann::json;

namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "cgsmask_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CGSMASK_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

json small_bench(const fs::path& out) {
  return {{"datasets", {"rare_feature", "random"}},
          {"seeds", {0, 1, 2}},
          {"methods", {"cgs", "fo", "fp", "rise"}},
          {"output_dir", out.string()},
          {"d", 12},
          {"t", 16},
          {"optimizer", {{"generations", 15}, {"grid_rows", 4}, {"grid_cols", 4}, {"strip_count", 3},
                         {"strip_len_min", 2}, {"strip_len_max", 4}}},
          {"baselines", {{"repeats", 2}, {"rise_masks", 50}}},
          {"record_seconds", false}};
}

}  // namespace

TEST_CASE("bench config validation") {
  const json base = small_bench("unused");
  CHECK_NOTHROW(cli::parse_bench_config(base));

  json j = base;
  j["methods"] = json::array();
  CHECK_THROWS_AS(cli::parse_bench_config(j), ConfigError);
  j = base;
  j["datasets"] = json::array();
  CHECK_THROWS_AS(cli::parse_bench_config(j), ConfigError);
  j = base;
  j["methods"] = {"cgs", "shap"};
  CHECK_THROWS_AS(cli::parse_bench_config(j), ConfigError);
  j = base;
  j["generations"] = 3;
  CHECK_THROWS_AS(cli::parse_bench_config(j), ConfigError);
  j = base;
  j["optimizer"]["pc"] = 0.5;
  CHECK_THROWS_AS(cli::parse_bench_config(j), ConfigError);
  j = base;
  j["seeds"] = "zero";
  CHECK_THROWS_AS(cli::parse_bench_config(j), ConfigError);
  j = base;
  j["top_fraction"] = 0.0;
  CHECK_THROWS_AS(cli::parse_bench_config(j), ConfigError);

  const cli::BenchConfig cfg = cli::parse_bench_config(base);
  const OptimizerConfig rt = cli::parse_bench_config(json{{"datasets", {"rare_time"}}, {"seeds", {0}}, {"methods", {"cgs"}}})
                                 .optimizer_for(DatasetKind::RareTime, 4);
  CHECK(rt.strip_count == 25);
  CHECK(rt.strip_len_min == 3);
  CHECK(rt.strip_len_max == 5);
  CHECK(rt.seed == 4);
  CHECK(cfg.optimizer_for(DatasetKind::Random, 0).strip_count == 3);
}

TEST_CASE("bench rows, summary and determinism") {
  const fs::path a = fresh_dir("bench_a");
  const fs::path b = fresh_dir("bench_b");
  json ja = small_bench(a);
  json jb = small_bench(b);
  jb["workers"] = 4;

  const cli::RunReport ra = cli::run_bench(cli::parse_bench_config(ja));
  const cli::RunReport rb = cli::run_bench(cli::parse_bench_config(jb));
  CHECK(ra.rows.size() == 2 * 3 * 4);
  CHECK(read_file(a / "report.csv") == read_file(b / "report.csv"));
  CHECK(read_file(a / "summary.csv") == read_file(b / "summary.csv"));

  const auto rows = read_csv(a / "report.csv");
  REQUIRE(rows.size() == 25);
  CHECK(rows[0] == std::vector<std::string>{"method", "dataset", "seed", "aup", "aur", "dm", "em", "delta_p", "seconds"});
  CHECK(rows[1][0] == "cgs");
  CHECK(rows[1][1] == "rare_feature");
  CHECK(rows[1][2] == "0");
  for (std::size_t r = 1; r < rows.size(); ++r) {
    CHECK(rows[r][8] == "0");
    if (rows[r][0] == "cgs") CHECK(rows[r][6] == "0");
  }

  // summary means recomputed from the report rows
  for (const auto& s : ra.summary) {
    std::vector<double> aur;
    for (std::size_t r = 1; r < rows.size(); ++r)
      if (rows[r][0] == s.method && rows[r][1] == s.dataset) aur.push_back(std::stod(rows[r][4]));
    REQUIRE(aur.size() == 3);
    double mean = 0.0;
    for (double v : aur) mean += v / 3.0;
    double var = 0.0;
    for (double v : aur) var += (v - mean) * (v - mean) / 2.0;
    CHECK(std::abs(s.aur.mean - mean) < 1e-9);
    CHECK(std::abs(s.aur.std - std::sqrt(var)) < 1e-9);
    CHECK(s.runs == 3);
  }

  CHECK(fs::exists(a / "masks" / "rare_feature_0_cgs.json"));
  CHECK(fs::exists(a / "masks" / "random_2_rise.json"));

  // a second run into the same directory is byte-identical
  cli::run_bench(cli::parse_bench_config(ja));
  CHECK(read_file(a / "report.csv") == read_file(b / "report.csv"));
}

TEST_CASE("mean_std and summarize") {
  const cli::Stat s = cli::mean_std({1.0, 2.0, 3.0, 4.0});
  CHECK(s.mean == 2.5);
  CHECK(s.std == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(cli::mean_std({7.0}).std == 0.0);

  std::vector<cli::RunRow> rows(3);
  for (auto& r : rows) {
    r.method = "cgs";
    r.dataset = "random";
  }
  rows[0].aur = 0.2;
  rows[1].aur = 0.4;
  rows[2].error = "boom";
  rows[2].aur = std::nan("");
  const auto summary = cli::summarize(rows);
  REQUIRE(summary.size() == 1);
  CHECK(summary[0].runs == 3);
  CHECK(summary[0].failures == 1);
  CHECK(summary[0].aur.mean == doctest::Approx(0.3));
}

TEST_CASE("explain on a synthetic instance") {
  const fs::path dir = fresh_dir("explain");
  cli::ExplainOptions opts;
  opts.synthetic_kind = DatasetKind::RareFeature;
  opts.out_mask = dir / "mask.json";
  opts.out_history = dir / "history.csv";
  opts.out_series = dir / "series.csv";
  opts.out_ground_truth = dir / "gt.json";
  const cli::ExplainResult r = cli::run_explain(opts);

  const auto rows = read_csv(opts.out_history);
  REQUIRE(rows.size() == 502);
  CHECK(rows[0] == std::vector<std::string>{"generation", "best_delta"});
  std::vector<double> h;
  for (std::size_t k = 1; k < rows.size(); ++k) h.push_back(std::stod(rows[k][1]));
  CHECK(std::is_sorted(h.begin(), h.end()));
  CHECK(h.back() == r.run.best_fitness);
  CHECK(r.summary_line.rfind("best_delta=", 0) == 0);

  const std::string first = read_file(opts.out_mask);
  cli::run_explain(opts);
  CHECK(read_file(opts.out_mask) == first);

  CHECK_THROWS_AS(cli::run_explain(cli::ExplainOptions{}), ConfigError);
  cli::ExplainOptions missing;
  missing.series = dir / "nope.csv";
  missing.model_command = "true";
  CHECK_THROWS_AS(cli::run_explain(missing), IoError);
}

TEST_CASE("explain with an external model") {
  const fs::path dir = fresh_dir("explain_external");
  Matrix x = Matrix::Zero(3, 8);
  x(1, 2) = 2.0;
  x(1, 3) = 3.0;
  write_series_csv(dir / "x.csv", TimeSeries(x));
  cli::ExplainOptions opts;
  opts.series = dir / "x.csv";
  opts.model_command = std::string(CGSMASK_STUB_MODEL) + " sum";
  opts.optimizer.generations = 20;
  opts.optimizer.grid_rows = opts.optimizer.grid_cols = 3;
  opts.optimizer.strip_count = 1;
  opts.optimizer.strip_len_min = opts.optimizer.strip_len_max = 2;
  opts.optimizer.workers = 2;
  opts.out_mask = dir / "mask.json";
  opts.out_history = dir / "history.csv";
  const cli::ExplainResult r = cli::run_explain(opts);
  CHECK(r.run.best_fitness == 169.0);
  const StripMask best = std::get<StripMask>(read_mask_json(opts.out_mask));
  CHECK(best.strips()[0] == Strip{1, 2, 2});
}

TEST_CASE("evaluate") {
  const fs::path dir = fresh_dir("evaluate");
  const SyntheticInstance inst = make_instance(DatasetKind::RareFeature, 0, 10, 12);
  write_series_csv(dir / "x.csv", inst.x);
  write_ground_truth_json(inst.gt, dir / "gt.json");

  std::vector<Strip> strips;
  for (const auto& [d, t] : inst.gt.salient()) strips.push_back({d, t, 1});
  const StripMask exact(strips, 10, 12);
  write_mask_json(exact, dir / "strip.json");
  write_mask_json(exact.to_dense_mask(), dir / "dense.json");

  cli::EvaluateOptions opts;
  opts.mask = dir / "strip.json";
  opts.series = dir / "x.csv";
  const json bare = cli::run_evaluate(opts);
  CHECK(bare["em"] == 0.0);
  CHECK(bare.contains("dm"));
  CHECK_FALSE(bare.contains("aup"));
  CHECK_FALSE(bare.contains("delta_p"));

  opts.ground_truth = dir / "gt.json";
  const json with_gt = cli::run_evaluate(opts);
  CHECK(with_gt["aup"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(with_gt["aur"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));

  opts.mask = dir / "dense.json";
  CHECK(cli::run_evaluate(opts) == with_gt);

  opts.model_command = std::string(CGSMASK_STUB_MODEL) + " constant";
  CHECK(cli::run_evaluate(opts)["delta_p"] == 0.0);

  opts.series = dir / "missing.csv";
  CHECK_THROWS_AS(cli::run_evaluate(opts), IoError);
}

TEST_CASE("render") {
  Matrix one = Matrix::Ones(1, 1);
  const std::string svg = cli::render_heatmap_svg(one, {"a"});
  CHECK(svg.find("fill=\"#1a9850\"") != std::string::npos);
  CHECK(svg.find("fill=\"#d73027\"") == std::string::npos);
  CHECK(svg.find(">a</text>") != std::string::npos);

  const StripMask sm({{0, 1, 3}, {2, 0, 2}}, 3, 5);
  const std::string strip_svg = cli::render_heatmap_svg(sm.dense().cast<double>(), {});
  std::size_t green = 0, red = 0;
  for (std::size_t p = 0; (p = strip_svg.find("#1a9850", p)) != std::string::npos; ++p) ++green;
  for (std::size_t p = 0; (p = strip_svg.find("#d73027", p)) != std::string::npos; ++p) ++red;
  CHECK(green == 5);
  CHECK(red == 10);
  CHECK(cli::render_heatmap_svg(sm.dense().cast<double>(), {}) == strip_svg);
  CHECK_THROWS_AS(cli::render_heatmap_svg(one, {"a", "b"}), DimensionError);

  const fs::path dir = fresh_dir("render");
  write_mask_json(sm, dir / "m.json");
  write_series_csv(dir / "x.csv", TimeSeries(Matrix::Zero(3, 5)), {"hr", "bp", "<o2>"});
  cli::render_heatmap(dir / "m.json", dir / "x.csv", dir / "a.svg");
  cli::render_heatmap(dir / "m.json", dir / "x.csv", dir / "b.svg");
  CHECK(read_file(dir / "a.svg") == read_file(dir / "b.svg"));
  CHECK(read_file(dir / "a.svg").find("&lt;o2&gt;") != std::string::npos);
}

TEST_CASE("exit codes") {
  const fs::path dir = fresh_dir("exit_codes");
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("") == cli::kConfigError);
  CHECK(run_cli("frobnicate") == cli::kConfigError);

  write_file_atomic(dir / "empty_methods.json", R"({"datasets":["random"],"seeds":[0],"methods":[]})");
  CHECK(run_cli("bench " + (dir / "empty_methods.json").string()) == cli::kConfigError);
  CHECK(run_cli("bench " + (dir / "absent.json").string()) == cli::kIoError);

  CHECK(run_cli("explain --series " + (dir / "absent.csv").string() + " --model true") == cli::kIoError);
  CHECK(run_cli("explain --synthetic rare_feature:0 --generations 3 --model '" + std::string(CGSMASK_STUB_MODEL) +
                " version2' --out-mask " + (dir / "m.json").string() + " --out-history " +
                (dir / "h.csv").string()) == cli::kModelError);
  CHECK(run_cli("explain --synthetic spiral:0") == cli::kConfigError);

  const std::string out = " --out-mask " + (dir / "m.json").string() + " --out-history " + (dir / "h.csv").string() +
                          " --out-series " + (dir / "x.csv").string() + " --out-gt " + (dir / "gt.json").string();
  CHECK(run_cli("explain --synthetic rare_time:2 --generations 5 --seed 3" + out) == 0);
  const std::string mask = read_file(dir / "m.json");
  CHECK(run_cli("explain --synthetic rare_time:2 --generations 5 --seed 3 --workers 4" + out) == 0);
  CHECK(read_file(dir / "m.json") == mask);
  CHECK(std::get<StripMask>(read_mask_json(dir / "m.json")).strip_count() == 25);
  CHECK(read_csv(dir / "h.csv").size() == 7);

  CHECK(run_cli("evaluate --mask " + (dir / "m.json").string() + " --series " + (dir / "x.csv").string() + " --gt " +
                (dir / "gt.json").string() + " --out " + (dir / "metrics.json").string()) == 0);
  const json metrics = json::parse(read_file(dir / "metrics.json"));
  CHECK(metrics.contains("aur"));
  CHECK(run_cli("render --mask " + (dir / "m.json").string() + " --series " + (dir / "x.csv").string() + " --out " +
                (dir / "m.svg").string()) == 0);
  CHECK(fs::exists(dir / "m.svg"));
}
