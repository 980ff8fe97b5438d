#include "cgsmask/optimizer.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "cgsmask/parallel.hpp"

namespace cgsmask {

std::string to_string(Neighborhood n) { return n == Neighborhood::Moore ? "moore" : "von_neumann"; }

Neighborhood parse_neighborhood(const std::string& name) {
  if (name == "moore") return Neighborhood::Moore;
  if (name == "von_neumann" || name == "vonneumann" || name == "von-neumann") return Neighborhood::VonNeumann;
  throw ConfigError("unknown neighborhood '" + name + "'");
}

void OptimizerConfig::validate(Index steps) const {
  auto fail = [](const std::string& msg) { throw ConfigError("optimizer config: " + msg); };
  if (generations < 0) fail("generations must be >= 0");
  if (grid_rows < 1 || grid_cols < 1) fail("grid dimensions must be positive");
  for (double p : {p_crossover, p_mutation, p_translation}) {
    if (!(p >= 0.0 && p <= 1.0)) fail("operator probabilities must lie in [0,1]");
  }
  if (p_crossover + p_mutation + p_translation > 1.0 + 1e-12) fail("p_crossover + p_mutation + p_translation > 1");
  if (strip_count < 1) fail("strip_count must be >= 1");
  if (strip_len_min < 1) fail("strip_len_min must be >= 1");
  if (strip_len_min > strip_len_max) fail("strip_len_min > strip_len_max");
  if (strip_len_max > steps) {
    fail("strip_len_max (" + std::to_string(strip_len_max) + ") exceeds the time horizon (" + std::to_string(steps) + ")");
  }
  if (max_translation < 0) fail("max_translation must be >= 0");
  if (workers < 1) fail("workers must be >= 1");
}

int OptimizerConfig::effective_max_translation(Index steps) const {
  if (max_translation > 0) return max_translation;
  return std::max<int>(1, static_cast<int>(steps / 10));
}

CellGrid::CellGrid(int rows, int cols, std::vector<Cell> cells, int generation)
    : rows_(rows), cols_(cols), cells_(std::move(cells)), generation_(generation) {
  if (rows_ < 1 || cols_ < 1 || cells_.size() != static_cast<std::size_t>(rows_) * cols_) {
    throw DimensionError("cell grid size does not match its dimensions");
  }
}

std::size_t CellGrid::best_index() const {
  std::size_t best = 0;
  for (std::size_t k = 1; k < cells_.size(); ++k) {
    if (cells_[k].fitness > cells_[best].fitness) best = k;
  }
  return best;
}

StreamRng cell_stream(std::uint64_t seed, int generation, int row, int col) {
  return StreamRng(seed, {static_cast<std::uint64_t>(generation), static_cast<std::uint64_t>(row),
                          static_cast<std::uint64_t>(col)});
}

Strip random_strip(const OptimizerConfig& cfg, Index features, Index steps, StreamRng& rng) {
  Strip s;
  s.feature = rng.uniform_int(0, features - 1);
  s.start = rng.uniform_int(0, steps - 1);
  s.length = rng.uniform_int(cfg.strip_len_min, cfg.strip_len_max);
  s.length = std::min(s.length, steps - s.start);
  return s;
}

namespace {

StripMask random_mask(const OptimizerConfig& cfg, Index features, Index steps, StreamRng& rng) {
  std::vector<Strip> strips;
  strips.reserve(static_cast<std::size_t>(cfg.strip_count));
  for (int k = 0; k < cfg.strip_count; ++k) strips.push_back(random_strip(cfg, features, steps, rng));
  return StripMask(std::move(strips), features, steps);
}

std::vector<double> score(const std::vector<StripMask>& masks, FitnessEvaluator& evaluator, int workers) {
  std::vector<const BinaryMatrix*> dense;
  dense.reserve(masks.size());
  for (const auto& m : masks) dense.push_back(&m.dense());
  return evaluator.evaluate_batch(dense, workers);
}

CellGrid make_grid(const OptimizerConfig& cfg, std::vector<StripMask> masks, std::vector<double> fitness,
                   int generation) {
  std::vector<Cell> cells;
  cells.reserve(masks.size());
  for (std::size_t k = 0; k < masks.size(); ++k) cells.push_back({std::move(masks[k]), fitness[k]});
  return CellGrid(cfg.grid_rows, cfg.grid_cols, std::move(cells), generation);
}

}  // namespace

std::vector<StripMask> random_population(const OptimizerConfig& cfg, Index features, Index steps) {
  cfg.validate(steps);
  std::vector<StripMask> masks;
  masks.reserve(static_cast<std::size_t>(cfg.grid_rows) * cfg.grid_cols);
  for (int i = 0; i < cfg.grid_rows; ++i) {
    for (int j = 0; j < cfg.grid_cols; ++j) {
      StreamRng rng = cell_stream(cfg.seed, 0, i, j);
      masks.push_back(random_mask(cfg, features, steps, rng));
    }
  }
  return masks;
}

CellGrid init_population(const OptimizerConfig& cfg, FitnessEvaluator& evaluator) {
  const TimeSeries& x = evaluator.input();
  std::vector<StripMask> masks = random_population(cfg, x.features(), x.steps());
  std::vector<double> fitness = score(masks, evaluator, cfg.workers);
  return make_grid(cfg, std::move(masks), std::move(fitness), 0);
}

std::vector<std::pair<int, int>> neighbors(int rows, int cols, int i, int j, Neighborhood scheme) {
  static constexpr std::pair<int, int> kMoore[] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1},
                                                   {0, 1},   {1, -1},  {1, 0},  {1, 1}};
  static constexpr std::pair<int, int> kVonNeumann[] = {{-1, 0}, {0, -1}, {0, 1}, {1, 0}};
  const std::span<const std::pair<int, int>> offsets =
      scheme == Neighborhood::Moore ? std::span<const std::pair<int, int>>(kMoore)
                                    : std::span<const std::pair<int, int>>(kVonNeumann);

  std::vector<std::pair<int, int>> out;
  for (const auto& [di, dj] : offsets) {
    const int r = ((i + di) % rows + rows) % rows;
    const int c = ((j + dj) % cols + cols) % cols;
    if (r == i && c == j) continue;
    if (std::find(out.begin(), out.end(), std::pair{r, c}) != out.end()) continue;
    out.emplace_back(r, c);
  }
  return out;
}

std::optional<std::size_t> select_mate(double cell_fitness, std::span<const double> neighbor_fitness,
                                       StreamRng& rng) {
  std::vector<std::size_t> candidates;
  double total = 0.0;
  for (std::size_t k = 0; k < neighbor_fitness.size(); ++k) {
    if (neighbor_fitness[k] >= cell_fitness) {
      candidates.push_back(k);
      total += neighbor_fitness[k];
    }
  }
  if (candidates.empty()) return std::nullopt;
  if (candidates.size() == 1) return candidates.front();
  if (total <= 0.0) return candidates[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(candidates.size()) - 1))];

  const double target = rng.uniform() * total;
  double acc = 0.0;
  for (const std::size_t k : candidates) {
    acc += neighbor_fitness[k];
    if (target < acc) return k;
  }
  return candidates.back();
}

StripMask crossover(const StripMask& a, const StripMask& b, double fa, double fb, StreamRng& rng) {
  if (a.strip_count() != b.strip_count()) {
    throw DimensionError("crossover parents have " + std::to_string(a.strip_count()) + " and " +
                         std::to_string(b.strip_count()) + " strips");
  }
  if (a.features() != b.features() || a.steps() != b.steps()) throw DimensionError("crossover parents differ in shape");
  const double p_a = (fa + fb) > 0.0 ? fa / (fa + fb) : 0.5;
  std::vector<Strip> strips;
  strips.reserve(a.strip_count());
  for (std::size_t k = 0; k < a.strip_count(); ++k) {
    strips.push_back(rng.uniform() < p_a ? a.strips()[k] : b.strips()[k]);
  }
  return StripMask(std::move(strips), a.features(), a.steps());
}

StripMask mutate(const StripMask& mask, const OptimizerConfig& cfg, StreamRng& rng) {
  if (mask.strip_count() == 0) throw DimensionError("cannot mutate a mask without strips");
  std::vector<Strip> strips = mask.strips();
  const auto k = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(strips.size()) - 1));
  strips[k] = random_strip(cfg, mask.features(), mask.steps(), rng);
  return StripMask(std::move(strips), mask.features(), mask.steps());
}

StripMask translate(const StripMask& mask, const OptimizerConfig& cfg, StreamRng& rng) {
  if (mask.strip_count() == 0) throw DimensionError("cannot translate a mask without strips");
  std::vector<Strip> strips = mask.strips();
  const auto k = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(strips.size()) - 1));
  const Index shift = rng.uniform_int(1, cfg.effective_max_translation(mask.steps()));
  const bool forward = rng.bernoulli(0.5);
  Strip& s = strips[k];
  s.start = std::clamp<Index>(forward ? s.start + shift : s.start - shift, 0, mask.steps() - s.length);
  return StripMask(std::move(strips), mask.features(), mask.steps());
}

CellGrid evolve(const CellGrid& grid, const OptimizerConfig& cfg, FitnessEvaluator& evaluator) {
  const int generation = grid.generation() + 1;
  const std::size_t n = grid.cells().size();
  std::vector<std::optional<StripMask>> offspring(n);

  parallel_for(n, cfg.workers, [&](std::size_t idx) {
    const int i = static_cast<int>(idx / grid.cols());
    const int j = static_cast<int>(idx % grid.cols());
    const Cell& cell = grid.at(i, j);
    StreamRng rng = cell_stream(cfg.seed, generation, i, j);

    const double r = rng.uniform();
    if (r < cfg.p_crossover) {
      const auto nbrs = neighbors(grid.rows(), grid.cols(), i, j, cfg.neighborhood);
      std::vector<double> fit;
      fit.reserve(nbrs.size());
      for (const auto& [a, b] : nbrs) fit.push_back(grid.at(a, b).fitness);
      if (const auto mate = select_mate(cell.fitness, fit, rng)) {
        const Cell& other = grid.at(nbrs[*mate].first, nbrs[*mate].second);
        offspring[idx] = crossover(cell.mask, other.mask, cell.fitness, other.fitness, rng);
      } else {
        offspring[idx] = cell.mask;
      }
    } else if (r < cfg.p_crossover + cfg.p_mutation) {
      offspring[idx] = mutate(cell.mask, cfg, rng);
    } else if (r < cfg.p_crossover + cfg.p_mutation + cfg.p_translation) {
      offspring[idx] = translate(cell.mask, cfg, rng);
    } else {
      offspring[idx] = cell.mask;
    }
  });

  std::vector<StripMask> masks;
  masks.reserve(n);
  for (auto& o : offspring) masks.push_back(std::move(*o));
  std::vector<double> fitness = score(masks, evaluator, cfg.workers);
  return make_grid(cfg, std::move(masks), std::move(fitness), generation);
}

RunResult run(FitnessEvaluator& evaluator, const OptimizerConfig& cfg) {
  cfg.validate(evaluator.input().steps());
  const std::size_t calls_before = evaluator.model_calls();
  std::vector<double> history;

  try {
    CellGrid grid = init_population(cfg, evaluator);
    const Cell* best_cell = &grid.cells()[grid.best_index()];
    StripMask best_mask = best_cell->mask;
    double best_fitness = best_cell->fitness;
    history.push_back(best_fitness);

    for (int g = 0; g < cfg.generations; ++g) {
      grid = evolve(grid, cfg, evaluator);
      const Cell& champion = grid.cells()[grid.best_index()];
      if (champion.fitness > best_fitness) {
        best_fitness = champion.fitness;
        best_mask = champion.mask;
      }
      history.push_back(best_fitness);
    }
    return RunResult{std::move(best_mask), best_fitness, std::move(history), evaluator.model_calls() - calls_before};
  } catch (const ConfigError&) {
    throw;
  } catch (const ModelError& e) {
    throw RunError(std::string("optimizer run aborted: ") + e.what(), std::move(history));
  }
}

RunResult run(const BlackBoxModel& model, const TimeSeries& x, const OptimizerConfig& cfg,
              const PerturbationSpec& spec) {
  cfg.validate(x.steps());
  FitnessEvaluator evaluator(model, x, spec);
  return run(evaluator, cfg);
}

}  // namespace cgsmask
