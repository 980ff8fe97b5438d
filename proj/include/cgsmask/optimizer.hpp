#ifndef CGSMASK_OPTIMIZER_HPP
#define CGSMASK_OPTIMIZER_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cgsmask/core.hpp"
#include "cgsmask/fitness.hpp"
#include "cgsmask/random.hpp"

namespace cgsmask {

enum class Neighborhood { Moore, VonNeumann };

std::string to_string(Neighborhood n);
Neighborhood parse_neighborhood(const std::string& name);

/// Cellular GA settings. Defaults are the synthetic-benchmark settings with
/// the rare-feature strip budget.
struct OptimizerConfig {
  int generations = 500;
  int grid_rows = 10;
  int grid_cols = 10;
  double p_crossover = 0.75;
  double p_mutation = 0.1;
  double p_translation = 0.1;
  Neighborhood neighborhood = Neighborhood::Moore;
  int strip_count = 14;
  int strip_len_min = 6;
  int strip_len_max = 10;
  /// Largest translation distance; 0 selects max(1, T / 10).
  int max_translation = 0;
  std::uint64_t seed = 0;
  int workers = 1;

  /// Throws ConfigError for an infeasible configuration on a series with T steps.
  void validate(Index steps) const;
  int effective_max_translation(Index steps) const;
};

struct Cell {
  StripMask mask;
  double fitness = 0.0;
};

/// m x n toroidal grid of scored masks.
class CellGrid {
 public:
  CellGrid(int rows, int cols, std::vector<Cell> cells, int generation = 0);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int generation() const { return generation_; }
  const Cell& at(int i, int j) const { return cells_[index(i, j)]; }
  const std::vector<Cell>& cells() const { return cells_; }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * cols_ + j; }

  /// Position of the fittest cell; ties resolve to the lowest row-major index.
  std::size_t best_index() const;

 private:
  int rows_;
  int cols_;
  std::vector<Cell> cells_;
  int generation_;
};

struct RunResult {
  StripMask best_mask;
  double best_fitness = 0.0;
  /// Best-so-far fitness after the initial population and after each generation.
  std::vector<double> history;
  /// Model calls made for mask evaluation (cache hits excluded).
  std::size_t evaluations = 0;
};

/// Thrown when a model failure aborts a run; carries the history so far.
class RunError : public ModelError {
 public:
  RunError(const std::string& what, std::vector<double> partial_history)
      : ModelError(what), history(std::move(partial_history)) {}

  std::vector<double> history;
};

/// RNG stream for one cell in one generation. Generation 0 is initialisation.
StreamRng cell_stream(std::uint64_t seed, int generation, int row, int col);

/// Uniform strip: feature, start and length drawn independently; the length is
/// truncated so the strip ends inside the horizon.
Strip random_strip(const OptimizerConfig& cfg, Index features, Index steps, StreamRng& rng);

/// Random masks of exactly cfg.strip_count strips, one per cell, unscored.
std::vector<StripMask> random_population(const OptimizerConfig& cfg, Index features, Index steps);

/// Random population scored by the evaluator.
CellGrid init_population(const OptimizerConfig& cfg, FitnessEvaluator& evaluator);

/// Toroidal neighbours of (i, j), excluding the cell itself and duplicates
/// that arise on grids smaller than the stencil.
std::vector<std::pair<int, int>> neighbors(int rows, int cols, int i, int j, Neighborhood scheme);

/// Fitness-proportional choice among neighbours at least as fit as the cell.
/// Returns the position in `neighbor_fitness`, or nullopt when none qualify.
/// An all-zero candidate set is sampled uniformly.
std::optional<std::size_t> select_mate(double cell_fitness, std::span<const double> neighbor_fitness, StreamRng& rng);

/// Index-wise strip crossover: strip k comes from `a` with probability
/// fa / (fa + fb), from `b` otherwise (1/2 when both are zero).
StripMask crossover(const StripMask& a, const StripMask& b, double fa, double fb, StreamRng& rng);

/// Replaces one uniformly chosen strip with a fresh random strip.
StripMask mutate(const StripMask& mask, const OptimizerConfig& cfg, StreamRng& rng);

/// Shifts one uniformly chosen strip by +/- U[1, max_translation] steps, clamped
/// to [0, T - length].
StripMask translate(const StripMask& mask, const OptimizerConfig& cfg, StreamRng& rng);

/// One synchronous generation: every offspring is built from `grid`, then scored.
CellGrid evolve(const CellGrid& grid, const OptimizerConfig& cfg, FitnessEvaluator& evaluator);

/// Full optimisation. The returned mask is the best seen in any generation.
RunResult run(FitnessEvaluator& evaluator, const OptimizerConfig& cfg);
RunResult run(const BlackBoxModel& model, const TimeSeries& x, const OptimizerConfig& cfg,
              const PerturbationSpec& spec);

}  // namespace cgsmask

#endif  // CGSMASK_OPTIMIZER_HPP
