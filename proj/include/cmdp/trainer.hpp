#pragma once

// Tabular epsilon-greedy Q-learning on a discretized SimpleDirection with
// three ways of feeding the learner:
//   baseline  raw transitions collected at the training context;
//   cse       the same transitions enhanced to c0 + dc with a fresh sphere
//             perturbation per sample per batch;
//   ldr       whole trajectories collected in the true environment at a
//             perturbed context c0 + dc.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace cmdp {

enum class TrainMode { Baseline, Cse, Ldr };

std::string to_string(TrainMode mode);
// Throws ConfigInvalid for unknown names.
TrainMode parse_train_mode(const std::string& name);

// Uniform cells of `width` covering [lo, hi]; values outside are clipped to
// the edge cells.
struct GridSpec {
  double lo = 0.0;
  double hi = 1.0;
  double width = 1.0;

  int cells() const;
  int cell(double v) const;
  bool contains(double v) const { return v >= lo && v <= hi; }
};

struct TrainConfig {
  TrainMode mode = TrainMode::Baseline;
  double epsilon_perturb = 0.1;
  int episodes = 2000;
  double learning_rate = 0.1;
  double epsilon_greedy = 0.1;
  std::uint64_t seed = 0;
  GridSpec state_grid{-4.0, 4.0, 0.5};
  GridSpec context_grid{-0.225, 0.225, 0.05};
  double gamma = 0.9;
  int horizon = 10;
  int warmup_episodes = 10;  // uniform-random behaviour before learning
  int updates_per_episode = 32;
  int batch_size = 32;
  std::size_t buffer_capacity = 100000;

  // Throws ConfigInvalid.
  void validate() const;
  nlohmann::json to_json() const;
};

// Action index i maps to ((i / 3) - 1, (i % 3) - 1).
inline constexpr int kGridActions = 9;
Eigen::Vector2d grid_action(int index);
int grid_action_index(const Eigen::VectorXd& a);

class DiscreteQTable {
 public:
  DiscreteQTable(GridSpec state_grid, GridSpec context_grid);

  double& at(const Eigen::VectorXd& s, const Eigen::VectorXd& c, int a);
  double at(const Eigen::VectorXd& s, const Eigen::VectorXd& c, int a) const;
  double max_value(const Eigen::VectorXd& s, const Eigen::VectorXd& c) const;
  // Lowest index wins ties.
  int greedy(const Eigen::VectorXd& s, const Eigen::VectorXd& c) const;

  const GridSpec& state_grid() const { return state_grid_; }
  const GridSpec& context_grid() const { return context_grid_; }
  const std::vector<double>& values() const { return values_; }

  nlohmann::json to_json() const;
  static DiscreteQTable from_json(const nlohmann::json& j);

 private:
  std::size_t offset(const Eigen::VectorXd& s, const Eigen::VectorXd& c) const;

  GridSpec state_grid_;
  GridSpec context_grid_;
  int state_cells_;
  int context_cells_;
  std::vector<double> values_;
};

struct TrainResult {
  DiscreteQTable q;
  std::vector<double> episode_returns;  // undiscounted, behaviour policy
  double max_abs_reward = 0.0;          // over every target used in updates
};

TrainResult train(const TrainConfig& config);

struct ContextEval {
  Eigen::VectorXd c;
  double mean_return = 0.0;
  double std_error = 0.0;
  int episodes = 0;
};

struct EvalReport {
  std::vector<ContextEval> contexts;
};

// Greedy rollouts in the true environment, undiscounted, starts drawn from
// U[-1, 1]^2. Throws ContextOutOfRange for contexts outside the context grid
// and UsageError for episodes_per_context < 1.
EvalReport evaluate(const DiscreteQTable& q, std::span<const Eigen::VectorXd> contexts,
                    int episodes_per_context, std::uint64_t seed,
                    int horizon = 10);

// Default evaluation seed for a table trained with `train_seed`.
std::uint64_t evaluation_seed(std::uint64_t train_seed);

// c0 plus `directions` points evenly spaced on the circle of `radius`.
std::vector<Eigen::VectorXd> ring_contexts(const Eigen::VectorXd& c0,
                                           double radius, int directions = 8);

struct CompareRow {
  TrainMode mode;
  std::uint64_t seed;
  ContextEval eval;
};

struct ModeSummary {
  TrainMode mode;
  std::vector<double> per_seed_ring_means;
  double ring_mean = 0.0;
  double ci95_half_width = 0.0;
};

struct Comparison {
  std::vector<CompareRow> rows;
  std::vector<ModeSummary> summaries;  // baseline, cse, ldr

  const ModeSummary& summary(TrainMode mode) const;
};

// Trains every mode in `modes` for every seed (the config's mode and seed
// are overridden) and evaluates on `test_contexts`. The ring mean of a run
// averages the contexts that differ from c0 = (0, 0). Needs >= 2 seeds.
Comparison compare_modes(const TrainConfig& base,
                         std::span<const std::uint64_t> seeds,
                         std::span<const Eigen::VectorXd> test_contexts,
                         int episodes_per_context = 64,
                         std::span<const TrainMode> modes = {});

}  // namespace cmdp
