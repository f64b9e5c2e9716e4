#include "cmdp/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/distributions/students_t.hpp>

#include "cmdp/cse.hpp"
#include "cmdp/envs.hpp"
#include "cmdp/errors.hpp"
#include "cmdp/parallel.hpp"
#include "cmdp/random.hpp"

namespace cmdp {

namespace {

// Stream ids below the per-run seed.
constexpr std::uint64_t kBehaviourStream = 0;
constexpr std::uint64_t kReplayStream = 1;
constexpr std::uint64_t kPerturbStream = 2;

nlohmann::json grid_json(const GridSpec& g) {
  return {{"lo", g.lo}, {"hi", g.hi}, {"width", g.width}};
}

GridSpec grid_from_json(const nlohmann::json& j) {
  return {j.at("lo").get<double>(), j.at("hi").get<double>(),
          j.at("width").get<double>()};
}

// Perturbation of radius eps; eps == 0 still consumes the draws so the
// stream position does not depend on eps.
Eigen::VectorXd perturbation(double eps, Rng& rng) {
  return sample_sphere(2, 1.0, rng) * eps;
}

int epsilon_greedy(const DiscreteQTable& q, const Eigen::VectorXd& s,
                   const Eigen::VectorXd& c, double eps, Rng& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<int> any(0, kGridActions - 1);
  if (u01(rng) < eps) return any(rng);
  // Random tie-break so untrained cells still explore.
  const double best = q.max_value(s, c);
  std::array<int, kGridActions> ties{};
  int n = 0;
  for (int a = 0; a < kGridActions; ++a) {
    if (q.at(s, c, a) == best) ties[n++] = a;
  }
  if (n == 1) return ties[0];
  std::uniform_int_distribution<int> pick(0, n - 1);
  return ties[pick(rng)];
}

}  // namespace

std::string to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::Baseline:
      return "baseline";
    case TrainMode::Cse:
      return "cse";
    case TrainMode::Ldr:
      return "ldr";
  }
  return "unknown";
}

TrainMode parse_train_mode(const std::string& name) {
  if (name == "baseline") return TrainMode::Baseline;
  if (name == "cse") return TrainMode::Cse;
  if (name == "ldr") return TrainMode::Ldr;
  throw ConfigInvalid("unknown training mode '" + name + "'");
}

int GridSpec::cells() const {
  return std::max(1, static_cast<int>(std::ceil((hi - lo) / width - 1e-9)));
}

int GridSpec::cell(double v) const {
  const int idx = static_cast<int>(std::floor((v - lo) / width));
  return std::clamp(idx, 0, cells() - 1);
}

void TrainConfig::validate() const {
  auto bad = [](const std::string& what) { throw ConfigInvalid(what); };
  if (!(learning_rate >= 0.0 && learning_rate <= 1.0)) {
    bad("learning_rate must lie in [0, 1]");
  }
  if (!(epsilon_greedy >= 0.0 && epsilon_greedy <= 1.0)) {
    bad("epsilon_greedy must lie in [0, 1]");
  }
  if (!(epsilon_perturb >= 0.0)) bad("epsilon_perturb must be >= 0");
  if (!(gamma > 0.0 && gamma <= 1.0)) bad("gamma must lie in (0, 1]");
  if (episodes < 0 || warmup_episodes < 0) bad("episode counts must be >= 0");
  if (horizon < 1) bad("horizon must be >= 1");
  if (updates_per_episode < 0 || batch_size < 1) {
    bad("need updates_per_episode >= 0 and batch_size >= 1");
  }
  if (buffer_capacity < 1) bad("buffer_capacity must be >= 1");
  for (const GridSpec* g : {&state_grid, &context_grid}) {
    if (!(g->width > 0.0) || !(g->hi > g->lo)) bad("invalid grid");
  }
  if (!context_grid.contains(0.0)) bad("context grid must contain c0 = 0");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"mode", to_string(mode)},
          {"epsilon_perturb", epsilon_perturb},
          {"episodes", episodes},
          {"learning_rate", learning_rate},
          {"epsilon_greedy", epsilon_greedy},
          {"seed", seed},
          {"state_grid", grid_json(state_grid)},
          {"context_grid", grid_json(context_grid)},
          {"gamma", gamma},
          {"horizon", horizon},
          {"warmup_episodes", warmup_episodes},
          {"updates_per_episode", updates_per_episode},
          {"batch_size", batch_size},
          {"buffer_capacity", buffer_capacity}};
}

Eigen::Vector2d grid_action(int index) {
  return {static_cast<double>(index / 3 - 1),
          static_cast<double>(index % 3 - 1)};
}

int grid_action_index(const Eigen::VectorXd& a) {
  const int x = static_cast<int>(std::lround(a(0))) + 1;
  const int y = static_cast<int>(std::lround(a(1))) + 1;
  if (x < 0 || x > 2 || y < 0 || y > 2) {
    throw UsageError("action is not on the {-1, 0, 1}^2 grid");
  }
  return 3 * x + y;
}

DiscreteQTable::DiscreteQTable(GridSpec state_grid, GridSpec context_grid)
    : state_grid_(state_grid),
      context_grid_(context_grid),
      state_cells_(state_grid.cells()),
      context_cells_(context_grid.cells()),
      values_(static_cast<std::size_t>(state_cells_) * state_cells_ *
                  context_cells_ * context_cells_ * kGridActions,
              0.0) {}

std::size_t DiscreteQTable::offset(const Eigen::VectorXd& s,
                                   const Eigen::VectorXd& c) const {
  const std::size_t sx = state_grid_.cell(s(0));
  const std::size_t sy = state_grid_.cell(s(1));
  const std::size_t cx = context_grid_.cell(c(0));
  const std::size_t cy = context_grid_.cell(c(1));
  const std::size_t sc = state_cells_;
  const std::size_t cc = context_cells_;
  return (((sx * sc + sy) * cc + cx) * cc + cy) * kGridActions;
}

double& DiscreteQTable::at(const Eigen::VectorXd& s, const Eigen::VectorXd& c,
                           int a) {
  return values_[offset(s, c) + a];
}

double DiscreteQTable::at(const Eigen::VectorXd& s, const Eigen::VectorXd& c,
                          int a) const {
  return values_[offset(s, c) + a];
}

double DiscreteQTable::max_value(const Eigen::VectorXd& s,
                                 const Eigen::VectorXd& c) const {
  const auto* row = values_.data() + offset(s, c);
  return *std::max_element(row, row + kGridActions);
}

int DiscreteQTable::greedy(const Eigen::VectorXd& s,
                           const Eigen::VectorXd& c) const {
  const auto* row = values_.data() + offset(s, c);
  return static_cast<int>(std::max_element(row, row + kGridActions) - row);
}

nlohmann::json DiscreteQTable::to_json() const {
  return {{"state_grid", grid_json(state_grid_)},
          {"context_grid", grid_json(context_grid_)},
          {"actions", kGridActions},
          {"layout", "state_x, state_y, context_x, context_y, action"},
          {"values", values_}};
}

DiscreteQTable DiscreteQTable::from_json(const nlohmann::json& j) {
  DiscreteQTable q(grid_from_json(j.at("state_grid")),
                   grid_from_json(j.at("context_grid")));
  auto values = j.at("values").get<std::vector<double>>();
  if (values.size() != q.values_.size()) {
    throw UsageError("Q table has the wrong number of entries");
  }
  q.values_ = std::move(values);
  return q;
}

TrainResult train(const TrainConfig& config) {
  config.validate();
  const SimpleDirection env;
  const Eigen::Vector2d c0 = Eigen::Vector2d::Zero();
  Rng behaviour = make_rng(config.seed, kBehaviourStream);
  Rng replay_rng = make_rng(config.seed, kReplayStream);
  Rng perturb_rng = make_rng(config.seed, kPerturbStream);
  std::uniform_int_distribution<int> any_action(0, kGridActions - 1);

  TrainResult out{DiscreteQTable(config.state_grid, config.context_grid), {}, 0.0};
  DiscreteQTable& q = out.q;
  ReplayBuffer buffer(config.buffer_capacity);
  const int total = config.warmup_episodes + config.episodes;
  out.episode_returns.reserve(total);

  for (int ep = 0; ep < total; ++ep) {
    const bool warmup = ep < config.warmup_episodes;
    Eigen::VectorXd c_collect = c0;
    if (config.mode == TrainMode::Ldr) {
      c_collect = c0 + perturbation(config.epsilon_perturb, perturb_rng);
    }
    Eigen::VectorXd s = env.sample_start(behaviour);
    double ret = 0.0;
    for (int t = 0; t < config.horizon; ++t) {
      const int a_idx =
          warmup ? any_action(behaviour)
                 : epsilon_greedy(q, s, c_collect, config.epsilon_greedy,
                                  behaviour);
      const Eigen::VectorXd a = grid_action(a_idx);
      const EnvStepResult step = env.step(s, a, c_collect);
      buffer.push(make_sample(s, a, c_collect, step));
      ret += step.reward;
      s = step.next_state;
    }
    out.episode_returns.push_back(ret);
    if (warmup) continue;

    for (int u = 0; u < config.updates_per_episode; ++u) {
      for (std::size_t i : buffer.sample_indices(config.batch_size, replay_rng)) {
        const ContextSample& x = buffer.at(i);
        Eigen::VectorXd c = x.c;
        double r = x.r;
        Eigen::VectorXd s_next = x.s_next;
        if (config.mode == TrainMode::Cse) {
          const Eigen::VectorXd dc =
              perturbation(config.epsilon_perturb, perturb_rng);
          const EnhancedSample e = cse_augment(x, dc);
          c = x.c + dc;
          r = e.r_bar;
          s_next = e.s_next_bar;
        }
        out.max_abs_reward = std::max(out.max_abs_reward, std::abs(r));
        const int a_idx = grid_action_index(x.a);
        const double target = r + config.gamma * q.max_value(s_next, c);
        double& entry = q.at(x.s, c, a_idx);
        entry += config.learning_rate * (target - entry);
      }
    }
  }
  return out;
}

EvalReport evaluate(const DiscreteQTable& q,
                    std::span<const Eigen::VectorXd> contexts,
                    int episodes_per_context, std::uint64_t seed,
                    int horizon) {
  if (episodes_per_context < 1) {
    throw UsageError("need at least one evaluation episode per context");
  }
  const SimpleDirection env;
  for (const auto& c : contexts) {
    if (c.size() != 2 || !q.context_grid().contains(c(0)) ||
        !q.context_grid().contains(c(1))) {
      throw ContextOutOfRange("evaluation context outside the context grid");
    }
  }
  EvalReport report;
  report.contexts.resize(contexts.size());
  for (std::size_t k = 0; k < contexts.size(); ++k) {
    const Eigen::VectorXd& c = contexts[k];
    // Same start states for every context and every table under one seed.
    Rng rng = make_rng(seed, 0);
    double mean = 0.0, m2 = 0.0;
    for (int e = 0; e < episodes_per_context; ++e) {
      Eigen::VectorXd s = env.sample_start(rng);
      double ret = 0.0;
      for (int t = 0; t < horizon; ++t) {
        const EnvStepResult step = env.step(s, grid_action(q.greedy(s, c)), c);
        ret += step.reward;
        s = step.next_state;
      }
      const double delta = ret - mean;
      mean += delta / (e + 1);
      m2 += delta * (ret - mean);
    }
    ContextEval& ce = report.contexts[k];
    ce.c = c;
    ce.mean_return = mean;
    ce.episodes = episodes_per_context;
    ce.std_error = episodes_per_context > 1
                       ? std::sqrt(m2 / (episodes_per_context - 1) /
                                   episodes_per_context)
                       : 0.0;
  }
  return report;
}

std::uint64_t evaluation_seed(std::uint64_t train_seed) {
  return derive_seed(train_seed, 0xE7A1);
}

std::vector<Eigen::VectorXd> ring_contexts(const Eigen::VectorXd& c0,
                                           double radius, int directions) {
  std::vector<Eigen::VectorXd> out;
  out.push_back(c0);
  for (int k = 0; k < directions; ++k) {
    const double th = 2.0 * std::numbers::pi * k / directions;
    Eigen::VectorXd c = c0;
    c(0) += radius * std::cos(th);
    c(1) += radius * std::sin(th);
    out.push_back(c);
  }
  return out;
}

const ModeSummary& Comparison::summary(TrainMode mode) const {
  for (const auto& s : summaries) {
    if (s.mode == mode) return s;
  }
  throw UsageError("mode not present in comparison");
}

Comparison compare_modes(const TrainConfig& base,
                         std::span<const std::uint64_t> seeds,
                         std::span<const Eigen::VectorXd> test_contexts,
                         int episodes_per_context,
                         std::span<const TrainMode> modes) {
  if (seeds.size() < 2) throw UsageError("compare needs at least two seeds");
  static constexpr std::array<TrainMode, 3> kAll{
      TrainMode::Baseline, TrainMode::Cse, TrainMode::Ldr};
  if (modes.empty()) modes = kAll;

  const std::size_t runs = modes.size() * seeds.size();
  std::vector<EvalReport> evals(runs);
  parallel_for(runs, [&](std::size_t i) {
    TrainConfig cfg = base;
    cfg.mode = modes[i / seeds.size()];
    cfg.seed = seeds[i % seeds.size()];
    const TrainResult res = train(cfg);
    evals[i] = evaluate(res.q, test_contexts, episodes_per_context,
                        evaluation_seed(cfg.seed), cfg.horizon);
  });

  Comparison cmp;
  for (std::size_t m = 0; m < modes.size(); ++m) {
    ModeSummary sum{modes[m], {}, 0.0, 0.0};
    for (std::size_t k = 0; k < seeds.size(); ++k) {
      const EvalReport& rep = evals[m * seeds.size() + k];
      double ring = 0.0;
      int n = 0;
      for (const auto& ce : rep.contexts) {
        cmp.rows.push_back({modes[m], seeds[k], ce});
        if (ce.c.norm() > 0.0) {
          ring += ce.mean_return;
          ++n;
        }
      }
      sum.per_seed_ring_means.push_back(n > 0 ? ring / n : 0.0);
    }
    const auto& v = sum.per_seed_ring_means;
    const double nn = static_cast<double>(v.size());
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= nn;
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= (nn - 1.0);
    const boost::math::students_t dist(nn - 1.0);
    sum.ring_mean = mean;
    sum.ci95_half_width =
        boost::math::quantile(boost::math::complement(dist, 0.025)) *
        std::sqrt(var / nn);
    cmp.summaries.push_back(std::move(sum));
  }
  return cmp;
}

}  // namespace cmdp
