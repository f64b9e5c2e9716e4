#include "cmdp/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cmdp/bounds.hpp"
#include "cmdp/cliffwalker.hpp"
#include "cmdp/cse.hpp"
#include "cmdp/envs.hpp"
#include "cmdp/errors.hpp"
#include "cmdp/experiments.hpp"
#include "cmdp/io.hpp"
#include "cmdp/parallel.hpp"
#include "cmdp/random.hpp"
#include "cmdp/trainer.hpp"

namespace cmdp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// What a subcommand produced: data files keyed by file name, the canonical
// parameter set (enough to rerun) and the exit code.
struct RunOutput {
  std::map<std::string, std::string> files;
  int exit_code = kExitOk;
};

using Params = std::map<std::string, std::string>;

struct Subcommand {
  std::string name;
  CLI::App* app = nullptr;
  std::function<Params()> params;
  std::function<RunOutput(std::ostream&, std::ostream&)> run;
  std::function<std::uint64_t()> seed;
};

std::string fmt(double v) { return format_double(v); }

std::string seeds_text(const std::vector<std::uint64_t>& seeds) {
  std::string s;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (i > 0) s += ',';
    s += std::to_string(seeds[i]);
  }
  return s;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json fit_json(const std::optional<LineFit>& fit) {
  if (!fit) {
    return {{"slope", nullptr}, {"intercept", nullptr},
            {"r_squared", nullptr}, {"fit_points", 0}};
  }
  return {{"slope", fit->slope},
          {"intercept", fit->intercept},
          {"r_squared", fit->r_squared},
          {"fit_points", fit->points}};
}

// ---------------------------------------------------------------------------

struct CliffwalkScaling {
  int rows = 5;
  int cols = 6;
  double c0 = 0.1;
  double gamma = 0.9;
  std::string variant = "a";
  int n_points = 100;
  int fit_points = 10;
  std::string mode = "eval";
  double dc_min = 1e-4;
  double dc_max = 1e-1;
  std::string direction = "up";
  double policy_epsilon = 0.05;

  void add(CLI::App& app) {
    app.add_option("--rows", rows);
    app.add_option("--cols", cols);
    app.add_option("--c0", c0);
    app.add_option("--gamma", gamma);
    app.add_option("--variant", variant)->check(CLI::IsMember({"a", "b"}));
    app.add_option("--n-points", n_points);
    app.add_option("--fit-points", fit_points);
    app.add_option("--mode", mode)->check(CLI::IsMember({"eval", "control"}));
    app.add_option("--dc-min", dc_min);
    app.add_option("--dc-max", dc_max);
    app.add_option("--direction", direction)
        ->check(CLI::IsMember({"up", "down"}));
    app.add_option("--policy-epsilon", policy_epsilon);
  }

  Params params() const {
    return {{"rows", std::to_string(rows)},
            {"cols", std::to_string(cols)},
            {"c0", fmt(c0)},
            {"gamma", fmt(gamma)},
            {"variant", variant},
            {"n-points", std::to_string(n_points)},
            {"fit-points", std::to_string(fit_points)},
            {"mode", mode},
            {"dc-min", fmt(dc_min)},
            {"dc-max", fmt(dc_max)},
            {"direction", direction},
            {"policy-epsilon", fmt(policy_epsilon)}};
  }

  RunOutput run(std::ostream& out, std::ostream&) const {
    if (n_points < 1 || fit_points < 0) {
      throw UsageError("need --n-points >= 1 and --fit-points >= 0");
    }
    if (!(dc_min > 0.0) || !(dc_max >= dc_min)) {
      throw UsageError("need 0 < --dc-min <= --dc-max");
    }
    if (!(policy_epsilon >= 0.0 && policy_epsilon <= 1.0)) {
      throw UsageError("--policy-epsilon must lie in [0, 1]");
    }
    const TabularCMDP mdp = build_cliffwalker(
        rows, cols, variant == "a" ? CliffReward::A : CliffReward::B, c0,
        gamma);
    const TabularPolicy pi = softened_optimal_policy(mdp, policy_epsilon);
    const double sign = direction == "up" ? 1.0 : -1.0;
    std::vector<Context> dcs{Context::Zero(1)};
    for (double m : log_spaced(dc_min, dc_max, n_points)) {
      dcs.push_back(Context::Constant(1, sign * m));
    }
    const ScalingResult res = error_scaling_experiment(
        mdp, pi, dcs,
        mode == "eval" ? SolveMode::PolicyEval : SolveMode::Control,
        fit_points);

    CsvTable csv({"dc_norm", "q_error"});
    for (const auto& p : res.points) csv.cell(p.dc_norm).cell(p.q_error).end_row();
    json summary = fit_json(res.fit);
    summary["monotone_in_fit_range"] = res.monotone_in_fit_range;
    summary["zero_perturbation_error"] = res.points.front().q_error;
    if (res.fit) {
      out << "slope " << fmt(res.fit->slope) << " r2 "
          << fmt(res.fit->r_squared) << "\n";
    }
    if (!res.monotone_in_fit_range) {
      out << "note: errors not monotone over the fitted range\n";
    }
    return {{{"scaling.csv", csv.str()}, {"summary.json", dump(summary)}}};
  }
};

// ---------------------------------------------------------------------------

struct SimpledirError {
  int h = 10;
  double gamma = 0.9;
  std::string dc_grid = "log:1e-4:1e-1:50";
  double angle = 0.5;
  double s0x = 0.3;
  double s0y = -0.2;

  void add(CLI::App& app) {
    app.add_option("--h", h, "horizon");
    app.add_option("--gamma", gamma);
    app.add_option("--dc-grid", dc_grid);
    app.add_option("--angle", angle, "direction of dc in radians");
    app.add_option("--s0x", s0x);
    app.add_option("--s0y", s0y);
  }

  Params params() const {
    return {{"h", std::to_string(h)}, {"gamma", fmt(gamma)},
            {"dc-grid", dc_grid},     {"angle", fmt(angle)},
            {"s0x", fmt(s0x)},        {"s0y", fmt(s0y)}};
  }

  RunOutput run(std::ostream& out, std::ostream&) const {
    if (h < 1) throw UsageError("--h must be >= 1");
    if (!(gamma > 0.0 && gamma < 1.0)) throw UsageError("--gamma must lie in (0, 1)");
    std::vector<double> mags{0.0};
    for (double m : parse_grid(dc_grid)) mags.push_back(m);

    const SimpleDirection env;
    const DeterministicPolicy pi = [](const Eigen::VectorXd&, int) {
      return Eigen::VectorXd(Eigen::Vector2d(1.0, 1.0));
    };
    const Eigen::VectorXd s0 = Eigen::Vector2d(s0x, s0y);
    const Eigen::VectorXd c0 = env.spec().train_context;
    const Eigen::Vector2d dir(std::cos(angle), std::sin(angle));
    const double geom = (1.0 - std::pow(gamma, h)) / (1.0 - gamma);

    CsvTable csv({"dc_norm", "v_error", "closed_form_error"});
    std::vector<double> lx, ly;
    double max_dev = 0.0;
    for (double m : mags) {
      const Eigen::VectorXd dc = m * dir;
      const double v_true = rollout_return(env, pi, s0, c0 + dc, h, gamma);
      const double v_ce = enhanced_rollout_value(env, pi, s0, c0, dc, h, gamma);
      const double err = v_true - v_ce;
      const double closed = dc.squaredNorm() * geom;
      max_dev = std::max(max_dev, std::abs(err - closed));
      csv.cell(dc.norm()).cell(err).cell(closed).end_row();
      if (m > 0.0 && err != 0.0) {
        lx.push_back(std::log(dc.norm()));
        ly.push_back(std::log(std::abs(err)));
      }
    }
    std::optional<LineFit> fit;
    if (lx.size() >= 2) fit = fit_line(lx, ly);
    json summary = fit_json(fit);
    summary["max_abs_deviation"] = max_dev;
    if (fit) out << "slope " << fmt(fit->slope) << "\n";
    out << "max |v_error - closed_form_error| " << fmt(max_dev) << "\n";
    return {{{"errors.csv", csv.str()}, {"summary.json", dump(summary)}}};
  }
};

// ---------------------------------------------------------------------------

struct PendulumGradcheck {
  int steps = 50;
  double h = 1e-5;
  int trials = 100;
  std::uint64_t seed = 0;
  double dt = 0.02;
  double tolerance = 1e-3;

  void add(CLI::App& app) {
    app.add_option("--steps", steps);
    app.add_option("--h", h, "finite-difference step");
    app.add_option("--trials", trials);
    app.add_option("--seed", seed);
    app.add_option("--dt", dt);
    app.add_option("--tolerance", tolerance);
  }

  Params params() const {
    return {{"steps", std::to_string(steps)}, {"h", fmt(h)},
            {"trials", std::to_string(trials)}, {"seed", std::to_string(seed)},
            {"dt", fmt(dt)},                    {"tolerance", fmt(tolerance)}};
  }

  struct Trial {
    Eigen::Vector2d s0;
    Eigen::Vector4d c;
    std::vector<double> torques;
    double rel_error = 0.0;
  };

  // Trial 0 sits at the goal equilibrium with zero torque.
  Trial make_trial(int k, const PendulumConfig& cfg) const {
    Trial t;
    t.torques.assign(steps, 0.0);
    if (k == 0) {
      t.s0.setZero();
      t.c << 2.0, 1.0, 1.0, 0.0;
      return t;
    }
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(k));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double g = 2.0 + 0.5 * u(rng);
    const double m = 1.0 + 0.3 * u(rng);
    const double l = 1.0 + 0.3 * u(rng);
    const double tau = 0.4 * m * g * l * u(rng);
    t.c << g, m, l, tau;
    t.s0 << std::numbers::pi * u(rng), u(rng);
    for (double& x : t.torques) x = cfg.u_max * u(rng);
    return t;
  }

  static double rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& fd) {
    const double scale = std::max({a.norm(), fd.norm(), 1e-8});
    const double diff = (a - fd).norm();
    return diff == 0.0 ? 0.0 : diff / scale;
  }

  RunOutput run(std::ostream& out, std::ostream& err) const {
    if (!(h > 0.0)) throw UsageError("--h must be > 0");
    if (steps < 1 || trials < 1) throw UsageError("need --steps, --trials >= 1");
    if (!(dt > 0.0)) throw UsageError("--dt must be > 0");
    PendulumConfig cfg;
    cfg.dt = dt;

    std::vector<Trial> ts(trials);
    parallel_for(ts.size(), [&](std::size_t k) {
      Trial t = make_trial(static_cast<int>(k), cfg);
      const PendulumRollout base = pendulum_rollout(t.s0, t.torques, t.c, cfg);
      Eigen::Matrix<double, 3, 4> analytic, fd;
      analytic.topRows<2>() = base.final_sens;
      analytic.row(2) = base.total_reward_grad.transpose();
      for (int j = 0; j < 4; ++j) {
        Eigen::Vector4d cp = t.c, cm = t.c;
        cp(j) += h;
        cm(j) -= h;
        const PendulumRollout p = pendulum_rollout(t.s0, t.torques, cp, cfg);
        const PendulumRollout q = pendulum_rollout(t.s0, t.torques, cm, cfg);
        fd.block<2, 1>(0, j) = (p.final_state - q.final_state) / (2.0 * h);
        fd(2, j) = (p.total_reward - q.total_reward) / (2.0 * h);
      }
      t.rel_error = std::max(rel(analytic.topRows<2>(), fd.topRows<2>()),
                             rel(analytic.row(2), fd.row(2)));
      ts[k] = std::move(t);
    });

    double max_rel = 0.0, sum = 0.0;
    std::size_t worst = 0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
      sum += ts[k].rel_error;
      if (ts[k].rel_error > max_rel) {
        max_rel = ts[k].rel_error;
        worst = k;
      }
    }
    const Trial& w = ts[worst];
    json report = {{"max_rel_error", max_rel},
                   {"mean_rel_error", sum / trials},
                   {"trials", trials},
                   {"tolerance", tolerance},
                   {"equilibrium_rel_error", ts[0].rel_error},
                   {"worst_trial",
                    {{"index", worst},
                     {"theta0", w.s0(0)},
                     {"theta_dot0", w.s0(1)},
                     {"context", {w.c(0), w.c(1), w.c(2), w.c(3)}}}}};
    RunOutput res{{{"report.json", dump(report)}}};
    out << "max_rel_error " << fmt(max_rel) << "\n";
    if (!(max_rel < tolerance)) {
      err << "gradcheck failed: trial " << worst << " theta0 " << fmt(w.s0(0))
          << " theta_dot0 " << fmt(w.s0(1)) << " context (" << fmt(w.c(0))
          << ", " << fmt(w.c(1)) << ", " << fmt(w.c(2)) << ", " << fmt(w.c(3))
          << ")\n";
      res.exit_code = kExitCheckFailed;
    }
    return res;
  }
};

// ---------------------------------------------------------------------------

struct BoundsCheck {
  int theorem = 1;
  int trials = 200;
  int states = 5;
  int actions = 3;
  std::uint64_t seed = 0;
  double gamma = std::numeric_limits<double>::quiet_NaN();
  int max_attempts = 0;

  void add(CLI::App& app) {
    app.add_option("--theorem", theorem)->check(CLI::IsMember({1, 3}));
    app.add_option("--trials", trials);
    app.add_option("--states", states);
    app.add_option("--actions", actions);
    app.add_option("--seed", seed);
    app.add_option("--gamma", gamma, "fixed discount (random per trial if unset)");
    app.add_option("--max-attempts", max_attempts);
  }

  Params params() const {
    Params p{{"theorem", std::to_string(theorem)},
             {"trials", std::to_string(trials)},
             {"states", std::to_string(states)},
             {"actions", std::to_string(actions)},
             {"seed", std::to_string(seed)},
             {"max-attempts", std::to_string(max_attempts)}};
    if (!std::isnan(gamma)) p["gamma"] = fmt(gamma);
    return p;
  }

  RunOutput run(std::ostream& out, std::ostream& err) const {
    if (trials < 1 || states < 1 || actions < 1 || max_attempts < 0) {
      throw UsageError("need --trials, --states, --actions >= 1");
    }
    CertificationOptions opts;
    opts.trials = trials;
    opts.n_states = states;
    opts.n_actions = actions;
    opts.seed = seed;
    opts.max_attempts = max_attempts;
    if (!std::isnan(gamma)) {
      if (!(gamma > 0.0 && gamma < 1.0)) throw UsageError("--gamma must lie in (0, 1)");
      opts.gamma = gamma;
    }
    RunOutput res;
    try {
      const CertificationReport rep =
          theorem == 1 ? certify_theorem1(opts) : certify_theorem3(opts);
      res.files["report.json"] = dump(rep.to_json());
      out << rep.passed << "/" << rep.trials << " passed, "
          << rep.discarded_premise << " discarded by premise\n";
    } catch (const BoundViolated& e) {
      json report = {{"theorem", theorem}, {"seed", seed}, {"violation", e.details()}};
      res.files["report.json"] = dump(report);
      err << e.what() << "\n" << e.details() << "\n";
      res.exit_code = kExitCheckFailed;
    }
    return res;
  }
};

// ---------------------------------------------------------------------------

struct TrainOptions {
  std::string env = "simpledir";
  double epsilon_perturb = 0.1;
  int episodes = 2000;
  double learning_rate = 0.1;
  double epsilon_greedy = 0.1;
  double gamma = 0.9;
  int warmup = 10;
  int updates_per_episode = 32;
  int batch_size = 32;
  std::string seeds = "0";

  void add(CLI::App& app) {
    app.add_option("--env", env)->check(CLI::IsMember({"simpledir"}));
    app.add_option("--epsilon-perturb", epsilon_perturb);
    app.add_option("--episodes", episodes);
    app.add_option("--learning-rate", learning_rate);
    app.add_option("--epsilon-greedy", epsilon_greedy);
    app.add_option("--gamma", gamma);
    app.add_option("--warmup", warmup);
    app.add_option("--updates-per-episode", updates_per_episode);
    app.add_option("--batch-size", batch_size);
    app.add_option("--seeds", seeds, "e.g. 0..9 or 1,4,7");
  }

  void put(Params& p) const {
    p["env"] = env;
    p["epsilon-perturb"] = fmt(epsilon_perturb);
    p["episodes"] = std::to_string(episodes);
    p["learning-rate"] = fmt(learning_rate);
    p["epsilon-greedy"] = fmt(epsilon_greedy);
    p["gamma"] = fmt(gamma);
    p["warmup"] = std::to_string(warmup);
    p["updates-per-episode"] = std::to_string(updates_per_episode);
    p["batch-size"] = std::to_string(batch_size);
    p["seeds"] = seeds_text(parse_seed_list(seeds));
  }

  TrainConfig config() const {
    TrainConfig c;
    c.epsilon_perturb = epsilon_perturb;
    c.episodes = episodes;
    c.learning_rate = learning_rate;
    c.epsilon_greedy = epsilon_greedy;
    c.gamma = gamma;
    c.warmup_episodes = warmup;
    c.updates_per_episode = updates_per_episode;
    c.batch_size = batch_size;
    c.validate();
    return c;
  }
};

struct EvalOptions {
  double radius = 0.1;
  int directions = 8;
  int episodes = 64;

  void add(CLI::App& app) {
    app.add_option("--radius", radius, "test ring radius around c0");
    app.add_option("--directions", directions);
    app.add_option("--eval-episodes", episodes, "episodes per context");
  }

  void put(Params& p) const {
    p["radius"] = fmt(radius);
    p["directions"] = std::to_string(directions);
    p["eval-episodes"] = std::to_string(episodes);
  }

  std::vector<Eigen::VectorXd> contexts() const {
    if (directions < 1) throw UsageError("--directions must be >= 1");
    if (!(radius >= 0.0)) throw UsageError("--radius must be >= 0");
    return ring_contexts(Eigen::Vector2d::Zero(), radius, directions);
  }
};

std::string q_file_name(TrainMode mode, std::uint64_t seed) {
  return "q_" + to_string(mode) + "_seed" + std::to_string(seed) + ".json";
}

void eval_rows(CsvTable& csv, TrainMode mode, std::uint64_t seed,
               const EvalReport& rep) {
  for (const auto& ce : rep.contexts) {
    csv.cell(to_string(mode))
        .cell(seed)
        .cell(ce.c(0))
        .cell(ce.c(1))
        .cell(ce.mean_return)
        .cell(ce.std_error)
        .end_row();
  }
}

const std::vector<std::string> kEvalHeader{"mode",      "seed",        "context_x",
                                           "context_y", "mean_return", "stderr"};

struct Train {
  TrainOptions t;
  std::string mode = "baseline";

  void add(CLI::App& app) {
    t.add(app);
    app.add_option("--mode", mode);
  }

  Params params() const {
    Params p{{"mode", mode}};
    t.put(p);
    return p;
  }

  RunOutput run(std::ostream& out, std::ostream&) const {
    const TrainMode m = parse_train_mode(mode);
    const auto seeds = parse_seed_list(t.seeds);
    TrainConfig base = t.config();
    base.mode = m;
    std::vector<std::optional<TrainResult>> results(seeds.size());
    parallel_for(seeds.size(), [&](std::size_t i) {
      TrainConfig cfg = base;
      cfg.seed = seeds[i];
      results[i] = train(cfg);
    });
    RunOutput res;
    CsvTable curve({"mode", "seed", "episode", "return"});
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      const TrainResult& r = *results[i];
      for (std::size_t e = 0; e < r.episode_returns.size(); ++e) {
        curve.cell(mode)
            .cell(seeds[i])
            .cell(static_cast<std::int64_t>(e))
            .cell(r.episode_returns[e])
            .end_row();
      }
      json q = r.q.to_json();
      q["config"] = base.to_json();
      q["config"]["seed"] = seeds[i];
      res.files[q_file_name(m, seeds[i])] = q.dump() + "\n";
    }
    res.files["learning_curve.csv"] = curve.str();
    out << "trained " << seeds.size() << " " << mode << " table(s)\n";
    return res;
  }
};

struct Eval {
  std::string q_dir;
  std::string mode = "baseline";
  std::string seeds = "0";
  EvalOptions e;

  void add(CLI::App& app) {
    app.add_option("--q-dir", q_dir, "directory written by train")->required();
    app.add_option("--mode", mode);
    app.add_option("--seeds", seeds);
    e.add(app);
  }

  Params params() const {
    Params p{{"q-dir", fs::absolute(q_dir).lexically_normal().string()},
             {"mode", mode},
             {"seeds", seeds_text(parse_seed_list(seeds))}};
    e.put(p);
    return p;
  }

  RunOutput run(std::ostream& out, std::ostream&) const {
    const TrainMode m = parse_train_mode(mode);
    const auto ctx = e.contexts();
    CsvTable csv(kEvalHeader);
    for (std::uint64_t s : parse_seed_list(seeds)) {
      json j;
      try {
        j = json::parse(read_file(fs::path(q_dir) / q_file_name(m, s)));
      } catch (const json::exception& ex) {
        throw UsageError(std::string("bad Q table: ") + ex.what());
      }
      const DiscreteQTable q = DiscreteQTable::from_json(j);
      const int horizon = j.contains("config") ? j["config"].value("horizon", 10) : 10;
      eval_rows(csv, m, s, evaluate(q, ctx, e.episodes, evaluation_seed(s), horizon));
    }
    out << "evaluated " << ctx.size() << " contexts\n";
    return {{{"eval.csv", csv.str()}}};
  }
};

struct Compare {
  TrainOptions t;
  EvalOptions e;
  std::string modes = "baseline,cse,ldr";

  Compare() { t.seeds = "0..9"; }

  void add(CLI::App& app) {
    t.add(app);
    e.add(app);
    app.add_option("--modes", modes, "comma separated subset of baseline,cse,ldr");
  }

  std::vector<TrainMode> mode_list() const {
    std::vector<TrainMode> out;
    std::stringstream ss(modes);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_train_mode(item));
    if (out.empty()) throw UsageError("--modes is empty");
    return out;
  }

  Params params() const {
    Params p;
    t.put(p);
    e.put(p);
    std::string m;
    for (TrainMode x : mode_list()) m += (m.empty() ? "" : ",") + to_string(x);
    p["modes"] = m;
    return p;
  }

  RunOutput run(std::ostream& out, std::ostream&) const {
    const auto seeds = parse_seed_list(t.seeds);
    const auto ms = mode_list();
    const auto ctx = e.contexts();
    const Comparison cmp = compare_modes(t.config(), seeds, ctx, e.episodes, ms);

    CsvTable rows(kEvalHeader);
    for (const auto& r : cmp.rows) {
      rows.cell(to_string(r.mode))
          .cell(r.seed)
          .cell(r.eval.c(0))
          .cell(r.eval.c(1))
          .cell(r.eval.mean_return)
          .cell(r.eval.std_error)
          .end_row();
    }
    CsvTable summary({"mode", "n_seeds", "ring_mean", "ci95_low", "ci95_high",
                      "ci95_half_width"});
    json js = json::array();
    for (const auto& s : cmp.summaries) {
      summary.cell(to_string(s.mode))
          .cell(static_cast<std::int64_t>(s.per_seed_ring_means.size()))
          .cell(s.ring_mean)
          .cell(s.ring_mean - s.ci95_half_width)
          .cell(s.ring_mean + s.ci95_half_width)
          .cell(s.ci95_half_width)
          .end_row();
      js.push_back({{"mode", to_string(s.mode)},
                    {"ring_mean", s.ring_mean},
                    {"ci95_half_width", s.ci95_half_width},
                    {"per_seed_ring_means", s.per_seed_ring_means}});
      out << to_string(s.mode) << " ring mean " << fmt(s.ring_mean) << " +- "
          << fmt(s.ci95_half_width) << "\n";
    }
    return {{{"compare.csv", rows.str()},
             {"summary.csv", summary.str()},
             {"summary.json", dump(js)}}};
  }
};

// ---------------------------------------------------------------------------

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const BoundViolated*>(&e)) return kExitCheckFailed;
  if (dynamic_cast<const NumericalDomainError*>(&e)) return kExitNumerical;
  if (dynamic_cast<const UsageError*>(&e)) return kExitUsage;
  if (dynamic_cast<const json::exception*>(&e)) return kExitUsage;
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return kExitUsage;
  return 1;
}

json make_manifest(const std::string& name, const Params& params,
                   std::uint64_t seed, const RunOutput& res) {
  json outputs = json::array();
  for (const auto& [file, _] : res.files) outputs.push_back(file);
  return {{"subcommand", name},
          {"params", params},
          {"seed", seed},
          {"tool_version", kToolVersion},
          {"outputs", outputs},
          {"exit_code", res.exit_code}};
}

std::vector<std::string> manifest_args(const json& m) {
  std::vector<std::string> args{m.at("subcommand").get<std::string>()};
  for (const auto& [k, v] : m.at("params").items()) {
    args.push_back("--" + k);
    args.push_back(v.get<std::string>());
  }
  return args;
}

int parse_into(CLI::App& app, const std::vector<std::string>& args,
               std::ostream& out, std::ostream& err, bool& done) {
  std::vector<std::string> rev(args.rbegin(), args.rend());
  done = false;
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    done = true;
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    done = true;
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    done = true;
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    done = true;
    return kExitUsage;
  }
  return kExitOk;
}

}  // namespace

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  auto number = [&](const std::string& s) -> std::uint64_t {
    std::uint64_t v = 0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (s.empty() || ec != std::errc() || ptr != last) {
      throw UsageError("bad seed list '" + text + "'");
    }
    return v;
  };
  std::vector<std::uint64_t> out;
  if (const auto pos = text.find(".."); pos != std::string::npos) {
    const std::uint64_t lo = number(text.substr(0, pos));
    const std::uint64_t hi = number(text.substr(pos + 2));
    if (hi < lo || hi - lo > 100000) throw UsageError("bad seed range '" + text + "'");
    for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
    return out;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(number(item));
  if (out.empty()) throw UsageError("empty seed list");
  return out;
}

std::vector<double> parse_grid(const std::string& text) {
  auto number = [&](const std::string& s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() ||
        !std::isfinite(v)) {
      throw UsageError("bad grid '" + text + "'");
    }
    return v;
  };
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  const bool ranged = text.rfind("log:", 0) == 0 || text.rfind("lin:", 0) == 0;
  while (std::getline(ss, item, ranged ? ':' : ',')) parts.push_back(item);
  std::vector<double> out;
  if (ranged) {
    if (parts.size() != 4) throw UsageError("bad grid '" + text + "'");
    const double lo = number(parts[1]);
    const double hi = number(parts[2]);
    const double nd = number(parts[3]);
    const int n = static_cast<int>(nd);
    const bool log = parts[0] == "log";
    if (n < 1 || n != nd || !(log ? lo > 0.0 : lo >= 0.0) || !(hi >= lo)) {
      throw UsageError("bad grid '" + text + "'");
    }
    if (log) return log_spaced(lo, hi, n);
    for (int i = 0; i < n; ++i) {
      out.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
    }
    return out;
  }
  for (const auto& p : parts) {
    const double v = number(p);
    if (!(v >= 0.0)) throw UsageError("grid magnitudes must be >= 0");
    out.push_back(v);
  }
  if (out.empty()) throw UsageError("empty grid");
  return out;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Perturbative contextual MDP experiments", "cmdp_lab"};
  app.set_help_flag("--help", "print this help message and exit");
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  std::string out_dir;
  std::vector<Subcommand> subs;

  CliffwalkScaling cliff;
  SimpledirError simple;
  PendulumGradcheck pend;
  BoundsCheck bounds;
  Train train_cmd;
  Eval eval_cmd;
  Compare compare_cmd;

  auto add_sub = [&](const std::string& name, const std::string& help, auto& cmd,
                     std::function<std::uint64_t()> seed) {
    CLI::App* sub = app.add_subcommand(name, help);
    // --h is a real option on some subcommands.
    sub->set_help_flag("--help", "print this help message and exit");
    cmd.add(*sub);
    sub->add_option("--out", out_dir, "output directory")->required();
    subs.push_back({name, sub, [&cmd] { return cmd.params(); },
                    [&cmd](std::ostream& o, std::ostream& e) { return cmd.run(o, e); },
                    std::move(seed)});
  };
  auto no_seed = [] { return std::uint64_t{0}; };
  auto first_seed = [](const std::string& list) {
    return [&list] { return parse_seed_list(list).front(); };
  };

  add_sub("cliffwalk-scaling", "CEBE error scaling on the cliff walker", cliff, no_seed);
  add_sub("simpledir-error", "linearized rollout error on SimpleDirection", simple,
          no_seed);
  add_sub("pendulum-gradcheck", "pendulum sensitivities against finite differences",
          pend, [&] { return pend.seed; });
  add_sub("bounds-check", "random certification of the error bounds", bounds,
          [&] { return bounds.seed; });
  add_sub("train", "tabular Q-learning on SimpleDirection", train_cmd,
          first_seed(train_cmd.t.seeds));
  add_sub("eval", "evaluate trained tables on a context ring", eval_cmd,
          first_seed(eval_cmd.seeds));
  add_sub("compare", "train and evaluate every mode over several seeds", compare_cmd,
          first_seed(compare_cmd.t.seeds));

  std::string manifest_path;
  std::string rerun_out;
  bool check = false;
  CLI::App* rerun = app.add_subcommand("rerun", "replay a manifest");
  rerun->add_option("--manifest", manifest_path)->required();
  rerun->add_option("--out", rerun_out, "output directory")->required();
  rerun->add_flag("--check", check,
                  "compare the regenerated files with those next to the manifest");

  bool done = false;
  const int parse_code = parse_into(app, args, out, err, done);
  if (done) return parse_code;

  try {
    if (rerun->parsed()) {
      const fs::path mpath(manifest_path);
      const json m = json::parse(read_file(mpath));
      std::vector<std::string> again = manifest_args(m);
      again.push_back("--out");
      again.push_back(rerun_out);
      const int code = run_cli(again, out, err);
      if (!check) return code;
      const fs::path src_dir = mpath.parent_path();
      bool same = true;
      std::vector<std::string> files = m.at("outputs").get<std::vector<std::string>>();
      files.push_back("manifest.json");
      for (const auto& f : files) {
        const bool eq = read_file(src_dir / f) == read_file(fs::path(rerun_out) / f);
        out << (eq ? "identical " : "DIFFERS ") << f << "\n";
        same = same && eq;
      }
      if (!same) return kExitCheckFailed;
      return code;
    }

    for (const Subcommand& sub : subs) {
      if (!sub.app->parsed()) continue;
      const Params params = sub.params();
      const RunOutput res = sub.run(out, err);
      const fs::path dir(out_dir);
      for (const auto& [file, content] : res.files) {
        write_file_atomic(dir / file, content);
      }
      write_file_atomic(dir / "manifest.json",
                        dump(make_manifest(sub.name, params, sub.seed(), res)));
      return res.exit_code;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kExitUsage;
}

}  // namespace cmdp
