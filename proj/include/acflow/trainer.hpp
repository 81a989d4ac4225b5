#ifndef ACFLOW_TRAINER_HPP
#define ACFLOW_TRAINER_HPP

#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "acflow/actor.hpp"
#include "acflow/critic.hpp"
#include "acflow/eval.hpp"
#include "acflow/nets.hpp"
#include "acflow/optim.hpp"
#include "acflow/problems.hpp"
#include "acflow/sde.hpp"

namespace acflow {

enum class RunMode { kActorCritic, kVanilla, kSupervised };

struct TrainConfig {
  std::string problem = "lq";  // "lq" | "aiyagari"
  int dim = 1;                 // LQ state dimension
  RunMode mode = RunMode::kActorCritic;

  double lr_actor = 0.05;
  double lr_critic = 0.1;
  double dtau = 0.5;
  int iterations = 200;
  int batch_size = 500;
  double dt = 0.01;
  double horizon = 1.0;

  int eval_every = 10;
  int eval_samples = 4096;
  int cost_samples = 1024;
  std::uint64_t seed = 0;

  int hidden_width = 0;  // 0: per-problem default (56 for n<=2, 64 above)
  int num_blocks = 2;
  int num_freq = 4;
  bool td_rl = false;  // diagnostic TD variant without the martingale term

  double lq_sigma_bar = 1.0;
  AiyagariParams aiyagari;

  int num_steps() const {
    const double ratio = horizon / dt;
    const int nt = static_cast<int>(std::lround(ratio));
    if (nt < 1 || std::abs(nt * dt - horizon) > 1e-9 * horizon)
      throw std::invalid_argument("TrainConfig: horizon / dt must be integral");
    return nt;
  }

  void validate() const {
    num_steps();
    if (iterations < 1 || batch_size < 1)
      throw std::invalid_argument("TrainConfig: iterations and batch_size >= 1");
    if (lr_actor < 0.0 || lr_critic < 0.0 || dtau <= 0.0)
      throw std::invalid_argument(
          "TrainConfig: rates must be nonnegative and dtau > 0");
    if (problem != "lq" && problem != "aiyagari")
      throw std::invalid_argument("TrainConfig: unknown problem " + problem);
  }

  int resolved_width(int n) const {
    if (hidden_width > 0) return hidden_width;
    return n <= 2 ? 56 : 64;
  }
};

struct MetricsRow {
  int iter = 0;
  double tau = 0.0;
  double critic_loss = 0.0;
  double err_v0 = 0.0;
  double err_g = 0.0;
  double err_u = 0.0;
  double cost_mean = 0.0;
  double cost_stderr = 0.0;
  double wall_ms = 0.0;
};

struct MetricsLog {
  std::vector<MetricsRow> rows;
  const MetricsRow& final_row() const {
    if (rows.empty()) throw std::logic_error("MetricsLog: empty");
    return rows.back();
  }
};

// Problem plus the three approximators V0(x), G(t,x), u(t,x).
struct TrainerState {
  ControlProblemSpec prob;
  Approximator v0, g, u;

  BatchPolicy policy() const {
    // capture by value: the policy snapshot is the current parameters
    return [arch = u.arch, params = u.params](double t, const Mat& X) {
      return forward_batch(arch, params, X,
                           RowVec::Constant(X.cols(), t));
    };
  }
};

namespace detail {

inline std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t tag,
                                  std::uint64_t k = 0) {
  return rng::counter_key(seed, rng::Purpose::kGeneric, tag, k, 0);
}

}  // namespace detail

inline TrainerState make_trainer_state(const TrainConfig& config) {
  config.validate();
  TrainerState st;

  if (config.problem == "lq") {
    LqParams params = LqParams::defaults(config.dim);
    params.sigma_bar = config.lq_sigma_bar;
    params.horizon = config.horizon;
    st.prob = lq_problem(params);
  } else {
    AiyagariParams params = config.aiyagari;
    params.horizon = config.horizon;
    st.prob = aiyagari_problem(params);
    PdeGrid grid;
    grid.z_min = -2.0;
    grid.z_max = 4.0;
    grid.num_cells = 600;
    grid.num_steps = 400;
    st.prob.analytic = aiyagari_reference(params, grid).refs;
  }

  const int n = st.prob.n;
  NetworkArch base;
  base.input_kind =
      st.prob.is_torus() ? InputKind::kTorus : InputKind::kEuclidean;
  base.state_dim = n;
  base.hidden_width = config.resolved_width(n);
  base.num_blocks = config.num_blocks;
  base.num_freq = config.num_freq;
  if (st.prob.is_torus()) base.period = st.prob.period();
  base.time_scale = config.horizon;

  st.v0.arch = base;
  st.v0.arch.output_dim = 1;
  st.v0.arch.include_time = false;
  st.g.arch = base;
  st.g.arch.output_dim = n;
  st.g.arch.include_time = true;
  st.u.arch = base;
  st.u.arch.output_dim = st.prob.n_ctrl;
  st.u.arch.include_time = true;
  if (config.problem == "aiyagari")
    st.u.arch.output_transform = OutputTransform::kSoftplus;

  st.v0.params = init_params(st.v0.arch, detail::derived_seed(config.seed, 1));
  st.g.params = init_params(st.g.arch, detail::derived_seed(config.seed, 2));
  st.u.params = init_params(st.u.arch, detail::derived_seed(config.seed, 3));
  return st;
}

// Validation errors and a fresh-trajectory cost estimate. Evaluation streams
// are disjoint from the training streams.
inline MetricsRow evaluate_metrics(const TrainerState& st,
                                   const TrainConfig& config, int iter,
                                   double critic_loss, double wall_ms) {
  const std::uint64_t eval_seed = detail::derived_seed(config.seed, 0xE7);
  const auto& refs = *st.prob.analytic;
  const double T = st.prob.horizon;

  MetricsRow row;
  row.iter = iter;
  row.tau = iter * config.dtau;
  row.critic_loss = critic_loss;
  row.wall_ms = wall_ms;

  row.err_v0 = l2_rel_error(
      config.eval_samples,
      [&](int i) { return sample_domain_point(st.prob, eval_seed, i); },
      [&](const Vec& x) { return forward(st.v0.arch, st.v0.params, x); },
      [&](const Vec& x) { return Vec::Constant(1, refs.value(0.0, x)); });

  auto tx_point = [&](int i) {
    const double t = sample_time_point(st.prob, eval_seed, i);
    return std::make_pair(t, sample_domain_point(st.prob, eval_seed, i));
  };
  row.err_g = l2_rel_error(
      config.eval_samples, tx_point,
      [&](const auto& p) {
        return forward(st.g.arch, st.g.params, p.second, p.first);
      },
      [&](const auto& p) { return refs.grad_value(p.first, p.second); });
  row.err_u = l2_rel_error(
      config.eval_samples, tx_point,
      [&](const auto& p) {
        return forward(st.u.arch, st.u.params, p.second, p.first);
      },
      [&](const auto& p) { return refs.control(p.first, p.second); });

  const CostEstimate cost =
      estimate_cost(st.prob, st.policy(), config.cost_samples,
                    config.num_steps(), detail::derived_seed(config.seed, 0xC0));
  row.cost_mean = cost.mean;
  row.cost_stderr = cost.stderr_;
  return row;
}

namespace detail {

inline void guard_divergence(double critic_loss, const TrainerState& st,
                             int iter) {
  if (!(critic_loss < 1e6) || !st.v0.params.allFinite() ||
      !st.g.params.allFinite() || !st.u.params.allFinite())
    throw std::runtime_error("training diverged at iteration " +
                             std::to_string(iter));
}

}  // namespace detail

// Algorithm: per iteration, sample a fresh on-policy batch, take one Adam
// step on the critic loss (step size lr_critic * dtau), then one Adam step
// on the actor regression loss (step size lr_actor * dtau). Actor targets
// use the critic as of the start of the iteration.
inline MetricsLog run_actor_critic(const TrainConfig& config,
                                   TrainerState* final_state = nullptr) {
  config.validate();
  TrainerState st = make_trainer_state(config);
  AdamState adam_v0(st.v0.params.size());
  AdamState adam_g(st.g.params.size());
  AdamState adam_u(st.u.params.size());
  const int nt = config.num_steps();

  MetricsLog log;
  const auto t_start = std::chrono::steady_clock::now();
  auto wall_ms = [&] {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - t_start)
        .count();
  };
  log.rows.push_back(evaluate_metrics(st, config, 0, 0.0, wall_ms()));

  for (int k = 0; k < config.iterations; ++k) {
    TrajectoryBatch batch =
        sample_trajectories(st.prob, st.policy(), config.batch_size, nt,
                            detail::derived_seed(config.seed, 0xB0, k));

    Vec grad_v0, grad_g;
    std::vector<Mat> g_values;
    const double loss = critic_loss_and_grad(
        st.prob, st.v0, st.g, batch, grad_v0, grad_g, nullptr, config.td_rl,
        config.td_rl ? nullptr : &g_values);
    ActorTargets targets =
        actor_targets(st.prob, st.u, st.g, batch, config.lr_actor,
                      config.dtau, config.td_rl ? nullptr : &g_values);

    st.v0.params -=
        config.lr_critic * config.dtau * adam_direction(adam_v0, grad_v0);
    st.g.params -=
        config.lr_critic * config.dtau * adam_direction(adam_g, grad_g);

    Vec grad_u;
    actor_loss_and_grad(st.u.arch, st.u.params, targets, batch, grad_u);
    st.u.params -=
        config.lr_actor * config.dtau * adam_direction(adam_u, grad_u);

    detail::guard_divergence(loss, st, k);
    if ((k + 1) % config.eval_every == 0 || k + 1 == config.iterations)
      log.rows.push_back(
          evaluate_metrics(st, config, k + 1, loss, wall_ms()));
  }
  if (final_state) *final_state = st;
  return log;
}

// Discretize-then-optimize baseline: pathwise cost gradient, Adam on the
// policy only.
inline MetricsLog run_baseline(const TrainConfig& config,
                               TrainerState* final_state = nullptr) {
  config.validate();
  TrainerState st = make_trainer_state(config);
  AdamState adam_u(st.u.params.size());
  const int nt = config.num_steps();

  MetricsLog log;
  const auto t_start = std::chrono::steady_clock::now();
  auto wall_ms = [&] {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - t_start)
        .count();
  };
  log.rows.push_back(evaluate_metrics(st, config, 0, 0.0, wall_ms()));

  for (int k = 0; k < config.iterations; ++k) {
    Vec grad_u;
    vanilla_cost_grad(st.prob, st.u.arch, st.u.params, config.batch_size, nt,
                      detail::derived_seed(config.seed, 0xB0, k), grad_u);
    st.u.params -=
        config.lr_actor * config.dtau * adam_direction(adam_u, grad_u);
    detail::guard_divergence(0.0, st, k);
    if ((k + 1) % config.eval_every == 0 || k + 1 == config.iterations)
      log.rows.push_back(evaluate_metrics(st, config, k + 1, 0.0, wall_ms()));
  }
  if (final_state) *final_state = st;
  return log;
}

// Capacity-ceiling baseline: Adam on Monte Carlo L2 errors against the
// problem references, one step per network per iteration.
inline MetricsLog run_supervised(const TrainConfig& config,
                                 TrainerState* final_state = nullptr) {
  config.validate();
  TrainerState st = make_trainer_state(config);
  if (!st.prob.analytic)
    throw std::invalid_argument("run_supervised: problem has no references");
  const auto& refs = *st.prob.analytic;
  AdamState adam_v0(st.v0.params.size());
  AdamState adam_g(st.g.params.size());
  AdamState adam_u(st.u.params.size());

  MetricsLog log;
  const auto t_start = std::chrono::steady_clock::now();
  auto wall_ms = [&] {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - t_start)
        .count();
  };
  log.rows.push_back(evaluate_metrics(st, config, 0, 0.0, wall_ms()));

  const int B = config.batch_size;
  for (int k = 0; k < config.iterations; ++k) {
    const std::uint64_t sk = detail::derived_seed(config.seed, 0xB0, k);
    Mat X(st.prob.n, B);
    RowVec tv(B);
    for (int i = 0; i < B; ++i) {
      X.col(i) = sample_domain_point(st.prob, sk, i);
      tv[i] = sample_time_point(st.prob, sk, i);
    }

    auto step = [&](Approximator& net, AdamState& adam, double rate,
                    const std::function<Vec(double, const Vec&)>& target,
                    bool timed) {
      NetWorkspace ws;
      const RowVec tt = timed ? tv : RowVec();
      Mat out = forward_batch(net.arch, net.params, X, tt, &ws);
      Mat resid = out;
      for (int i = 0; i < B; ++i)
        resid.col(i) -= target(timed ? tv[i] : 0.0, X.col(i));
      Vec grad = Vec::Zero(net.params.size());
      vjp_batch(net.arch, net.params, ws, (2.0 / B) * resid, grad);
      net.params -= rate * config.dtau * adam_direction(adam, grad);
    };

    step(st.v0, adam_v0, config.lr_critic,
         [&](double, const Vec& x) {
           return Vec::Constant(1, refs.value(0.0, x));
         },
         false);
    step(st.g, adam_g, config.lr_critic, refs.grad_value, true);
    step(st.u, adam_u, config.lr_actor, refs.control, true);

    detail::guard_divergence(0.0, st, k);
    if ((k + 1) % config.eval_every == 0 || k + 1 == config.iterations)
      log.rows.push_back(evaluate_metrics(st, config, k + 1, 0.0, wall_ms()));
  }
  if (final_state) *final_state = st;
  return log;
}

inline MetricsLog run_training(const TrainConfig& config,
                               TrainerState* final_state = nullptr) {
  switch (config.mode) {
    case RunMode::kActorCritic:
      return run_actor_critic(config, final_state);
    case RunMode::kVanilla:
      return run_baseline(config, final_state);
    case RunMode::kSupervised:
      return run_supervised(config, final_state);
  }
  throw std::logic_error("run_training: bad mode");
}

}  // namespace acflow

#endif  // ACFLOW_TRAINER_HPP
