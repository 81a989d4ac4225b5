#ifndef ACFLOW_ACTOR_HPP
#define ACFLOW_ACTOR_HPP

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "acflow/critic.hpp"
#include "acflow/nets.hpp"
#include "acflow/problem.hpp"
#include "acflow/sde.hpp"

namespace acflow {

// Regression targets for one policy-gradient step. Points are the sampled
// (jh, x_j) pairs of the batch, terminal slice excluded (u(T,.) never enters
// the dynamics). Per point:
//   target = u(t,x) + dtau * alpha_a * grad_u G(t, x, u(t,x), -G(t,x)).
struct ActorTargets {
  std::vector<Mat> targets;    // num_steps slices, n' x N
  double alpha_dtau = 0.0;
  std::uint64_t policy_fingerprint = 0;  // theta_a the targets were built from
};

// g_values: optional precomputed G(jh, x_j) slices (n x N per step), e.g.
// shared with the TD pass of the same iteration; recomputed when absent.
inline ActorTargets actor_targets(const ControlProblemSpec& prob,
                                  const Approximator& policy,
                                  const Approximator& g_net,
                                  const TrajectoryBatch& batch, double alpha_a,
                                  double dtau,
                                  const std::vector<Mat>* g_values = nullptr) {
  const int N = batch.num_traj;
  const int nt = batch.num_steps;

  ActorTargets out;
  out.alpha_dtau = alpha_a * dtau;
  out.policy_fingerprint = param_fingerprint(policy.params);
  out.targets.resize(nt);

  for (int j = 0; j < nt; ++j) {
    const Mat& X = batch.states[j];
    const Mat& U = batch.controls[j];
    Mat g_vals;
    if (g_values) {
      g_vals = (*g_values)[j];
    } else {
      const RowVec tv = RowVec::Constant(N, batch.times[j]);
      g_vals = forward_batch(g_net.arch, g_net.params, X, tv);
    }
    Mat tgt(prob.n_ctrl, N);
    for (int i = 0; i < N; ++i) {
      const Vec p = -g_vals.col(i);
      tgt.col(i) =
          U.col(i) + out.alpha_dtau *
                         grad_u_hamiltonian(prob, X.col(i), U.col(i), p);
    }
    out.targets[j] = std::move(tgt);
  }
  return out;
}

// Least-squares actor loss sum_{(t,x)} |u(t,x;theta) - target(t,x)|^2 with
// its exact parameter gradient, both evaluated at the parameters the targets
// were built from (enforced via fingerprint).
inline double actor_loss_and_grad(const NetworkArch& policy_arch,
                                  const Vec& theta,
                                  const ActorTargets& targets,
                                  const TrajectoryBatch& batch, Vec& grad) {
  if (param_fingerprint(theta) != targets.policy_fingerprint)
    throw std::logic_error(
        "actor_loss_and_grad: targets were built from different parameters");
  const int nt = batch.num_steps;
  const int N = batch.num_traj;

  grad = Vec::Zero(theta.size());
  double loss = 0.0;
  for (int j = 0; j < nt; ++j) {
    const RowVec tv = RowVec::Constant(N, batch.times[j]);
    NetWorkspace ws;
    Mat u = forward_batch(policy_arch, theta, batch.states[j], tv, &ws);
    Mat resid = u - targets.targets[j];
    loss += resid.squaredNorm();
    vjp_batch(policy_arch, theta, ws, 2.0 * resid, grad);
  }
  return loss;
}

// Pathwise discretize-then-optimize baseline: simulate the Euler-Maruyama
// dynamics under the network policy with reparameterized noise, accumulate
// the discretized cost sum_j r h + g, and backpropagate through the unrolled
// chain x_{j+1} = x_j + b h + sigma xi using the problem's closed-form state
// derivatives. Returns the Monte Carlo cost estimate; grad receives
// d cost / d theta averaged over trajectories.
inline double vanilla_cost_grad(const ControlProblemSpec& prob,
                                const NetworkArch& policy_arch,
                                const Vec& theta, int N, int num_steps,
                                std::uint64_t seed, Vec& grad) {
  BatchPolicy policy = [&](double t, const Mat& X) {
    RowVec tv = RowVec::Constant(X.cols(), t);
    return forward_batch(policy_arch, theta, X, tv);
  };
  TrajectoryBatch batch = sample_trajectories(prob, policy, N, num_steps, seed);
  const double h = batch.h;
  const int nt = batch.num_steps;

  double cost = 0.0;
  for (int j = 0; j < nt; ++j)
    for (int i = 0; i < N; ++i)
      cost += prob.running_cost(batch.states[j].col(i), batch.controls[j].col(i)) * h;

  grad = Vec::Zero(theta.size());

  // Adjoint sweep: lambda_i = d cost_i / d x_j, seeded at the terminal cost.
  Mat lambda(prob.n, N);
  for (int i = 0; i < N; ++i) {
    cost += prob.terminal_cost(batch.states[nt].col(i));
    lambda.col(i) = prob.grad_x_terminal_cost(batch.states[nt].col(i));
  }

  for (int j = nt - 1; j >= 0; --j) {
    const Mat& X = batch.states[j];
    const Mat& U = batch.controls[j];
    const Mat& Xi = batch.increments[j];
    const RowVec tv = RowVec::Constant(N, batch.times[j]);

    NetWorkspace ws;
    forward_batch(policy_arch, theta, X, tv, &ws);

    // Cotangent on u_j: h grad_u r + h grad_u b^T lambda_{j+1}.
    Mat cot(prob.n_ctrl, N);
    Mat lambda_prev(prob.n, N);
    for (int i = 0; i < N; ++i) {
      const Vec gur = prob.grad_u_running_cost(X.col(i), U.col(i));
      const Mat gub = prob.grad_u_drift(X.col(i), U.col(i));
      cot.col(i) = h * (gur + gub.transpose() * lambda.col(i));
      // Explicit x-dependence (policy chain added below via vjp x-grad).
      lambda_prev.col(i) =
          lambda.col(i) +
          h * (prob.grad_x_drift(X.col(i), U.col(i)).transpose() * lambda.col(i) +
               prob.grad_x_running_cost(X.col(i), U.col(i))) +
          prob.grad_x_diffusion_noise(X.col(i), Xi.col(i)).transpose() *
              lambda.col(i);
    }
    Mat xg;
    vjp_batch(policy_arch, theta, ws, cot, grad, &xg);
    lambda = lambda_prev + xg;
    if (!lambda.allFinite())
      throw std::runtime_error("vanilla_cost_grad: non-finite adjoint at step " +
                               std::to_string(j));
  }

  grad /= static_cast<double>(N);
  if (!grad.allFinite())
    throw std::runtime_error("vanilla_cost_grad: non-finite gradient");
  return cost / N;
}

}  // namespace acflow

#endif  // ACFLOW_ACTOR_HPP
