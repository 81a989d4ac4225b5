#ifndef ACFLOW_CRITIC_HPP
#define ACFLOW_CRITIC_HPP

#include <stdexcept>
#include <vector>

#include "acflow/nets.hpp"
#include "acflow/problem.hpp"
#include "acflow/sde.hpp"

namespace acflow {

// Per-trajectory temporal differences with their breakdown:
//   td = running_sum + terminal - v0 - martingale.
// The martingale column is zero for the TD_RL (plain reinforcement-learning)
// variant, which keeps only the cost realization minus the value estimate.
struct TdBatch {
  Vec td;
  Vec running_sum;
  Vec terminal;
  Vec v0;
  Vec martingale;
};

namespace detail {

// sigma(x_j) xi_j for every trajectory at one step, n x N.
inline Mat diffused_increments(const ControlProblemSpec& prob, const Mat& X,
                               const Mat& Xi) {
  Mat s(prob.n, X.cols());
  for (Eigen::Index i = 0; i < X.cols(); ++i)
    s.col(i) = prob.diffusion(X.col(i)) * Xi.col(i);
  return s;
}

}  // namespace detail

// Ito-corrected temporal difference over a batch sampled on-policy:
//   TD_i = sum_j r(x_j, u_j) h + g(x_T) - V0(x_0)
//          - sum_j G(jh, x_j)^T sigma(x_j) xi_j.
// Controls are taken from the batch (the ones that drove the dynamics).
// With rl_variant the martingale sum is dropped (diagnostic only).
inline TdBatch compute_td(const ControlProblemSpec& prob,
                          const Approximator& v0_net,
                          const Approximator& g_net,
                          const TrajectoryBatch& batch,
                          bool rl_variant = false) {
  const int N = batch.num_traj;
  const int nt = batch.num_steps;
  const double h = batch.h;
  if (v0_net.arch.output_dim != 1 || g_net.arch.output_dim != prob.n)
    throw std::invalid_argument("compute_td: network output dims mismatch");

  TdBatch out;
  out.running_sum = Vec::Zero(N);
  out.martingale = Vec::Zero(N);

  out.v0 = forward_batch(v0_net.arch, v0_net.params, batch.states[0], RowVec())
               .row(0)
               .transpose();
  out.terminal = Vec(N);
  for (int i = 0; i < N; ++i)
    out.terminal[i] = prob.terminal_cost(batch.states[nt].col(i));

  for (int j = 0; j < nt; ++j) {
    const Mat& X = batch.states[j];
    const Mat& U = batch.controls[j];
    for (int i = 0; i < N; ++i)
      out.running_sum[i] += prob.running_cost(X.col(i), U.col(i)) * h;
    if (!rl_variant) {
      const RowVec tv = RowVec::Constant(N, batch.times[j]);
      Mat g_vals = forward_batch(g_net.arch, g_net.params, X, tv);
      Mat s = detail::diffused_increments(prob, X, batch.increments[j]);
      out.martingale += g_vals.cwiseProduct(s).colwise().sum().transpose();
    }
  }
  out.td = out.running_sum + out.terminal - out.v0 - out.martingale;
  return out;
}

// Critic loss (1/N) sum_i TD_i^2 with exact reverse-mode gradients through
// V0(x_0) and every G(jh, x_j) appearing in the martingale sum. Forward
// workspaces are kept per step so the backward pass reuses them instead of
// re-running the networks; g_values_out (when given) receives the G(jh, x_j)
// slices for reuse in the actor-target construction.
inline double critic_loss_and_grad(const ControlProblemSpec& prob,
                                   const Approximator& v0_net,
                                   const Approximator& g_net,
                                   const TrajectoryBatch& batch,
                                   Vec& grad_v0, Vec& grad_g,
                                   TdBatch* td_out = nullptr,
                                   bool rl_variant = false,
                                   std::vector<Mat>* g_values_out = nullptr) {
  const int N = batch.num_traj;
  const int nt = batch.num_steps;
  const double h = batch.h;
  if (v0_net.arch.output_dim != 1 || g_net.arch.output_dim != prob.n)
    throw std::invalid_argument(
        "critic_loss_and_grad: network output dims mismatch");

  TdBatch td;
  td.running_sum = Vec::Zero(N);
  td.martingale = Vec::Zero(N);
  td.terminal = Vec(N);
  for (int i = 0; i < N; ++i)
    td.terminal[i] = prob.terminal_cost(batch.states[nt].col(i));

  NetWorkspace v0_ws;
  td.v0 =
      forward_batch(v0_net.arch, v0_net.params, batch.states[0], RowVec(),
                    &v0_ws)
          .row(0)
          .transpose();

  std::vector<NetWorkspace> g_ws(rl_variant ? 0 : nt);
  std::vector<Mat> s(rl_variant ? 0 : nt);
  if (g_values_out) g_values_out->assign(nt, Mat());
  for (int j = 0; j < nt; ++j) {
    const Mat& X = batch.states[j];
    const Mat& U = batch.controls[j];
    for (int i = 0; i < N; ++i)
      td.running_sum[i] += prob.running_cost(X.col(i), U.col(i)) * h;
    if (!rl_variant) {
      const RowVec tv = RowVec::Constant(N, batch.times[j]);
      Mat g_vals = forward_batch(g_net.arch, g_net.params, X, tv, &g_ws[j]);
      s[j] = detail::diffused_increments(prob, X, batch.increments[j]);
      td.martingale += g_vals.cwiseProduct(s[j]).colwise().sum().transpose();
      if (g_values_out) (*g_values_out)[j] = std::move(g_vals);
    }
  }
  td.td = td.running_sum + td.terminal - td.v0 - td.martingale;
  const double loss = td.td.squaredNorm() / N;

  grad_v0 = Vec::Zero(v0_net.params.size());
  grad_g = Vec::Zero(g_net.params.size());

  // d loss / d V0(x0_i) = -2 TD_i / N
  {
    Mat cot = (-2.0 / N) * td.td.transpose();
    vjp_batch(v0_net.arch, v0_net.params, v0_ws, cot, grad_v0);
  }

  // d loss / d G(jh, x_j^i) = -2 TD_i / N * sigma(x_j^i) xi_j^i
  if (!rl_variant) {
    for (int j = 0; j < nt; ++j) {
      Mat cot = s[j] * ((-2.0 / N) * td.td).asDiagonal();
      vjp_batch(g_net.arch, g_net.params, g_ws[j], cot, grad_g);
    }
  }

  if (td_out) *td_out = std::move(td);
  return loss;
}

}  // namespace acflow

#endif  // ACFLOW_CRITIC_HPP
