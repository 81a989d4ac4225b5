#ifndef ACFLOW_PROBLEMS_HPP
#define ACFLOW_PROBLEMS_HPP

#include <cmath>
#include <stdexcept>

#include "acflow/problem.hpp"

namespace acflow {

// ---------------------------------------------------------------------------
// LQ on the torus [0, 2*pi]^n:
//   dx = u dt + sigma_bar dW,   r(x,u) = 1/2 |u|^2 + rtilde(x),
//   rtilde(x) = beta_0 + 1/2 sum_i (sigma_bar^2 beta_i sin x_i
//                                   + beta_i^2 cos^2 x_i),
//   g(x) = sum_i beta_i sin x_i.
// Optimal solution: V*(t,x) = beta_0 (T-t) + sum_i beta_i sin x_i,
// u* = -grad V*.
// ---------------------------------------------------------------------------

struct LqParams {
  int n = 1;
  Vec beta;               // (beta_0, beta_1, ..., beta_n)
  double sigma_bar = 1.0;
  double horizon = 1.0;

  // beta_0 = 0.5, beta_i = 0.4/sqrt(n): keeps |V*| and |u*| at O(1) in any
  // dimension.
  static LqParams defaults(int n) {
    LqParams p;
    p.n = n;
    p.beta = Vec::Constant(n + 1, 0.4 / std::sqrt(static_cast<double>(n)));
    p.beta[0] = 0.5;
    return p;
  }
};

inline ControlProblemSpec lq_problem(const LqParams& params) {
  if (params.sigma_bar <= 0.0)
    throw std::invalid_argument("lq_problem: sigma_bar must be positive");
  if (params.beta.size() != params.n + 1)
    throw std::invalid_argument("lq_problem: beta must have length n+1");

  const int n = params.n;
  const Vec beta = params.beta;
  const double sb = params.sigma_bar;
  const double T = params.horizon;

  auto rtilde = [n, beta, sb](const Vec& x) {
    double s = beta[0];
    for (int i = 0; i < n; ++i) {
      const double c = std::cos(x[i]);
      s += 0.5 * (sb * sb * beta[i + 1] * std::sin(x[i]) +
                  beta[i + 1] * beta[i + 1] * c * c);
    }
    return s;
  };

  ControlProblemSpec prob;
  prob.n = n;
  prob.n_ctrl = n;
  prob.m = n;
  prob.horizon = T;
  prob.domain = TorusDomain{2.0 * M_PI};

  prob.drift = [](const Vec&, const Vec& u) { return u; };
  prob.diffusion = [n, sb](const Vec&) -> Mat {
    return sb * Mat::Identity(n, n);
  };
  prob.running_cost = [rtilde](const Vec& x, const Vec& u) {
    return 0.5 * u.squaredNorm() + rtilde(x);
  };
  prob.terminal_cost = [n, beta](const Vec& x) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += beta[i + 1] * std::sin(x[i]);
    return s;
  };
  prob.grad_u_drift = [n](const Vec&, const Vec&) -> Mat {
    return Mat::Identity(n, n);
  };
  prob.grad_u_running_cost = [](const Vec&, const Vec& u) -> Vec { return u; };

  prob.grad_x_drift = [n](const Vec&, const Vec&) -> Mat {
    return Mat::Zero(n, n);
  };
  prob.grad_x_running_cost = [n, beta, sb](const Vec& x, const Vec&) -> Vec {
    Vec g(n);
    for (int i = 0; i < n; ++i)
      g[i] = 0.5 * (sb * sb * beta[i + 1] * std::cos(x[i]) -
                    2.0 * beta[i + 1] * beta[i + 1] * std::cos(x[i]) *
                        std::sin(x[i]));
    return g;
  };
  prob.grad_x_terminal_cost = [n, beta](const Vec& x) -> Vec {
    Vec g(n);
    for (int i = 0; i < n; ++i) g[i] = beta[i + 1] * std::cos(x[i]);
    return g;
  };
  prob.grad_x_diffusion_noise = [n](const Vec&, const Vec&) -> Mat {
    return Mat::Zero(n, n);
  };

  // sup_u [<p,u> - 1/2|u|^2] is attained at u = p.
  prob.argmax_control = [](double, const Vec&, const Vec& p) { return p; };

  AnalyticRefs refs;
  refs.value = [n, beta, T](double t, const Vec& x) {
    double s = beta[0] * (T - t);
    for (int i = 0; i < n; ++i) s += beta[i + 1] * std::sin(x[i]);
    return s;
  };
  refs.grad_value = [n, beta](double, const Vec& x) -> Vec {
    Vec g(n);
    for (int i = 0; i < n; ++i) g[i] = beta[i + 1] * std::cos(x[i]);
    return g;
  };
  refs.control = [n, beta](double, const Vec& x) -> Vec {
    Vec u(n);
    for (int i = 0; i < n; ++i) u[i] = -beta[i + 1] * std::cos(x[i]);
    return u;
  };
  prob.analytic = refs;
  return prob;
}

// ---------------------------------------------------------------------------
// Aiyagari growth model (minimization form), state (z, a), control c > 0:
//   dz = -(z - 1) dt + sigma_z dW^1
//   da = ((1-alpha) z + (alpha-delta) a - c) dt + sigma_a a dW^2
//   r((z,a),c) = -log(c) + r_tired(z),   g((z,a)) = g_tired(z) - a.
// ---------------------------------------------------------------------------

struct AiyagariParams {
  double alpha = 0.05;
  double delta = 0.05;
  double sigma_z = 1.0;
  double sigma_a = 0.1;
  double horizon = 1.0;
  // r(z) is only constrained to be increasing; this default keeps it O(0.1)
  // and in the same family as g.
  std::function<double(double)> tiredness_r = [](double z) {
    return 0.1 * std::exp(0.1 * z);
  };
  std::function<double(double)> tiredness_r_prime = [](double z) {
    return 0.01 * std::exp(0.1 * z);
  };
  std::function<double(double)> tiredness_g = [](double z) {
    return 0.2 * std::exp(0.2 * z);
  };
  std::function<double(double)> tiredness_g_prime = [](double z) {
    return 0.04 * std::exp(0.2 * z);
  };
};

inline ControlProblemSpec aiyagari_problem(const AiyagariParams& params) {
  if (params.sigma_z <= 0.0 || params.sigma_a < 0.0)
    throw std::invalid_argument("aiyagari_problem: need sigma_z > 0, sigma_a >= 0");

  const double alpha = params.alpha;
  const double delta = params.delta;
  const double sz = params.sigma_z;
  const double sa = params.sigma_a;
  const auto r_t = params.tiredness_r;
  const auto r_tp = params.tiredness_r_prime;
  const auto g_t = params.tiredness_g;
  const auto g_tp = params.tiredness_g_prime;

  ControlProblemSpec prob;
  prob.n = 2;
  prob.n_ctrl = 1;
  prob.m = 2;
  prob.horizon = params.horizon;
  // Initial states uniform on [0,2]^2, centered on the OU mean z = 1.
  BoxDomain box;
  box.lo = Vec::Zero(2);
  box.hi = Vec::Constant(2, 2.0);
  prob.domain = box;

  prob.drift = [alpha, delta](const Vec& x, const Vec& c) -> Vec {
    Vec b(2);
    b[0] = -(x[0] - 1.0);
    b[1] = (1.0 - alpha) * x[0] + (alpha - delta) * x[1] - c[0];
    return b;
  };
  prob.diffusion = [sz, sa](const Vec& x) -> Mat {
    Mat s = Mat::Zero(2, 2);
    s(0, 0) = sz;
    s(1, 1) = sa * x[1];
    return s;
  };
  prob.running_cost = [r_t](const Vec& x, const Vec& c) {
    if (c[0] <= 0.0)
      throw std::domain_error("aiyagari running cost: consumption must be > 0");
    return -std::log(c[0]) + r_t(x[0]);
  };
  prob.terminal_cost = [g_t](const Vec& x) { return g_t(x[0]) - x[1]; };
  prob.grad_u_drift = [](const Vec&, const Vec&) -> Mat {
    Mat g(2, 1);
    g(0, 0) = 0.0;
    g(1, 0) = -1.0;
    return g;
  };
  prob.grad_u_running_cost = [](const Vec&, const Vec& c) -> Vec {
    if (c[0] <= 0.0)
      throw std::domain_error("aiyagari running cost: consumption must be > 0");
    return Vec::Constant(1, -1.0 / c[0]);
  };

  prob.grad_x_drift = [alpha, delta](const Vec&, const Vec&) -> Mat {
    Mat g(2, 2);
    g << -1.0, 0.0, 1.0 - alpha, alpha - delta;
    return g;
  };
  prob.grad_x_running_cost = [r_tp](const Vec& x, const Vec&) -> Vec {
    Vec g(2);
    g[0] = r_tp(x[0]);
    g[1] = 0.0;
    return g;
  };
  prob.grad_x_terminal_cost = [g_tp](const Vec& x) -> Vec {
    Vec g(2);
    g[0] = g_tp(x[0]);
    g[1] = -1.0;
    return g;
  };
  prob.grad_x_diffusion_noise = [sa](const Vec&, const Vec& xi) -> Mat {
    Mat g = Mat::Zero(2, 2);
    g(1, 1) = sa * xi[1];
    return g;
  };

  // d/dc [<p,b> - r] = -p_a + 1/c, so the maximizer is c = 1/p_a (p_a > 0).
  prob.argmax_control = [](double, const Vec&, const Vec& p) -> Vec {
    if (p[1] <= 0.0)
      throw std::domain_error("aiyagari argmax_control: needs costate p_a > 0");
    return Vec::Constant(1, 1.0 / p[1]);
  };

  // The analytic block is attached by eval::aiyagari_reference (PDE-reduced).
  return prob;
}

}  // namespace acflow

#endif  // ACFLOW_PROBLEMS_HPP
