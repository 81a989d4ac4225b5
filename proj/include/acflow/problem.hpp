#ifndef ACFLOW_PROBLEM_HPP
#define ACFLOW_PROBLEM_HPP

#include <functional>
#include <optional>
#include <stdexcept>
#include <variant>

#include <Eigen/Core>

namespace acflow {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using RowVec = Eigen::RowVectorXd;

// State space: a torus with a common period per axis, or Euclidean space
// with an axis-aligned box for initial-state sampling.
struct TorusDomain {
  double period;
};
struct BoxDomain {
  Vec lo;
  Vec hi;
};
using Domain = std::variant<TorusDomain, BoxDomain>;

// Closed-form references, when the problem has them (analytically or via a
// reduced PDE solve).
struct AnalyticRefs {
  std::function<double(double, const Vec&)> value;       // V*(t,x)
  std::function<Vec(double, const Vec&)> grad_value;     // grad_x V*(t,x)
  std::function<Vec(double, const Vec&)> control;        // u*(t,x)
};

// One finite-horizon stochastic control problem:
//   minimize E[ int_0^T r(x_t,u_t) dt + g(x_T) ],
//   dx_t = b(x_t,u_t) dt + sigma(x_t) dW_t.
//
// The grad_x_* members are the closed-form state derivatives needed by the
// pathwise (discretize-then-optimize) baseline; grad_x_diffusion_noise maps
// (x, xi) to the Jacobian of sigma(x)*xi in x.
struct ControlProblemSpec {
  int n = 0;       // state dimension
  int n_ctrl = 0;  // control dimension
  int m = 0;       // Brownian dimension
  double horizon = 1.0;
  Domain domain;

  std::function<Vec(const Vec&, const Vec&)> drift;                // b(x,u)
  std::function<Mat(const Vec&)> diffusion;                        // sigma(x), n x m
  std::function<double(const Vec&, const Vec&)> running_cost;      // r(x,u)
  std::function<double(const Vec&)> terminal_cost;                 // g(x)
  std::function<Mat(const Vec&, const Vec&)> grad_u_drift;         // n x n'
  std::function<Vec(const Vec&, const Vec&)> grad_u_running_cost;  // n'

  std::function<Mat(const Vec&, const Vec&)> grad_x_drift;         // n x n
  std::function<Vec(const Vec&, const Vec&)> grad_x_running_cost;  // n
  std::function<Vec(const Vec&)> grad_x_terminal_cost;             // n
  std::function<Mat(const Vec&, const Vec&)> grad_x_diffusion_noise;  // n x n

  // argmax over u of the generalized Hamiltonian, given costate p.
  std::function<Vec(double, const Vec&, const Vec&)> argmax_control;

  std::optional<AnalyticRefs> analytic;

  bool is_torus() const { return std::holds_alternative<TorusDomain>(domain); }
  double period() const { return std::get<TorusDomain>(domain).period; }
};

// grad_u of the generalized Hamiltonian
//   G(t,x,u,p,P) = 1/2 Tr(P sigma sigma^T) + <p, b(x,u)> - r(x,u).
// sigma does not depend on u here, so the P argument drops out.
inline Vec grad_u_hamiltonian(const ControlProblemSpec& prob, const Vec& x,
                              const Vec& u, const Vec& p) {
  if (x.size() != prob.n || u.size() != prob.n_ctrl || p.size() != prob.n)
    throw std::invalid_argument("grad_u_hamiltonian: shape mismatch");
  return prob.grad_u_drift(x, u).transpose() * p -
         prob.grad_u_running_cost(x, u);
}

}  // namespace acflow

#endif  // ACFLOW_PROBLEM_HPP
