#ifndef ACFLOW_EVAL_HPP
#define ACFLOW_EVAL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include "acflow/problem.hpp"
#include "acflow/problems.hpp"
#include "acflow/rng.hpp"
#include "acflow/sde.hpp"

namespace acflow {

// ---------------------------------------------------------------------------
// L2 relative error over sampled points.
// ---------------------------------------------------------------------------

// point(i) produces a sample, approx/ref map it to vectors (or doubles).
template <class PointFn, class ApproxFn, class RefFn>
double l2_rel_error(int num_samples, PointFn&& point, ApproxFn&& approx,
                    RefFn&& ref) {
  if (num_samples < 1)
    throw std::invalid_argument("l2_rel_error: num_samples >= 1");
  double num = 0.0, den = 0.0;
  for (int i = 0; i < num_samples; ++i) {
    const auto p = point(i);
    const Vec a = Vec(approx(p));
    const Vec r = Vec(ref(p));
    num += (a - r).squaredNorm();
    den += r.squaredNorm();
  }
  if (den == 0.0) throw std::invalid_argument("l2_rel_error: zero reference norm");
  return std::sqrt(num) / std::sqrt(den);
}

// Uniform sampler over the problem domain (torus or a given box); the eval
// stream is disjoint from all training streams.
inline Vec sample_domain_point(const ControlProblemSpec& prob,
                               std::uint64_t seed, std::uint64_t index,
                               const Vec* box_lo = nullptr,
                               const Vec* box_hi = nullptr) {
  Vec x(prob.n);
  for (int d = 0; d < prob.n; ++d) {
    const double u =
        rng::uniform(seed, rng::Purpose::kEvalPoints, index, 0, d);
    if (box_lo) {
      x[d] = (*box_lo)[d] + u * ((*box_hi)[d] - (*box_lo)[d]);
    } else if (prob.is_torus()) {
      x[d] = u * prob.period();
    } else {
      const auto& box = std::get<BoxDomain>(prob.domain);
      x[d] = box.lo[d] + u * (box.hi[d] - box.lo[d]);
    }
  }
  return x;
}

inline double sample_time_point(const ControlProblemSpec& prob,
                                std::uint64_t seed, std::uint64_t index) {
  return prob.horizon *
         rng::uniform(seed, rng::Purpose::kEvalPoints, index, 1, 0);
}

// ---------------------------------------------------------------------------
// Monte Carlo cost estimate.
// ---------------------------------------------------------------------------

// Discretized cost sum_j r h + g, one entry per trajectory.
inline Vec per_trajectory_costs(const ControlProblemSpec& prob,
                                const BatchPolicy& policy, int N,
                                int num_steps, std::uint64_t seed) {
  TrajectoryBatch batch = sample_trajectories(prob, policy, N, num_steps, seed);
  Vec costs = Vec::Zero(N);
  for (int j = 0; j < num_steps; ++j)
    for (int i = 0; i < N; ++i)
      costs[i] += prob.running_cost(batch.states[j].col(i),
                                    batch.controls[j].col(i)) *
                  batch.h;
  for (int i = 0; i < N; ++i)
    costs[i] += prob.terminal_cost(batch.states[num_steps].col(i));
  return costs;
}

struct CostEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
};

inline CostEstimate estimate_cost(const ControlProblemSpec& prob,
                                  const BatchPolicy& policy, int M,
                                  int num_steps, std::uint64_t seed) {
  if (M < 2) throw std::invalid_argument("estimate_cost: M >= 2 required");
  const Vec costs = per_trajectory_costs(prob, policy, M, num_steps, seed);
  CostEstimate est;
  est.mean = costs.mean();
  const double var =
      (costs.array() - est.mean).square().sum() / (M - 1);
  est.stderr_ = std::sqrt(var / M);
  return est;
}

// ---------------------------------------------------------------------------
// Crank-Nicolson reference solver for the 1d linear backward PDE
//   V_t + 1/2 sigma(z)^2 V_zz + b(t,z) V_z + f(t,z) = 0,  V(T,z) = g(z).
// ---------------------------------------------------------------------------

enum class PdeBoundary { kPeriodic, kReflecting };

struct PdeGrid {
  double z_min = 0.0;
  double z_max = 2.0 * M_PI;
  int num_cells = 400;
  int num_steps = 400;
};

struct Pde1dCoeffs {
  std::function<double(double, double)> drift;   // b(t,z)
  std::function<double(double)> sigma;           // sigma(z)
  std::function<double(double, double)> source;  // f(t,z)
  std::function<double(double)> terminal;        // g(z)
  PdeBoundary bc = PdeBoundary::kPeriodic;
};

namespace detail {

// Thomas algorithm; a = sub, b = diag, c = super (modified in place).
inline Vec solve_tridiag(Vec a, Vec b, Vec c, Vec d) {
  const int n = static_cast<int>(b.size());
  for (int i = 1; i < n; ++i) {
    const double w = a[i] / b[i - 1];
    b[i] -= w * c[i - 1];
    d[i] -= w * d[i - 1];
  }
  Vec x(n);
  x[n - 1] = d[n - 1] / b[n - 1];
  for (int i = n - 2; i >= 0; --i) x[i] = (d[i] - c[i] * x[i + 1]) / b[i];
  return x;
}

// Cyclic tridiagonal via Sherman-Morrison; corner entries
// top_right = A(0,n-1), bottom_left = A(n-1,0).
inline Vec solve_cyclic_tridiag(const Vec& a, const Vec& b, const Vec& c,
                                double top_right, double bottom_left,
                                const Vec& d) {
  const double a0 = top_right;
  const double cn = bottom_left;
  const int n = static_cast<int>(b.size());
  const double gamma = -b[0];
  Vec bb = b;
  bb[0] -= gamma;
  bb[n - 1] -= cn * a0 / gamma;
  Vec y = solve_tridiag(a, bb, c, d);
  Vec u = Vec::Zero(n);
  u[0] = gamma;
  u[n - 1] = cn;
  Vec q = solve_tridiag(a, bb, c, u);
  const double factor = (y[0] + a0 * y[n - 1] / gamma) /
                        (1.0 + q[0] + a0 * q[n - 1] / gamma);
  return y - factor * q;
}

}  // namespace detail

struct Pde1dSolution {
  PdeGrid grid;
  PdeBoundary bc = PdeBoundary::kPeriodic;
  double horizon = 1.0;
  int num_nodes = 0;
  Mat table;  // (num_steps+1) x num_nodes, row i = V(t_i, .)

  double dz() const { return (grid.z_max - grid.z_min) / grid.num_cells; }

  double node_value(int ti, int j) const {
    if (bc == PdeBoundary::kPeriodic) {
      j = ((j % num_nodes) + num_nodes) % num_nodes;
    } else {
      j = std::min(std::max(j, 0), num_nodes - 1);
    }
    return table(ti, j);
  }

  // Bilinear interpolation in (t, z).
  double value(double t, double z) const {
    const double dt = horizon / grid.num_steps;
    double ft = std::min(std::max(t / dt, 0.0), double(grid.num_steps));
    const int ti = std::min(static_cast<int>(ft), grid.num_steps - 1);
    const double wt = ft - ti;

    double zz = z;
    if (bc == PdeBoundary::kPeriodic)
      zz = grid.z_min + wrap_periodic(z - grid.z_min, grid.z_max - grid.z_min);
    else
      zz = std::min(std::max(z, grid.z_min), grid.z_max);
    double fz = (zz - grid.z_min) / dz();
    const int zi = std::min(static_cast<int>(fz), num_nodes - 2 +
                            (bc == PdeBoundary::kPeriodic ? 1 : 0));
    const double wz = fz - zi;

    auto at = [&](int i, int j) { return node_value(i, j); };
    const double v0 = (1 - wz) * at(ti, zi) + wz * at(ti, zi + 1);
    const double v1 = (1 - wz) * at(ti + 1, zi) + wz * at(ti + 1, zi + 1);
    return (1 - wt) * v0 + wt * v1;
  }

  // Central difference of the interpolated value, step = one grid cell.
  double deriv_z(double t, double z) const {
    const double s = dz();
    return (value(t, z + s) - value(t, z - s)) / (2.0 * s);
  }
};

inline Pde1dSolution solve_linear_pde(const Pde1dCoeffs& coeffs,
                                      const PdeGrid& grid, double horizon) {
  const int J = grid.num_cells;
  const int K = grid.num_steps;
  const int nodes = (coeffs.bc == PdeBoundary::kPeriodic) ? J : J + 1;
  const double dz = (grid.z_max - grid.z_min) / J;
  const double dt = horizon / K;

  Pde1dSolution sol;
  sol.grid = grid;
  sol.bc = coeffs.bc;
  sol.horizon = horizon;
  sol.num_nodes = nodes;
  sol.table.resize(K + 1, nodes);

  Vec z(nodes);
  for (int j = 0; j < nodes; ++j) z[j] = grid.z_min + j * dz;
  for (int j = 0; j < nodes; ++j) sol.table(K, j) = coeffs.terminal(z[j]);

  // Advection-resolution sanity bound (accuracy, not stability: CN is
  // unconditionally stable).
  double bmax = 0.0;
  for (int j = 0; j < nodes; ++j)
    bmax = std::max(bmax, std::abs(coeffs.drift(horizon / 2.0, z[j])));
  if (bmax * dt / dz > 2.0)
    std::cerr << "solve_linear_pde: warning, coarse grid (b dt/dz = "
              << bmax * dt / dz << ")\n";

  // Backward sweep with CN: (I - dt/2 L) V^i = (I + dt/2 L) V^{i+1} + dt f.
  for (int i = K - 1; i >= 0; --i) {
    const double t_mid = (i + 0.5) * dt;
    Vec lower(nodes), diag(nodes), upper(nodes);
    double corner_lo = 0.0, corner_hi = 0.0;  // periodic couplings
    for (int j = 0; j < nodes; ++j) {
      const double s2 = 0.5 * coeffs.sigma(z[j]) * coeffs.sigma(z[j]);
      const double b = coeffs.drift(t_mid, z[j]);
      double lo = s2 / (dz * dz) - b / (2.0 * dz);
      double hi = s2 / (dz * dz) + b / (2.0 * dz);
      double mid = -2.0 * s2 / (dz * dz);
      if (coeffs.bc == PdeBoundary::kReflecting) {
        // zero-flux: ghost V_{-1} = V_1, V_{J+1} = V_{J-1}
        if (j == 0) { hi += lo; lo = 0.0; }
        if (j == nodes - 1) { lo += hi; hi = 0.0; }
      }
      lower[j] = lo;
      diag[j] = mid;
      upper[j] = hi;
    }
    if (coeffs.bc == PdeBoundary::kPeriodic) {
      corner_lo = lower[0];       // couples node 0 to node J-1
      corner_hi = upper[nodes - 1];  // couples node J-1 to node 0
    }

    // rhs = (I + dt/2 L) V^{i+1} + dt f
    Vec rhs(nodes);
    const auto& v_next = sol.table.row(i + 1);
    for (int j = 0; j < nodes; ++j) {
      double lv = diag[j] * v_next[j];
      if (j > 0) lv += lower[j] * v_next[j - 1];
      if (j < nodes - 1) lv += upper[j] * v_next[j + 1];
      if (coeffs.bc == PdeBoundary::kPeriodic) {
        if (j == 0) lv += corner_lo * v_next[nodes - 1];
        if (j == nodes - 1) lv += corner_hi * v_next[0];
      }
      rhs[j] = v_next[j] + 0.5 * dt * lv + dt * coeffs.source(t_mid, z[j]);
    }

    Vec a = -0.5 * dt * lower;
    Vec bdiag = Vec::Ones(nodes) - 0.5 * dt * diag;
    Vec c = -0.5 * dt * upper;
    Vec v_new;
    if (coeffs.bc == PdeBoundary::kPeriodic)
      v_new = detail::solve_cyclic_tridiag(a, bdiag, c, -0.5 * dt * corner_lo,
                                           -0.5 * dt * corner_hi, rhs);
    else
      v_new = detail::solve_tridiag(a, bdiag, c, rhs);
    if (!v_new.allFinite())
      throw std::runtime_error("solve_linear_pde: non-finite solution at step " +
                               std::to_string(i));
    sol.table.row(i) = v_new;
  }
  return sol;
}

// Value function V_u(t,z) of a 1d problem under a fixed control, via the
// linear HJ equation solved backward in time.
inline Pde1dSolution linear_pde_reference(
    const ControlProblemSpec& prob,
    const std::function<Vec(double, const Vec&)>& control_fn,
    const PdeGrid& grid) {
  if (prob.n != 1)
    throw std::invalid_argument("linear_pde_reference: 1d state only");
  Pde1dCoeffs coeffs;
  coeffs.bc = prob.is_torus() ? PdeBoundary::kPeriodic : PdeBoundary::kReflecting;
  coeffs.drift = [&prob, control_fn](double t, double z) {
    const Vec x = Vec::Constant(1, z);
    return prob.drift(x, control_fn(t, x))[0];
  };
  coeffs.sigma = [&prob](double z) {
    return prob.diffusion(Vec::Constant(1, z))(0, 0);
  };
  coeffs.source = [&prob, control_fn](double t, double z) {
    const Vec x = Vec::Constant(1, z);
    return prob.running_cost(x, control_fn(t, x));
  };
  coeffs.terminal = [&prob](double z) {
    return prob.terminal_cost(Vec::Constant(1, z));
  };
  return solve_linear_pde(coeffs, grid, prob.horizon);
}

// ---------------------------------------------------------------------------
// Aiyagari reference: ansatz V(t,z,a) = phi(t,z) - a * kappa(t) with
// kappa(t) = exp((alpha-delta)(T-t)) reduces the HJB to a linear 1d PDE in z;
// the optimal consumption is c*(t) = 1/kappa(t) (identically 1 when
// alpha = delta).
// ---------------------------------------------------------------------------

struct AiyagariReference {
  Pde1dSolution phi;
  AnalyticRefs refs;
  std::function<double(double)> kappa;
};

inline AiyagariReference aiyagari_reference(const AiyagariParams& params,
                                            const PdeGrid& grid) {
  const double T = params.horizon;
  const double alpha = params.alpha;
  const double delta = params.delta;
  auto kappa = [alpha, delta, T](double t) {
    return std::exp((alpha - delta) * (T - t));
  };

  Pde1dCoeffs coeffs;
  coeffs.bc = PdeBoundary::kReflecting;
  coeffs.drift = [](double, double z) { return -(z - 1.0); };
  coeffs.sigma = [sz = params.sigma_z](double) { return sz; };
  // phi_t + 1/2 sz^2 phi_zz - (z-1) phi_z + f = 0 with
  // f(t,z) = 1 + log(kappa) - (1-alpha) z kappa + r(z); the a-terms cancel.
  coeffs.source = [kappa, alpha, r = params.tiredness_r](double t, double z) {
    const double k = kappa(t);
    return 1.0 + std::log(k) - (1.0 - alpha) * z * k + r(z);
  };
  coeffs.terminal = params.tiredness_g;

  AiyagariReference out;
  out.phi = solve_linear_pde(coeffs, grid, T);
  out.kappa = kappa;

  auto phi = std::make_shared<Pde1dSolution>(out.phi);
  out.refs.value = [phi, kappa](double t, const Vec& x) {
    return phi->value(t, x[0]) - x[1] * kappa(t);
  };
  out.refs.grad_value = [phi, kappa](double t, const Vec& x) -> Vec {
    Vec g(2);
    g[0] = phi->deriv_z(t, x[0]);
    g[1] = -kappa(t);
    return g;
  };
  out.refs.control = [kappa](double t, const Vec&) -> Vec {
    return Vec::Constant(1, 1.0 / kappa(t));
  };
  return out;
}

// ---------------------------------------------------------------------------
// HJB residual.
// ---------------------------------------------------------------------------

struct ValueWithDerivs {
  std::function<double(double, const Vec&)> value;
  std::function<double(double, const Vec&)> dt;
  std::function<Vec(double, const Vec&)> grad;
  std::function<Mat(double, const Vec&)> hess;
};

// Finite-difference wrapper for a plain scalar value function.
inline ValueWithDerivs fd_value_derivs(
    std::function<double(double, const Vec&)> v, double step = 1e-4) {
  ValueWithDerivs out;
  out.value = v;
  out.dt = [v, step](double t, const Vec& x) {
    return (v(t + step, x) - v(t - step, x)) / (2.0 * step);
  };
  out.grad = [v, step](double t, const Vec& x) -> Vec {
    Vec g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      Vec xp = x, xm = x;
      xp[i] += step;
      xm[i] -= step;
      g[i] = (v(t, xp) - v(t, xm)) / (2.0 * step);
    }
    return g;
  };
  out.hess = [v, step](double t, const Vec& x) -> Mat {
    const Eigen::Index n = x.size();
    Mat H(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j <= i; ++j) {
        Vec xpp = x, xpm = x, xmp = x, xmm = x;
        xpp[i] += step; xpp[j] += step;
        xpm[i] += step; xpm[j] -= step;
        xmp[i] -= step; xmp[j] += step;
        xmm[i] -= step; xmm[j] -= step;
        H(i, j) = H(j, i) =
            (v(t, xpp) - v(t, xpm) - v(t, xmp) + v(t, xmm)) /
            (4.0 * step * step);
      }
    return H;
  };
  return out;
}

// Residual of -V_t + sup_u G(t,x,u,-grad V,-hess V) at each point, with the
// sup evaluated through the problem's closed-form maximizer.
inline Vec hjb_residual(const ControlProblemSpec& prob,
                        const ValueWithDerivs& v,
                        const std::vector<std::pair<double, Vec>>& points) {
  Vec res(points.size());
  for (std::size_t k = 0; k < points.size(); ++k) {
    const auto& [t, x] = points[k];
    const Vec p = -v.grad(t, x);
    const Mat P = -v.hess(t, x);
    const Vec u = prob.argmax_control(t, x, p);
    const Mat sig = prob.diffusion(x);
    const double G = 0.5 * (P * sig * sig.transpose()).trace() +
                     p.dot(prob.drift(x, u)) - prob.running_cost(x, u);
    res[k] = -v.dt(t, x) + G;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Policy-gradient finite-difference oracle: the functional-derivative
// formula and a central finite difference of the cost are each other's
// check, with common random numbers.
// ---------------------------------------------------------------------------

struct PgOracleResult {
  double fd_estimate = 0.0;
  double formula_estimate = 0.0;
  double combined_stderr = 0.0;
};

inline PgOracleResult pg_fd_oracle(
    const ControlProblemSpec& prob,
    const std::function<Vec(double, const Vec&)>& base_control,
    const std::function<Vec(double, const Vec&)>& grad_value_u,
    const std::function<Vec(double, const Vec&)>& perturbation, double eps,
    int N, int num_steps, std::uint64_t seed) {
  if (eps < 1e-4 || eps > 1e-1)
    throw std::invalid_argument("pg_fd_oracle: eps outside [1e-4, 1e-1]");

  auto policy_with = [&](double scale) {
    return pointwise_policy(prob.n_ctrl, [&, scale](double t, const Vec& x) {
      return Vec(base_control(t, x) + scale * perturbation(t, x));
    });
  };

  const Vec cost_plus =
      per_trajectory_costs(prob, policy_with(eps), N, num_steps, seed);
  const Vec cost_minus =
      per_trajectory_costs(prob, policy_with(-eps), N, num_steps, seed);
  const Vec diff = (cost_plus - cost_minus) / (2.0 * eps);

  PgOracleResult out;
  out.fd_estimate = diff.mean();
  const double var_fd =
      (diff.array() - out.fd_estimate).square().sum() / (N - 1);

  // - E int_0^T <grad_u G(t, x_t, u, -grad V_u), phi(t, x_t)> dt under the
  // base control, sampled on the same Brownian paths.
  TrajectoryBatch batch =
      sample_trajectories(prob, policy_with(0.0), N, num_steps, seed);
  Vec formula = Vec::Zero(N);
  for (int j = 0; j < num_steps; ++j) {
    const double t = batch.times[j];
    for (int i = 0; i < N; ++i) {
      const Vec x = batch.states[j].col(i);
      const Vec u = base_control(t, x);
      const Vec p = -grad_value_u(t, x);
      formula[i] -=
          grad_u_hamiltonian(prob, x, u, p).dot(perturbation(t, x)) * batch.h;
    }
  }
  out.formula_estimate = formula.mean();
  const double var_f =
      (formula.array() - out.formula_estimate).square().sum() / (N - 1);
  out.combined_stderr = std::sqrt((var_fd + var_f) / N);
  return out;
}

}  // namespace acflow

#endif  // ACFLOW_EVAL_HPP
