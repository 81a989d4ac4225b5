#ifndef ACFLOW_SDE_HPP
#define ACFLOW_SDE_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "acflow/problem.hpp"
#include "acflow/rng.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace acflow {

namespace detail {

// glibc's default trim/mmap thresholds make the allocator return the large
// short-lived batch matrices to the kernel on every iteration; raising them
// once removes that page churn.
inline void tune_malloc() {
#if defined(__GLIBC__)
  static const bool done = [] {
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
    return true;
  }();
  (void)done;
#endif
}

}  // namespace detail

// Feedback policy evaluated on a batch of states (columns).
using BatchPolicy = std::function<Mat(double t, const Mat& states)>;

inline BatchPolicy pointwise_policy(int n_ctrl,
                                    std::function<Vec(double, const Vec&)> u) {
  return [n_ctrl, u](double t, const Mat& X) -> Mat {
    Mat U(n_ctrl, X.cols());
    for (Eigen::Index i = 0; i < X.cols(); ++i) U.col(i) = u(t, X.col(i));
    return U;
  };
}

// Map each coordinate to [0, period) by exact floating remainder; idempotent.
inline double wrap_periodic(double x, double period) {
  if (period <= 0.0) throw std::invalid_argument("wrap_periodic: period <= 0");
  double r = x - period * std::floor(x / period);
  if (r >= period) r -= period;
  if (r < 0.0) r = 0.0;
  return r;
}

inline Vec wrap_periodic(const Vec& x, double period) {
  Vec r(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) r[i] = wrap_periodic(x[i], period);
  return r;
}

// N Euler-Maruyama sample paths with their Brownian increments. Column i of
// every slice is trajectory i; slices are indexed by time step.
struct TrajectoryBatch {
  double h = 0.0;
  int num_steps = 0;
  int num_traj = 0;
  std::uint64_t seed = 0;
  Vec times;                    // (num_steps+1)
  std::vector<Mat> states;      // num_steps+1 slices, each n x N
  std::vector<Mat> increments;  // num_steps slices, each m x N
  std::vector<Mat> controls;    // num_steps slices, each n' x N (u applied)
};

// Euler-Maruyama sampling x_{t+h} = x_t + b(x_t,u) h + sigma(x_t) xi,
// xi ~ N(0, h I_m). Trajectory i depends only on (seed, i), so growing the
// batch leaves existing trajectories unchanged.
inline TrajectoryBatch sample_trajectories(const ControlProblemSpec& prob,
                                           const BatchPolicy& policy, int N,
                                           int num_steps, std::uint64_t seed) {
  if (N < 1 || num_steps < 1)
    throw std::invalid_argument("sample_trajectories: need N >= 1, num_steps >= 1");
  detail::tune_malloc();

  const int n = prob.n;
  const int m = prob.m;
  const double h = prob.horizon / num_steps;
  const double sqrt_h = std::sqrt(h);

  TrajectoryBatch batch;
  batch.h = h;
  batch.num_steps = num_steps;
  batch.num_traj = N;
  batch.seed = seed;
  batch.times = Vec::LinSpaced(num_steps + 1, 0.0, prob.horizon);
  batch.times[num_steps] = prob.horizon;  // exact, no LinSpaced rounding
  batch.states.resize(num_steps + 1);
  batch.increments.resize(num_steps);
  batch.controls.resize(num_steps);

  // Initial states: uniform on the torus or on the init box.
  Mat x0(n, N);
  for (int i = 0; i < N; ++i) {
    for (int d = 0; d < n; ++d) {
      const double u01 =
          rng::uniform(seed, rng::Purpose::kInitState, i, 0, d);
      if (prob.is_torus()) {
        x0(d, i) = u01 * prob.period();
        if (x0(d, i) >= prob.period()) x0(d, i) = 0.0;
      } else {
        const auto& box = std::get<BoxDomain>(prob.domain);
        x0(d, i) = box.lo[d] + u01 * (box.hi[d] - box.lo[d]);
      }
    }
  }
  batch.states[0] = x0;

  for (int j = 0; j < num_steps; ++j) {
    const double t = j * h;
    const Mat& x = batch.states[j];
    Mat u = policy(t, x);
    Mat xi(m, N);
    for (int i = 0; i < N; ++i)
      xi.col(i) = sqrt_h * rng::standard_normals(
                               seed, rng::Purpose::kIncrement, i, j, m);

    Mat next(n, N);
    for (int i = 0; i < N; ++i) {
      next.col(i) = x.col(i) + prob.drift(x.col(i), u.col(i)) * h +
                    prob.diffusion(x.col(i)) * xi.col(i);
      if (!next.col(i).allFinite())
        throw std::runtime_error(
            "sample_trajectories: non-finite state at trajectory " +
            std::to_string(i) + ", step " + std::to_string(j));
    }
    if (prob.is_torus()) {
      const double period = prob.period();
      for (int i = 0; i < N; ++i)
        for (int d = 0; d < n; ++d) next(d, i) = wrap_periodic(next(d, i), period);
    }
    batch.states[j + 1] = std::move(next);
    batch.increments[j] = std::move(xi);
    batch.controls[j] = std::move(u);
  }
  return batch;
}

}  // namespace acflow

#endif  // ACFLOW_SDE_HPP
