#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "acflow/problems.hpp"
#include "acflow/sde.hpp"

using namespace acflow;

TEST_CASE("wrap_periodic hand-checked values") {
  CHECK(wrap_periodic(1.25, 1.0) == Catch::Approx(0.25));
  CHECK(wrap_periodic(-0.25, 1.0) == Catch::Approx(0.75));
  CHECK(wrap_periodic(2.0 * M_PI + 3.0, 2.0 * M_PI) ==
        Catch::Approx(3.0).margin(1e-12));
  // idempotent, and always lands in [0, period)
  for (double x : {-7.3, -1e-9, 0.0, 0.999999, 5.0, 123.456}) {
    const double w = wrap_periodic(x, 1.0);
    CHECK(w >= 0.0);
    CHECK(w < 1.0);
    CHECK(wrap_periodic(w, 1.0) == w);
  }
}

namespace {

ControlProblemSpec torus_problem(std::function<Vec(const Vec&, const Vec&)> b,
                                 std::function<Mat(const Vec&)> sigma) {
  ControlProblemSpec prob;
  prob.n = prob.n_ctrl = prob.m = 1;
  prob.horizon = 1.0;
  prob.domain = TorusDomain{2.0 * M_PI};
  prob.drift = std::move(b);
  prob.diffusion = std::move(sigma);
  prob.running_cost = [](const Vec&, const Vec&) { return 0.0; };
  prob.terminal_cost = [](const Vec&) { return 0.0; };
  return prob;
}

const BatchPolicy kZeroPolicy = [](double, const Mat& X) {
  return Mat::Zero(1, X.cols());
};

}  // namespace

TEST_CASE("zero drift and diffusion keeps states constant") {
  auto prob = torus_problem(
      [](const Vec&, const Vec&) { return Vec::Zero(1); },
      [](const Vec&) { return Mat::Zero(1, 1); });
  const TrajectoryBatch batch =
      sample_trajectories(prob, kZeroPolicy, 16, 20, 42);
  for (int j = 1; j <= 20; ++j) CHECK(batch.states[j] == batch.states[0]);
  CHECK(batch.times[20] == Catch::Approx(prob.horizon).margin(0.0));
}

TEST_CASE("pure drift lands at wrap(x0 + T)") {
  auto prob = torus_problem(
      [](const Vec&, const Vec&) { return Vec::Ones(1); },
      [](const Vec&) { return Mat::Zero(1, 1); });
  const TrajectoryBatch batch =
      sample_trajectories(prob, kZeroPolicy, 32, 100, 5);
  for (int i = 0; i < 32; ++i) {
    const double expect =
        wrap_periodic(batch.states[0](0, i) + prob.horizon, 2.0 * M_PI);
    CHECK(batch.states[100](0, i) == Catch::Approx(expect).margin(1e-10));
  }
}

TEST_CASE("determinism and per-trajectory stream independence") {
  const ControlProblemSpec prob = lq_problem(LqParams::defaults(2));
  auto policy = [](double, const Mat& X) { return Mat(0.5 * X.array().sin()); };
  const TrajectoryBatch a = sample_trajectories(prob, policy, 100, 25, 99);
  const TrajectoryBatch b = sample_trajectories(prob, policy, 100, 25, 99);
  const TrajectoryBatch wide = sample_trajectories(prob, policy, 200, 25, 99);

  for (int j = 0; j <= 25; ++j) {
    CHECK(a.states[j] == b.states[j]);  // bitwise
    CHECK(a.states[j] == wide.states[j].leftCols(100));
  }
  for (int j = 0; j < 25; ++j)
    CHECK(a.increments[j] == wide.increments[j].leftCols(100));
}

TEST_CASE("brownian increments have the right moments") {
  const ControlProblemSpec prob = lq_problem(LqParams::defaults(1));
  const int N = 1000, NT = 100;  // N * NT = 1e5 samples
  const TrajectoryBatch batch =
      sample_trajectories(prob, kZeroPolicy, N, NT, 7);
  const double h = batch.h;

  double sum = 0.0, sumsq = 0.0;
  for (int j = 0; j < NT; ++j) {
    sum += batch.increments[j].sum();
    sumsq += batch.increments[j].squaredNorm();
  }
  const double count = static_cast<double>(N) * NT;
  const double mean = sum / count;
  const double var = sumsq / count - mean * mean;
  CHECK(std::abs(mean) < 4.0 * std::sqrt(h / count));
  CHECK(var == Catch::Approx(h).epsilon(0.05));
}

TEST_CASE("torus states stay in [0, period)") {
  const ControlProblemSpec prob = lq_problem(LqParams::defaults(2));
  auto policy = [](double, const Mat& X) { return Mat(2.0 * X.array().cos()); };
  const TrajectoryBatch batch = sample_trajectories(prob, policy, 64, 50, 11);
  for (int j = 0; j <= 50; ++j) {
    CHECK(batch.states[j].minCoeff() >= 0.0);
    CHECK(batch.states[j].maxCoeff() < 2.0 * M_PI);
  }
}

TEST_CASE("euclidean initial states fill the init box") {
  const ControlProblemSpec prob = aiyagari_problem(AiyagariParams{});
  const TrajectoryBatch batch =
      sample_trajectories(prob, [](double, const Mat& X) {
        return Mat::Ones(1, X.cols());
      }, 500, 5, 3);
  CHECK(batch.states[0].minCoeff() >= 0.0);
  CHECK(batch.states[0].maxCoeff() <= 2.0);
  CHECK(batch.states[0].row(0).maxCoeff() > 1.5);  // actually spread out
  CHECK(batch.states[0].row(1).minCoeff() < 0.5);
}

TEST_CASE("strong self-convergence under step halving") {
  // Coarse path re-integrated by hand from the fine batch's Brownian
  // increments (two fine increments summed per coarse step): an independent
  // Euler-Maruyama oracle for the order ~0.5-1.0 strong error.
  const ControlProblemSpec prob = lq_problem(LqParams::defaults(1));
  const auto refs = *prob.analytic;
  auto policy = pointwise_policy(1, [refs](double t, const Vec& x) {
    return refs.control(t, x);
  });

  const int N = 256;
  std::vector<double> hs, errs;
  for (int nt : {25, 50, 100}) {
    const TrajectoryBatch fine =
        sample_trajectories(prob, policy, N, 2 * nt, 77);
    const double H = prob.horizon / nt;
    double err = 0.0;
    for (int i = 0; i < N; ++i) {
      Vec x = fine.states[0].col(i);
      for (int j = 0; j < nt; ++j) {
        const Vec xi = fine.increments[2 * j].col(i) +
                       fine.increments[2 * j + 1].col(i);
        const Vec u = refs.control(j * H, x);
        x = wrap_periodic(Vec(x + prob.drift(x, u) * H + prob.diffusion(x) * xi),
                          prob.period());
      }
      // distance on the circle
      double d = std::abs(x[0] - fine.states[2 * nt](0, i));
      d = std::min(d, 2.0 * M_PI - d);
      err += d;
    }
    hs.push_back(H);
    errs.push_back(err / N);
  }
  const double slope = std::log(errs[0] / errs[2]) / std::log(hs[0] / hs[2]);
  CHECK(slope > 0.4);
  CHECK(slope < 1.4);
}

TEST_CASE("non-finite states abort with a diagnostic") {
  ControlProblemSpec prob;
  prob.n = prob.n_ctrl = prob.m = 1;
  prob.horizon = 1.0;
  prob.domain = BoxDomain{Vec::Zero(1), Vec::Ones(1)};
  prob.drift = [](const Vec& x, const Vec&) {
    return Vec(1e200 * (x.array() + 1.0));
  };
  prob.diffusion = [](const Vec&) { return Mat::Zero(1, 1); };
  prob.running_cost = [](const Vec&, const Vec&) { return 0.0; };
  prob.terminal_cost = [](const Vec&) { return 0.0; };
  CHECK_THROWS_AS(sample_trajectories(prob, kZeroPolicy, 2, 5, 1),
                  std::runtime_error);
  CHECK_THROWS_AS(sample_trajectories(prob, kZeroPolicy, 0, 5, 1),
                  std::invalid_argument);
}
