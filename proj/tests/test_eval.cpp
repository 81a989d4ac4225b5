#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "acflow/eval.hpp"
#include "acflow/oracles.hpp"
#include "acflow/problems.hpp"

using namespace acflow;

TEST_CASE("l2_rel_error closed-form cases") {
  auto pts = [](int i) { return 0.1 * i + 0.05; };
  auto ref = [](double x) { return Vec::Constant(1, 2.0 + x); };

  CHECK(l2_rel_error(50, pts, ref, ref) == 0.0);
  CHECK(l2_rel_error(
            50, pts, [&](double x) { return Vec(1.1 * ref(x)); }, ref) ==
        Catch::Approx(0.1).margin(1e-12));

  auto const_ref = [](double) { return Vec::Constant(1, 2.0); };
  CHECK(l2_rel_error(
            50, pts,
            [&](double x) { return Vec(const_ref(x).array() + 0.5); },
            const_ref) == Catch::Approx(0.25).margin(1e-12));

  CHECK_THROWS_AS(
      l2_rel_error(10, pts, ref, [](double) { return Vec::Zero(1); }),
      std::invalid_argument);
}

TEST_CASE("estimate_cost closed forms and stderr decay") {
  ControlProblemSpec prob;
  prob.n = prob.n_ctrl = prob.m = 1;
  prob.horizon = 1.0;
  prob.domain = TorusDomain{2.0 * M_PI};
  prob.drift = [](const Vec&, const Vec& u) { return u; };
  prob.diffusion = [](const Vec&) { return Mat::Identity(1, 1); };
  prob.running_cost = [](const Vec&, const Vec&) { return 3.0; };
  prob.terminal_cost = [](const Vec&) { return 0.0; };
  auto zero = [](double, const Mat& X) { return Mat::Zero(1, X.cols()); };

  const CostEstimate c1 = estimate_cost(prob, zero, 64, 20, 1);
  CHECK(c1.mean == Catch::Approx(3.0).margin(1e-12));
  CHECK(c1.stderr_ == Catch::Approx(0.0).margin(1e-12));

  prob.running_cost = [](const Vec&, const Vec&) { return 0.0; };
  prob.terminal_cost = [](const Vec&) { return -1.25; };
  const CostEstimate c2 = estimate_cost(prob, zero, 64, 20, 1);
  CHECK(c2.mean == Catch::Approx(-1.25).margin(1e-12));

  // LQ at the optimum: E[cost] = mean of V*(0, x0) = beta0 T over the torus
  const ControlProblemSpec lq = lq_problem(LqParams::defaults(1));
  const auto refs = *lq.analytic;
  auto ustar = pointwise_policy(1, [refs](double t, const Vec& x) {
    return refs.control(t, x);
  });
  const CostEstimate opt = estimate_cost(lq, ustar, 4000, 100, 5);
  CHECK(std::abs(opt.mean - 0.5) < 4.0 * opt.stderr_);

  const CostEstimate small = estimate_cost(lq, ustar, 500, 50, 6);
  const CostEstimate big = estimate_cost(lq, ustar, 2000, 50, 6);
  CHECK(small.stderr_ / big.stderr_ > 1.8);
  CHECK(small.stderr_ / big.stderr_ < 2.2);

  CHECK_THROWS_AS(estimate_cost(lq, ustar, 1, 10, 0), std::invalid_argument);
}

TEST_CASE("pde solver trivial and separable cases") {
  PdeGrid grid;
  grid.z_min = 0.0;
  grid.z_max = 2.0 * M_PI;
  grid.num_cells = 200;
  grid.num_steps = 200;

  Pde1dCoeffs coeffs;
  coeffs.bc = PdeBoundary::kPeriodic;
  coeffs.drift = [](double, double) { return 0.0; };
  coeffs.sigma = [](double) { return 0.0; };
  coeffs.source = [](double, double) { return 0.0; };
  coeffs.terminal = [](double) { return 0.0; };
  const Pde1dSolution zero = solve_linear_pde(coeffs, grid, 1.0);
  CHECK(zero.table.cwiseAbs().maxCoeff() == 0.0);

  // b = 0, sigma = 0, source r(z): V(t,z) = (T - t) r(z)
  coeffs.source = [](double, double z) { return std::sin(z) + 2.0; };
  const Pde1dSolution sep = solve_linear_pde(coeffs, grid, 1.0);
  double worst = 0.0;
  for (double t : {0.0, 0.25, 0.7, 1.0})
    for (double z : {0.3, 2.0, 5.5})
      worst = std::max(worst, std::abs(sep.value(t, z) -
                                       (1.0 - t) * (std::sin(z) + 2.0)));
  CHECK(worst < 1e-3);

  // terminal row equals g
  coeffs.terminal = [](double z) { return std::cos(z); };
  const Pde1dSolution withg = solve_linear_pde(coeffs, grid, 1.0);
  for (int j = 0; j < withg.num_nodes; j += 7) {
    const double z = grid.z_min + j * withg.dz();
    CHECK(withg.table(grid.num_steps, j) == Catch::Approx(std::cos(z)));
  }
}

TEST_CASE("pde reference matches analytic LQ and self-converges at order 2") {
  const auto checks = oracles::pde_suite();
  for (const auto& c : checks) {
    INFO(c.name << " value=" << c.value << " " << c.note);
    CHECK(c.pass);
  }
}

TEST_CASE("aiyagari reference reproduces a manufactured solution") {
  // With alpha = delta (kappa = 1) the reduced equation for phi(t,z) is
  //   phi_t + sigma_z^2/2 phi_zz - (z-1) phi_z + f = 0,
  //   f(z) = 1 - (1-alpha) z + r(z).
  // Choosing phi_exact = g_m(z) + (T-t) c0 with g_m'(boundary) = 0 makes
  // the reflecting boundary exact; r is back-solved from f.
  AiyagariParams params;
  const double zlo = -2.0, zhi = 4.0, c0 = 0.3;
  const double alpha = params.alpha;
  auto g_m = [&](double z) { return std::cos(M_PI * (z - zlo) / (zhi - zlo)); };
  auto g_m1 = [&](double z) {
    const double w = M_PI / (zhi - zlo);
    return -w * std::sin(w * (z - zlo));
  };
  auto g_m2 = [&](double z) {
    const double w = M_PI / (zhi - zlo);
    return -w * w * std::cos(w * (z - zlo));
  };
  const double s2 = 0.5 * params.sigma_z * params.sigma_z;
  auto f_needed = [&](double z) {
    return c0 - s2 * g_m2(z) + (z - 1.0) * g_m1(z);
  };
  params.tiredness_r = [=](double z) {
    return f_needed(z) - 1.0 + (1.0 - alpha) * z;
  };
  params.tiredness_g = g_m;

  PdeGrid grid;
  grid.z_min = zlo;
  grid.z_max = zhi;
  grid.num_cells = 600;
  grid.num_steps = 400;
  const AiyagariReference ref = aiyagari_reference(params, grid);

  double worst = 0.0;
  for (double t : {0.0, 0.35, 0.8})
    for (double z : {0.0, 0.75, 1.5, 2.0})
      for (double a : {0.0, 1.0, 2.0}) {
        Vec x(2);
        x << z, a;
        const double expect = g_m(z) + (params.horizon - t) * c0 - a;
        worst = std::max(worst, std::abs(ref.refs.value(t, x) - expect));
      }
  CHECK(worst < 2e-3);

  // control reference c* = 1/kappa = 1 and grad reference (phi_z, -1)
  for (double t : {0.0, 0.5}) {
    Vec x(2);
    x << 1.2, 0.7;
    CHECK(ref.refs.control(t, x)[0] == Catch::Approx(1.0).margin(1e-12));
    const Vec gv = ref.refs.grad_value(t, x);
    CHECK(gv[0] == Catch::Approx(g_m1(1.2)).margin(5e-3));
    CHECK(gv[1] == Catch::Approx(-1.0).margin(1e-12));
  }
}

TEST_CASE("aiyagari default reference basics") {
  AiyagariParams params;
  PdeGrid grid;
  grid.z_min = -2.0;
  grid.z_max = 4.0;
  grid.num_cells = 300;
  grid.num_steps = 200;
  const AiyagariReference ref = aiyagari_reference(params, grid);

  // terminal value = g(z) - a; kappa(T) = 1; c* = 1 throughout (alpha=delta)
  for (double z : {0.0, 1.0, 2.0})
    for (double a : {0.0, 1.5}) {
      Vec x(2);
      x << z, a;
      CHECK(ref.refs.value(params.horizon, x) ==
            Catch::Approx(0.2 * std::exp(0.2 * z) - a).margin(1e-9));
      CHECK(ref.refs.control(0.3, x)[0] == Catch::Approx(1.0).margin(1e-12));
    }
  CHECK(ref.kappa(0.0) == Catch::Approx(1.0));
}

TEST_CASE("pg_fd_oracle sanity cases") {
  const ControlProblemSpec prob = lq_problem(LqParams::defaults(1));
  const auto refs = *prob.analytic;
  auto ustar = [refs](double t, const Vec& x) { return refs.control(t, x); };
  auto gradv = [refs](double t, const Vec& x) { return refs.grad_value(t, x); };

  const auto zero = pg_fd_oracle(
      prob, ustar, gradv, [](double, const Vec&) { return Vec::Zero(1); },
      0.01, 200, 20, 3);
  CHECK(zero.fd_estimate == 0.0);
  CHECK(zero.formula_estimate == 0.0);

  // at the optimum the formula term is identically zero
  const auto opt = pg_fd_oracle(
      prob, ustar, gradv,
      [](double, const Vec& x) { return Vec::Constant(1, std::sin(x[0])); },
      0.01, 20000, 100, 4);
  CHECK(opt.formula_estimate == Catch::Approx(0.0).margin(1e-13));
  CHECK(std::abs(opt.fd_estimate) < 4.0 * opt.combined_stderr);

  CHECK_THROWS_AS(
      pg_fd_oracle(prob, ustar, gradv,
                   [](double, const Vec&) { return Vec::Zero(1); }, 0.5, 10,
                   10, 0),
      std::invalid_argument);
}

TEST_CASE("domain samplers are deterministic and in range") {
  const ControlProblemSpec lq = lq_problem(LqParams::defaults(2));
  for (int i = 0; i < 50; ++i) {
    const Vec x = sample_domain_point(lq, 9, i);
    CHECK(x.minCoeff() >= 0.0);
    CHECK(x.maxCoeff() < 2.0 * M_PI);
    CHECK(x == sample_domain_point(lq, 9, i));
    const double t = sample_time_point(lq, 9, i);
    CHECK(t >= 0.0);
    CHECK(t <= lq.horizon);
  }
  const ControlProblemSpec aiy = aiyagari_problem(AiyagariParams{});
  for (int i = 0; i < 50; ++i) {
    const Vec x = sample_domain_point(aiy, 9, i);
    CHECK(x.minCoeff() >= 0.0);
    CHECK(x.maxCoeff() <= 2.0);
  }
}
