#include <catch2/catch_amalgamated.hpp>

#include "acflow/optim.hpp"
#include "acflow/rng.hpp"

using namespace acflow;

TEST_CASE("first step with eps=0 returns the sign pattern") {
  AdamState st(3);
  st.eps = 0.0;
  const Vec g = (Vec(3) << 4.0, -0.001, 7e3).finished();
  const Vec dir = adam_direction(st, g);
  CHECK(dir[0] == Catch::Approx(1.0));
  CHECK(dir[1] == Catch::Approx(-1.0));
  CHECK(dir[2] == Catch::Approx(1.0));
  CHECK(st.step_count == 1);
}

TEST_CASE("zero gradient at first step gives zero direction") {
  AdamState st(4);
  const Vec dir = adam_direction(st, Vec::Zero(4));
  CHECK(dir.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("directions are scale-free in the gradient") {
  const int d = 6, steps = 100;
  AdamState a(d), b(d);
  a.eps = b.eps = 0.0;
  const double c = 37.5;
  double worst = 0.0;
  for (int k = 0; k < steps; ++k) {
    const Vec g = rng::standard_normals(3, rng::Purpose::kGeneric, 0, k, d);
    const Vec da = adam_direction(a, g);
    const Vec db = adam_direction(b, Vec(c * g));
    worst = std::max(worst, (da - db).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("constant gradients drive the direction to the sign pattern") {
  AdamState st(2);
  st.eps = 0.0;
  const Vec g = (Vec(2) << -2.0, 0.5).finished();
  Vec dir;
  for (int k = 0; k < 50; ++k) dir = adam_direction(st, g);
  CHECK(dir[0] == Catch::Approx(-1.0).margin(1e-6));
  CHECK(dir[1] == Catch::Approx(1.0).margin(1e-6));
  CHECK(dir.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
}

TEST_CASE("determinism and input validation") {
  AdamState a(3), b(3);
  const Vec g = (Vec(3) << 1.0, 2.0, 3.0).finished();
  CHECK(adam_direction(a, g) == adam_direction(b, g));
  CHECK(a.m == b.m);
  CHECK(a.v == b.v);
  CHECK(a.v.minCoeff() >= 0.0);

  CHECK_THROWS_AS(adam_direction(a, Vec::Zero(4)), std::invalid_argument);
  Vec bad = g;
  bad[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(adam_direction(a, bad), std::invalid_argument);
}
