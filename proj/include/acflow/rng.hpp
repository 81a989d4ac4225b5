#ifndef ACFLOW_RNG_HPP
#define ACFLOW_RNG_HPP

#include <cmath>
#include <cstdint>

#include <Eigen/Core>

// Counter-based random streams. Every draw is a pure function of
// (seed, purpose, stream, step, counter), so trajectories are independent
// of batch size and safe to generate in any order.

namespace acflow::rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Purpose tags keep the init / increment / parameter / evaluation streams
// disjoint even under the same seed.
enum class Purpose : std::uint64_t {
  kInitState = 0x11,
  kIncrement = 0x22,
  kParamInit = 0x33,
  kEvalPoints = 0x44,
  kGeneric = 0x55,
};

inline std::uint64_t counter_key(std::uint64_t seed, Purpose purpose,
                                 std::uint64_t stream, std::uint64_t step,
                                 std::uint64_t counter) {
  std::uint64_t h = splitmix64(seed ^ 0x243f6a8885a308d3ULL);
  h = splitmix64(h ^ static_cast<std::uint64_t>(purpose));
  h = splitmix64(h ^ stream);
  h = splitmix64(h ^ step);
  h = splitmix64(h ^ counter);
  return h;
}

// Uniform in (0, 1]; never returns 0 so it is safe under log().
inline double uniform_open(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

inline double uniform(std::uint64_t seed, Purpose purpose, std::uint64_t stream,
                      std::uint64_t step, std::uint64_t counter) {
  return uniform_open(counter_key(seed, purpose, stream, step, counter));
}

// Box-Muller pair from two counter draws.
inline void normal_pair(std::uint64_t seed, Purpose purpose, std::uint64_t stream,
                        std::uint64_t step, std::uint64_t counter, double& z0,
                        double& z1) {
  const double u1 = uniform(seed, purpose, stream, step, 2 * counter);
  const double u2 = uniform(seed, purpose, stream, step, 2 * counter + 1);
  const double rad = std::sqrt(-2.0 * std::log(u1));
  const double ang = 2.0 * M_PI * u2;
  z0 = rad * std::cos(ang);
  z1 = rad * std::sin(ang);
}

// count i.i.d. standard normals for one (stream, step) cell.
inline Eigen::VectorXd standard_normals(std::uint64_t seed, Purpose purpose,
                                        std::uint64_t stream, std::uint64_t step,
                                        int count) {
  Eigen::VectorXd out(count);
  for (int k = 0; k < count; k += 2) {
    double z0, z1;
    normal_pair(seed, purpose, stream, step, static_cast<std::uint64_t>(k / 2),
                z0, z1);
    out[k] = z0;
    if (k + 1 < count) out[k + 1] = z1;
  }
  return out;
}

}  // namespace acflow::rng

#endif  // ACFLOW_RNG_HPP
