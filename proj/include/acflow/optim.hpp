#ifndef ACFLOW_OPTIM_HPP
#define ACFLOW_OPTIM_HPP

#include <cmath>
#include <stdexcept>

#include <Eigen/Core>

namespace acflow {

using Vec = Eigen::VectorXd;

// First/second moment accumulators for one parameter vector. The eps sits
// outside the square root (PyTorch convention).
struct AdamState {
  Vec m;
  Vec v;
  long step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit AdamState(Eigen::Index size = 0)
      : m(Vec::Zero(size)), v(Vec::Zero(size)) {}
};

// Bias-corrected Adam update direction mhat / (sqrt(vhat) + eps). The caller
// applies params -= step_size * direction.
inline Vec adam_direction(AdamState& state, const Vec& grad) {
  if (grad.size() != state.m.size())
    throw std::invalid_argument("adam_direction: gradient length mismatch");
  if (!grad.allFinite())
    throw std::invalid_argument("adam_direction: non-finite gradient");

  state.step_count += 1;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(state.beta1, state.step_count);
  const double c2 = 1.0 - std::pow(state.beta2, state.step_count);
  return (state.m / c1).cwiseQuotient(
      ((state.v / c2).cwiseSqrt().array() + state.eps).matrix());
}

}  // namespace acflow

#endif  // ACFLOW_OPTIM_HPP
