#ifndef ACFLOW_NETS_HPP
#define ACFLOW_NETS_HPP

#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "acflow/rng.hpp"

namespace acflow {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using RowVec = Eigen::RowVectorXd;

enum class InputKind { kTorus, kEuclidean };

// Elementwise map applied after the affine head. Softplus keeps a positive
// output (consumption-style controls).
enum class OutputTransform { kIdentity, kSoftplus };

inline double softplus(double x) {
  return x > 30.0 ? x : std::log1p(std::exp(x));
}
inline double softplus_deriv(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Architecture of one approximator: input features (trigonometric on a
// torus, raw coordinates otherwise, time appended as t/T when present)
// feeding an affine layer, `num_blocks` residual blocks
//   y <- y + W2 * relu(W1 * y + b1) + b2,
// and an affine head.
struct NetworkArch {
  InputKind input_kind = InputKind::kTorus;
  int state_dim = 1;
  int output_dim = 1;
  int hidden_width = 32;
  int num_blocks = 2;
  bool include_time = false;
  int num_freq = 4;              // torus only
  double period = 2.0 * M_PI;    // torus only
  double time_scale = 1.0;       // horizon T; time enters as t/T
  OutputTransform output_transform = OutputTransform::kIdentity;

  int feature_dim() const {
    const int base = (input_kind == InputKind::kTorus)
                         ? 2 * num_freq * state_dim
                         : state_dim;
    return base + (include_time ? 1 : 0);
  }

  int param_count() const {
    const int f = feature_dim();
    const int w = hidden_width;
    int count = w * f + w;                       // input affine
    count += num_blocks * (2 * w * w + 2 * w);   // residual blocks
    count += output_dim * w + output_dim;        // head
    return count;
  }
};

// Trigonometric features: (sin(2 pi k x_i / period), cos(2 pi k x_i / period))
// for i = 1..n, k = 1..M, per column of X.
inline Mat trig_features(const Mat& X, int M, double period) {
  if (M < 1) throw std::invalid_argument("trig_features: M >= 1 required");
  const int n = static_cast<int>(X.rows());
  const Eigen::Index B = X.cols();
  const double omega = 2.0 * M_PI / period;
  Mat F(2 * M * n, B);
  for (int i = 0; i < n; ++i)
    for (int k = 1; k <= M; ++k) {
      const int row = 2 * (i * M + (k - 1));
      F.row(row) = (k * omega * X.row(i).array()).sin();
      F.row(row + 1) = (k * omega * X.row(i).array()).cos();
    }
  return F;
}

inline Vec trig_features(const Vec& x, int M, double period) {
  return trig_features(Mat(x), M, period).col(0);
}

namespace detail {

struct ParamLayout {
  // offsets into the flat parameter vector
  int w_in = 0, b_in = 0;
  std::vector<int> w1, b1, w2, b2;
  int w_head = 0, b_head = 0;
  int total = 0;
};

inline ParamLayout make_layout(const NetworkArch& a) {
  ParamLayout lo;
  const int f = a.feature_dim();
  const int w = a.hidden_width;
  int at = 0;
  lo.w_in = at; at += w * f;
  lo.b_in = at; at += w;
  for (int b = 0; b < a.num_blocks; ++b) {
    lo.w1.push_back(at); at += w * w;
    lo.b1.push_back(at); at += w;
    lo.w2.push_back(at); at += w * w;
    lo.b2.push_back(at); at += w;
  }
  lo.w_head = at; at += a.output_dim * w;
  lo.b_head = at; at += a.output_dim;
  lo.total = at;
  return lo;
}

using CMap = Eigen::Map<const Mat>;
using MMap = Eigen::Map<Mat>;
using CVMap = Eigen::Map<const Vec>;
using VMap = Eigen::Map<Vec>;

}  // namespace detail

// Intermediate activations of one batched forward pass, kept for VJP.
struct NetWorkspace {
  Mat feat;                 // F x B
  std::vector<Mat> ys;      // num_blocks+1 slices, W x B (block inputs)
  std::vector<Mat> pre;     // num_blocks slices, W x B (pre-activations)
  Mat head_pre;             // out x B, before the output transform
  Mat out;                  // out x B
};

// Feature map for a batch of states, with time row t/T appended when the
// arch asks for it. `tvals` may be empty for time-independent networks.
inline Mat net_features(const NetworkArch& arch, const Mat& X,
                        const RowVec& tvals) {
  if (X.rows() != arch.state_dim)
    throw std::invalid_argument("net_features: state dimension mismatch");
  Mat F(arch.feature_dim(), X.cols());
  if (arch.input_kind == InputKind::kTorus)
    F.topRows(arch.feature_dim() - (arch.include_time ? 1 : 0)) =
        trig_features(X, arch.num_freq, arch.period);
  else
    F.topRows(arch.state_dim) = X;
  if (arch.include_time) {
    if (tvals.size() != X.cols())
      throw std::invalid_argument("net_features: time row size mismatch");
    F.row(F.rows() - 1) = tvals / arch.time_scale;
  }
  return F;
}

// Batched forward pass; columns are independent inputs.
inline Mat forward_batch(const NetworkArch& arch, const Vec& params,
                         const Mat& X, const RowVec& tvals,
                         NetWorkspace* ws = nullptr) {
  using namespace detail;
  const ParamLayout lo = make_layout(arch);
  if (params.size() != lo.total)
    throw std::invalid_argument("forward_batch: parameter count mismatch");
  const int f = arch.feature_dim();
  const int w = arch.hidden_width;

  Mat feat = net_features(arch, X, tvals);
  CMap W_in(params.data() + lo.w_in, w, f);
  CVMap b_in(params.data() + lo.b_in, w);
  Mat y = (W_in * feat).colwise() + b_in;

  NetWorkspace local;
  NetWorkspace& work = ws ? *ws : local;
  work.feat = std::move(feat);
  work.ys.assign(1, y);
  work.pre.clear();

  for (int blk = 0; blk < arch.num_blocks; ++blk) {
    CMap W1(params.data() + lo.w1[blk], w, w);
    CVMap b1(params.data() + lo.b1[blk], w);
    CMap W2(params.data() + lo.w2[blk], w, w);
    CVMap b2(params.data() + lo.b2[blk], w);
    Mat pre = (W1 * y).colwise() + b1;
    y += (W2 * pre.cwiseMax(0.0)).colwise() + b2;
    work.pre.push_back(std::move(pre));
    work.ys.push_back(y);
  }

  CMap W_head(params.data() + lo.w_head, arch.output_dim, w);
  CVMap b_head(params.data() + lo.b_head, arch.output_dim);
  Mat out = (W_head * y).colwise() + b_head;
  if (!out.allFinite())
    throw std::runtime_error("forward_batch: non-finite output at head");
  work.head_pre = out;
  if (arch.output_transform == OutputTransform::kSoftplus)
    out = out.unaryExpr([](double v) { return softplus(v); });
  work.out = out;
  return out;
}

// Reverse-mode gradients of sum_i <cotangent_i, forward(x_i)>.
// Accumulates into param_grad (+=); when x_grad is non-null it receives the
// gradient with respect to the raw state inputs (chained through features).
inline void vjp_batch(const NetworkArch& arch, const Vec& params,
                      const NetWorkspace& ws, const Mat& cotangent,
                      Vec& param_grad, Mat* x_grad = nullptr) {
  using namespace detail;
  const ParamLayout lo = make_layout(arch);
  if (param_grad.size() != lo.total)
    throw std::invalid_argument("vjp_batch: param_grad size mismatch");
  const int w = arch.hidden_width;
  const int f = arch.feature_dim();

  Mat cot = cotangent;
  if (arch.output_transform == OutputTransform::kSoftplus)
    cot = cot.cwiseProduct(
        ws.head_pre.unaryExpr([](double v) { return softplus_deriv(v); }));

  CMap W_head(params.data() + lo.w_head, arch.output_dim, w);
  MMap gW_head(param_grad.data() + lo.w_head, arch.output_dim, w);
  VMap gb_head(param_grad.data() + lo.b_head, arch.output_dim);
  gW_head.noalias() += cot * ws.ys.back().transpose();
  gb_head += cot.rowwise().sum();
  Mat dy = W_head.transpose() * cot;

  for (int blk = arch.num_blocks - 1; blk >= 0; --blk) {
    CMap W1(params.data() + lo.w1[blk], w, w);
    CMap W2(params.data() + lo.w2[blk], w, w);
    MMap gW1(param_grad.data() + lo.w1[blk], w, w);
    VMap gb1(param_grad.data() + lo.b1[blk], w);
    MMap gW2(param_grad.data() + lo.w2[blk], w, w);
    VMap gb2(param_grad.data() + lo.b2[blk], w);

    const Mat& pre = ws.pre[blk];
    Mat relu = pre.cwiseMax(0.0);
    gW2.noalias() += dy * relu.transpose();
    gb2 += dy.rowwise().sum();
    Mat dpre = (W2.transpose() * dy).cwiseProduct(
        (pre.array() > 0.0).cast<double>().matrix());
    gW1.noalias() += dpre * ws.ys[blk].transpose();
    gb1 += dpre.rowwise().sum();
    dy += W1.transpose() * dpre;
  }

  CMap W_in(params.data() + lo.w_in, w, f);
  MMap gW_in(param_grad.data() + lo.w_in, w, f);
  VMap gb_in(param_grad.data() + lo.b_in, w);
  gW_in.noalias() += dy * ws.feat.transpose();
  gb_in += dy.rowwise().sum();

  if (x_grad) {
    Mat dfeat = W_in.transpose() * dy;
    x_grad->resize(arch.state_dim, ws.feat.cols());
    if (arch.input_kind == InputKind::kEuclidean) {
      *x_grad = dfeat.topRows(arch.state_dim);
    } else {
      const double omega = 2.0 * M_PI / arch.period;
      const int M = arch.num_freq;
      for (int i = 0; i < arch.state_dim; ++i) {
        x_grad->row(i).setZero();
        for (int k = 1; k <= M; ++k) {
          const int row = 2 * (i * M + (k - 1));
          // d sin(k w x)/dx = k w cos, d cos(k w x)/dx = -k w sin
          x_grad->row(i) +=
              k * omega *
              (dfeat.row(row).cwiseProduct(ws.feat.row(row + 1)) -
               dfeat.row(row + 1).cwiseProduct(ws.feat.row(row)));
        }
      }
    }
  }
}

// Single-point conveniences.
inline Vec forward(const NetworkArch& arch, const Vec& params, const Vec& x,
                   double t = 0.0) {
  RowVec tv;
  if (arch.include_time) tv = RowVec::Constant(1, t);
  return forward_batch(arch, params, Mat(x), tv).col(0);
}

inline void vjp(const NetworkArch& arch, const Vec& params, const Vec& x,
                double t, const Vec& cotangent, Vec& param_grad,
                Vec* x_grad = nullptr) {
  RowVec tv;
  if (arch.include_time) tv = RowVec::Constant(1, t);
  NetWorkspace ws;
  forward_batch(arch, params, Mat(x), tv, &ws);
  Mat xg;
  vjp_batch(arch, params, ws, Mat(cotangent), param_grad,
            x_grad ? &xg : nullptr);
  if (x_grad) *x_grad = xg.col(0);
}

// Uniform fan-in-scaled initialization: every entry of a layer lies in
// +-1/sqrt(fan_in) of that layer; deterministic per seed.
inline Vec init_params(const NetworkArch& arch, std::uint64_t seed) {
  using namespace detail;
  const ParamLayout lo = make_layout(arch);
  Vec params(lo.total);
  const int f = arch.feature_dim();
  const int w = arch.hidden_width;

  std::uint64_t counter = 0;
  auto fill = [&](int offset, int count, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (int i = 0; i < count; ++i) {
      const double u =
          rng::uniform(seed, rng::Purpose::kParamInit, 0, 0, counter++);
      params[offset + i] = bound * (2.0 * u - 1.0);
    }
  };

  fill(lo.w_in, w * f, f);
  fill(lo.b_in, w, f);
  for (int b = 0; b < arch.num_blocks; ++b) {
    fill(lo.w1[b], w * w, w);
    fill(lo.b1[b], w, w);
    fill(lo.w2[b], w * w, w);
    fill(lo.b2[b], w, w);
  }
  fill(lo.w_head, arch.output_dim * w, w);
  fill(lo.b_head, arch.output_dim, w);
  return params;
}

// One approximator: architecture plus its current flat parameters.
struct Approximator {
  NetworkArch arch;
  Vec params;
};

// Cheap content fingerprint of a parameter vector (stale-target detection).
inline std::uint64_t param_fingerprint(const Vec& params) {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    std::uint64_t bits;
    const double v = params[i];
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    h = rng::splitmix64(h ^ bits);
  }
  return h;
}

}  // namespace acflow

#endif  // ACFLOW_NETS_HPP
