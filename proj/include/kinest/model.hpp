#pragma once

// Network forward pass: embedding, temporal flow modules (TFM),
// spatiotemporal kinematic flow modules (SKFM) and the pose regressor.
//
// Flow module = Bi-SSD -> LMA -> GMA. In the TFM the Bi-SSD scans frames;
// in the SKFM it scans the flattened (frame, joint) axis with joints
// visited in kinematic-tree order.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "kinest/config.hpp"
#include "kinest/error.hpp"
#include "kinest/kinematics.hpp"
#include "kinest/pose.hpp"
#include "kinest/ssd.hpp"
#include "kinest/weights.hpp"

namespace kinest::model {

using Mat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const Mat>;
using ConstVecMap = Eigen::Map<const Eigen::RowVectorXf>;

inline constexpr float kLayerNormEps = 1e-5f;
/// Raw decay bias giving a = exp(-softplus(bias)) = 0.9 at zero input.
inline const double kDecayBias = std::log(std::expm1(-std::log(0.9)));

// ---------------------------------------------------------------------------
// Weight layout

namespace detail {

struct Builder {
  Weights& w;
  std::uint64_t seed;

  void linear(const std::string& name, std::size_t in, std::size_t out, double bias_value = 0.0) {
    Tensor wt = Tensor::zeros({out, in});
    fill_uniform(wt, seed, name + ".weight", 1.0 / std::sqrt(static_cast<double>(in)));
    w.add(name + ".weight", std::move(wt));
    Tensor b = Tensor::zeros({out});
    for (float& v : b.data) v = static_cast<float>(bias_value);
    w.add(name + ".bias", std::move(b));
  }
  void layer_norm(const std::string& name, std::size_t width) {
    Tensor g = Tensor::zeros({width});
    for (float& v : g.data) v = 1.0f;
    w.add(name + ".weight", std::move(g));
    w.add(name + ".bias", Tensor::zeros({width}));
  }
  void depthwise_conv(const std::string& name, std::size_t channels, std::size_t width) {
    Tensor k = Tensor::zeros({channels, width});
    fill_uniform(k, seed, name + ".weight", 1.0 / std::sqrt(static_cast<double>(width)));
    w.add(name + ".weight", std::move(k));
    w.add(name + ".bias", Tensor::zeros({channels}));
  }

  void ssd_block(const std::string& p, std::size_t width, const ModelConfig& c) {
    const std::size_t xbc = width + 2 * c.ssd_state;
    layer_norm(p + ".ln_in", width);
    linear(p + ".in_proj", width, xbc);
    depthwise_conv(p + ".conv", xbc, c.conv_width);
    linear(p + ".a_proj", width, 1, kDecayBias);
    linear(p + ".gate", width, width);
    layer_norm(p + ".ln_out", width);
    linear(p + ".out_proj", width, width);
  }
  void lma(const std::string& p, std::size_t e) {
    layer_norm(p + ".ln", e);
    linear(p + ".conv", e, e);
  }
  void gma(const std::string& p, std::size_t e, std::size_t h) {
    linear(p + ".in_proj", e, h);
    layer_norm(p + ".ln", h);
    linear(p + ".q", h, h);
    linear(p + ".k", h, h);
    linear(p + ".v", h, h);
    linear(p + ".o", h, h);
    linear(p + ".ffn1", h, h);
    linear(p + ".ffn2", h, h);
    linear(p + ".out_proj", h, e);
  }
  void flow(const std::string& p, std::size_t ssd_width, const ModelConfig& c) {
    ssd_block(p + ".ssd_fwd", ssd_width, c);
    if (!c.tie_backward) ssd_block(p + ".ssd_bwd", ssd_width, c);
    lma(p + ".lma", c.embed_dim);
    gma(p + ".gma", c.embed_dim, c.gma_hidden);
  }
};

}  // namespace detail

inline std::string tfm_prefix(std::size_t i) { return "tfm." + std::to_string(i); }
inline std::string skfm_prefix(std::size_t i) { return "skfm." + std::to_string(i); }

/// Linear weights ~ U(+-1/sqrt(fan_in)) (see fill_uniform), conv kernels
/// likewise with fan_in = kernel width, biases zero except the decay
/// projection, layer-norm gains one.
inline Weights init_weights(const ModelConfig& c) {
  c.validate();
  Weights w;
  detail::Builder b{w, c.seed};
  b.linear("embed", c.input_dim, c.embed_dim);
  for (std::size_t i = 0; i < c.n_tfm; ++i) b.flow(tfm_prefix(i), c.embed_dim, c);
  for (std::size_t i = 0; i < c.m_skfm; ++i) {
    const auto p = skfm_prefix(i);
    b.linear(p + ".joint_in", c.embed_dim, c.mixed_hidden());
    b.linear(p + ".joint_out", c.mixed_hidden(), c.embed_dim);
    b.flow(p, c.joint_dim, c);
  }
  b.linear("regressor", c.embed_dim, c.output_dim());
  return w;
}

// ---------------------------------------------------------------------------
// Primitive layers

inline ConstMap matrix(const Weights& w, const std::string& name) {
  const Tensor& t = w.get(name);
  if (t.dims.size() != 2) throw FormatError("tensor '" + name + "' is not a matrix");
  return {t.data.data(), static_cast<Eigen::Index>(t.dims[0]), static_cast<Eigen::Index>(t.dims[1])};
}

inline ConstVecMap row_vector(const Weights& w, const std::string& name) {
  const Tensor& t = w.get(name);
  return {t.data.data(), static_cast<Eigen::Index>(t.numel())};
}

/// x W^T + b with W stored [out, in]. Evaluated one row at a time so each
/// output row depends only on its input row, bit for bit, whatever the
/// number of rows.
inline Mat linear(const Mat& x, const Weights& w, const std::string& name) {
  const ConstMap wt = matrix(w, name + ".weight");
  const ConstVecMap b = row_vector(w, name + ".bias");
  kinest::detail::require_dims(x.cols() == wt.cols(), "linear '" + name + "': input width " + std::to_string(x.cols()) +
                                                  " != " + std::to_string(wt.cols()));
  Mat y(x.rows(), wt.rows());
  Eigen::VectorXf col(x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    col = x.row(r).transpose();
    y.row(r).noalias() = (wt * col).transpose();
    y.row(r) += b;
  }
  return y;
}

inline Mat layer_norm(const Mat& x, const Weights& w, const std::string& name) {
  const ConstVecMap g = row_vector(w, name + ".weight");
  const ConstVecMap b = row_vector(w, name + ".bias");
  kinest::detail::require_dims(g.size() == x.cols(), "layer_norm '" + name + "': width mismatch");
  Mat y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r).cast<double>();
    const double mean = row.mean();
    const double var = (row.array() - mean).square().mean();
    const double inv = 1.0 / std::sqrt(var + static_cast<double>(kLayerNormEps));
    y.row(r) = ((row.array() - mean) * inv).cast<float>() * g.array() + b.array();
  }
  return y;
}

inline float silu(float v) { return v / (1.0f + std::exp(-v)); }
inline float gelu(float v) { return 0.5f * v * (1.0f + std::erf(v / std::numbers::sqrt2_v<float>)); }
inline double softplus(double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); }

inline Mat silu(Mat x) {
  x = x.unaryExpr([](float v) { return silu(v); });
  return x;
}

/// Causal depthwise convolution along rows: out[t] = b + sum_k w[k] x[t - K + 1 + k].
inline Mat causal_depthwise_conv(const Mat& x, const Weights& w, const std::string& name) {
  const ConstMap k = matrix(w, name + ".weight");
  const ConstVecMap b = row_vector(w, name + ".bias");
  kinest::detail::require_dims(k.rows() == x.cols(), "conv '" + name + "': channel mismatch");
  const Eigen::Index width = k.cols();
  Mat y(x.rows(), x.cols());
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    y.row(t) = b;
    for (Eigen::Index i = 0; i < width; ++i) {
      const Eigen::Index src = t - width + 1 + i;
      if (src < 0) continue;
      y.row(t).array() += k.col(i).transpose().array() * x.row(src).array();
    }
  }
  return y;
}

inline Mat flip_rows(const Mat& x) { return x.colwise().reverse(); }

// ---------------------------------------------------------------------------
// SSD block and Bi-SSD

/// Decay sequence a_t = exp(-softplus(raw_t)) in (0, 1).
inline std::vector<double> decay_from_raw(const Mat& raw) {
  std::vector<double> a(static_cast<std::size_t>(raw.rows()));
  for (Eigen::Index t = 0; t < raw.rows(); ++t) a[static_cast<std::size_t>(t)] = std::exp(-softplus(raw(t, 0)));
  return a;
}

/// One SSD block on a (sequence x width) input:
///   X, B, C = SiLU(Conv(Linear(LN(p))))
///   A       = exp(-softplus(Linear(LN(p))))
///   f1      = SiLU(Linear(LN(p)))
///   out     = Linear(LN(f1 * SSM(X, A, B, C)))
inline Mat ssd_block(const Mat& p, const Weights& w, const std::string& prefix, const ModelConfig& c) {
  const Eigen::Index width = p.cols();
  const auto n = static_cast<Eigen::Index>(c.ssd_state);
  const Mat h = layer_norm(p, w, prefix + ".ln_in");
  const Mat xbc = silu(causal_depthwise_conv(linear(h, w, prefix + ".in_proj"), w, prefix + ".conv"));
  const Mat f1 = silu(linear(h, w, prefix + ".gate"));

  ssd::SsdParams params(decay_from_raw(linear(h, w, prefix + ".a_proj")),
                        xbc.middleCols(width, n).cast<double>(),
                        xbc.middleCols(width + n, n).cast<double>(),
                        xbc.leftCols(width).cast<double>());
  const std::size_t chunk = std::min<std::size_t>(c.chunk, params.length());
  const Mat y = ssd::chunked_scan(params, chunk).cast<float>();
  const Mat gated = (f1.array() * y.array()).matrix();
  return linear(layer_norm(gated, w, prefix + ".ln_out"), w, prefix + ".out_proj");
}

inline std::string backward_prefix(const std::string& flow_prefix, const ModelConfig& c) {
  return flow_prefix + (c.tie_backward ? ".ssd_fwd" : ".ssd_bwd");
}

struct BiSsdOutput {
  Mat forward;
  Mat backward;
};

/// Forward branch on p, backward branch on the time-reversed p (flipped back).
inline BiSsdOutput bi_ssd(const Mat& p, const Weights& w, const std::string& flow_prefix, const ModelConfig& c) {
  return {ssd_block(p, w, flow_prefix + ".ssd_fwd", c),
          flip_rows(ssd_block(flip_rows(p), w, backward_prefix(flow_prefix, c), c))};
}

// ---------------------------------------------------------------------------
// Aggregators

/// SiLU(Conv1x1(LN(f))): a per-frame linear map, no temporal mixing.
inline Mat lma(const Mat& f, const Weights& w, const std::string& prefix) {
  return silu(linear(layer_norm(f, w, prefix + ".ln"), w, prefix + ".conv"));
}

inline Mat sinusoidal_encoding(Eigen::Index length, Eigen::Index width) {
  Mat pe(length, width);
  for (Eigen::Index t = 0; t < length; ++t)
    for (Eigen::Index i = 0; i < width; i += 2) {
      const double freq = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(width));
      pe(t, i) = static_cast<float>(std::sin(static_cast<double>(t) * freq));
      if (i + 1 < width) pe(t, i + 1) = static_cast<float>(std::cos(static_cast<double>(t) * freq));
    }
  return pe;
}

inline void softmax_rows(Mat& s) {
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    const float mx = s.row(r).maxCoeff();
    s.row(r) = (s.row(r).array() - mx).exp();
    s.row(r) /= s.row(r).sum();
  }
}

/// Normalized input of the attention layer.
inline Mat gma_attention_input(const Mat& f, const Weights& w, const std::string& prefix, const ModelConfig& c) {
  Mat u = linear(f, w, prefix + ".in_proj");
  if (c.gma_positional) u += sinusoidal_encoding(u.rows(), u.cols());
  return layer_norm(u, w, prefix + ".ln");
}

/// Row-stochastic attention matrices, one per head.
inline std::vector<Mat> gma_attention_weights(const Mat& h, const Weights& w, const std::string& prefix,
                                              const ModelConfig& c) {
  const Mat q = linear(h, w, prefix + ".q");
  const Mat k = linear(h, w, prefix + ".k");
  const auto heads = static_cast<Eigen::Index>(c.gma_heads);
  const Eigen::Index dh = h.cols() / heads;
  const float scale = 1.0f / std::sqrt(static_cast<float>(dh));
  std::vector<Mat> out;
  for (Eigen::Index i = 0; i < heads; ++i) {
    Mat s = (q.middleCols(i * dh, dh) * k.middleCols(i * dh, dh).transpose()) * scale;
    softmax_rows(s);
    out.push_back(std::move(s));
  }
  return out;
}

/// Linear -> LN -> multi-head self-attention (+residual) -> FFN (+residual)
/// -> Linear back to the embedding width. Attention runs over frames.
inline Mat gma(const Mat& f, const Weights& w, const std::string& prefix, const ModelConfig& c) {
  const Mat h = gma_attention_input(f, w, prefix, c);
  const Mat v = linear(h, w, prefix + ".v");
  const auto attn = gma_attention_weights(h, w, prefix, c);
  const Eigen::Index dh = h.cols() / static_cast<Eigen::Index>(c.gma_heads);
  Mat heads(h.rows(), h.cols());
  for (std::size_t i = 0; i < attn.size(); ++i) {
    const auto off = static_cast<Eigen::Index>(i) * dh;
    heads.middleCols(off, dh) = attn[i] * v.middleCols(off, dh);
  }
  const Mat a = h + linear(heads, w, prefix + ".o");
  Mat inner = linear(a, w, prefix + ".ffn1");
  inner = inner.unaryExpr([](float x) { return gelu(x); });
  const Mat g = a + linear(inner, w, prefix + ".ffn2");
  return linear(g, w, prefix + ".out_proj");
}

// ---------------------------------------------------------------------------
// Flow modules

inline Mat embed(const Mat& x, const Weights& w, const ModelConfig& c) {
  kinest::detail::require_dims(static_cast<std::size_t>(x.cols()) == c.input_dim,
                       "embed: expected " + std::to_string(c.input_dim) + " input columns, got " +
                           std::to_string(x.cols()));
  return linear(x, w, "embed");
}

inline Mat tfm_forward(const Mat& p, const Weights& w, std::size_t index, const ModelConfig& c) {
  const auto prefix = tfm_prefix(index);
  const BiSsdOutput bi = bi_ssd(p, w, prefix, c);
  return gma(lma(bi.forward + bi.backward, w, prefix + ".lma"), w, prefix + ".gma", c);
}

/// Intermediate tensors of one STMM pass, for inspection.
struct StmmTrace {
  kin::JointTensor<float> joint_features;  // S_l': L x J x D
  kin::JointTensor<float> forward_joints;  // S_f: L x J_f x D
  kin::JointTensor<float> backward_joints; // S_b: L x J_b x D
  Mat forward_scan_input;                  // S_f' flattened, (L J_f) x D
  Mat backward_scan_input;                 // S_b' in backward scan order, (L J_b) x D
  std::size_t forward_scan_length = 0;
  std::size_t backward_scan_length = 0;
};

inline Mat to_matrix(const kin::JointTensor<float>& t) {
  return Eigen::Map<const Mat>(t.data.data(), static_cast<Eigen::Index>(t.frames * t.joints),
                               static_cast<Eigen::Index>(t.dim));
}

inline kin::JointTensor<float> to_joint_tensor(const Mat& m, std::size_t frames, std::size_t joints) {
  kin::JointTensor<float> t(frames, joints, static_cast<std::size_t>(m.size()) / (frames * joints));
  kinest::detail::require_dims(t.data.size() == static_cast<std::size_t>(m.size()), "to_joint_tensor: size mismatch");
  Eigen::Map<Mat>(t.data.data(), m.rows(), m.cols()) = m;
  return t;
}

/// Backward scan layout: frames reversed, joints kept in the backward order.
/// Equals the full reversal of the flattened forward-order tensor.
inline Mat backward_scan_layout(const kin::JointTensor<float>& s_b) {
  Mat out(static_cast<Eigen::Index>(s_b.frames * s_b.joints), static_cast<Eigen::Index>(s_b.dim));
  for (std::size_t l = 0; l < s_b.frames; ++l)
    for (std::size_t k = 0; k < s_b.joints; ++k)
      for (std::size_t d = 0; d < s_b.dim; ++d)
        out(static_cast<Eigen::Index>((s_b.frames - 1 - l) * s_b.joints + k), static_cast<Eigen::Index>(d)) =
            s_b.at(l, k, d);
  return out;
}

inline kin::JointTensor<float> from_backward_scan_layout(const Mat& m, std::size_t frames, std::size_t joints) {
  kin::JointTensor<float> t(frames, joints, static_cast<std::size_t>(m.cols()));
  for (std::size_t l = 0; l < frames; ++l)
    for (std::size_t k = 0; k < joints; ++k)
      for (std::size_t d = 0; d < t.dim; ++d)
        t.at(l, k, d) = m(static_cast<Eigen::Index>((frames - 1 - l) * joints + k), static_cast<Eigen::Index>(d));
  return t;
}

/// Scatter-added outputs of the two STMM scan branches, L x J x D each.
struct StmmBranches {
  kin::JointTensor<float> forward;
  kin::JointTensor<float> backward;
};

/// Projects to J x D joint features, gathers them along the scan order in
/// both directions and runs the Bi-SSD over the flattened (frame, joint)
/// axis. Results are scattered back to canonical joints; a joint visited
/// more than once sums its contributions.
inline StmmBranches stmm_branches(const Mat& t_in, const Weights& w, std::size_t index, const kin::ScanOrder& order,
                                  const ModelConfig& c, StmmTrace* trace = nullptr) {
  const auto prefix = skfm_prefix(index);
  const std::size_t frames = static_cast<std::size_t>(t_in.rows());
  const Mat s_l = linear(t_in, w, prefix + ".joint_in");
  kinest::detail::require_dims(static_cast<std::size_t>(s_l.cols()) == c.mixed_hidden(), "stmm: H != J * D");
  kinest::detail::require_dims(order.num_joints() == c.joints, "stmm: scan order covers a different joint count");

  const kin::JointTensor<float> joints = to_joint_tensor(s_l, frames, c.joints);
  const auto s_f = kin::reorder_joint_features(joints, order, kin::Direction::kForward);
  const auto s_b = kin::reorder_joint_features(joints, order, kin::Direction::kBackward);
  const Mat scan_f = to_matrix(s_f);
  const Mat scan_b = backward_scan_layout(s_b);

  const Mat out_f = ssd_block(scan_f, w, prefix + ".ssd_fwd", c);
  const Mat out_b = ssd_block(scan_b, w, backward_prefix(prefix, c), c);

  if (trace != nullptr) {
    trace->joint_features = joints;
    trace->forward_joints = s_f;
    trace->backward_joints = s_b;
    trace->forward_scan_input = scan_f;
    trace->backward_scan_input = scan_b;
    trace->forward_scan_length = static_cast<std::size_t>(scan_f.rows());
    trace->backward_scan_length = static_cast<std::size_t>(scan_b.rows());
  }
  return {kin::scatter_joint_features(to_joint_tensor(out_f, frames, order.length()), order, kin::Direction::kForward,
                                      c.joints),
          kin::scatter_joint_features(from_backward_scan_layout(out_b, frames, order.length()), order,
                                      kin::Direction::kBackward, c.joints)};
}

/// Spatiotemporal mixing: both scan branches summed, projected back to E,
/// then LMA and GMA.
inline Mat stmm_forward(const Mat& t_in, const Weights& w, std::size_t index, const kin::ScanOrder& order,
                        const ModelConfig& c, StmmTrace* trace = nullptr) {
  const auto prefix = skfm_prefix(index);
  StmmBranches br = stmm_branches(t_in, w, index, order, c, trace);
  for (std::size_t i = 0; i < br.forward.data.size(); ++i) br.forward.data[i] += br.backward.data[i];
  const Mat mixed = Eigen::Map<const Mat>(br.forward.data.data(), t_in.rows(),
                                          static_cast<Eigen::Index>(c.mixed_hidden()));
  const Mat projected = linear(mixed, w, prefix + ".joint_out");
  return gma(lma(projected, w, prefix + ".lma"), w, prefix + ".gma", c);
}

// ---------------------------------------------------------------------------
// Whole network

struct ForwardTrace {
  Mat embedded;               // P0
  std::vector<Mat> temporal;  // T_1..T_N
  std::vector<Mat> spatial;   // S_1..S_M
  std::vector<StmmTrace> stmm;
  Mat output;                 // L x V
};

/// L x C sparse signals -> L x V (22 x 6D) poses.
inline Mat kinest_forward(const Mat& x, const ModelConfig& c, const Weights& w, ForwardTrace* trace = nullptr) {
  const kin::ScanOrder order = kin::scan_order(c.scan_strategy);
  Mat f = embed(x, w, c);
  if (trace != nullptr) trace->embedded = f;
  for (std::size_t i = 0; i < c.n_tfm; ++i) {
    f = tfm_forward(f, w, i, c);
    if (trace != nullptr) trace->temporal.push_back(f);
  }
  for (std::size_t i = 0; i < c.m_skfm; ++i) {
    StmmTrace st;
    f = stmm_forward(f, w, i, order, c, trace != nullptr ? &st : nullptr);
    if (trace != nullptr) {
      trace->spatial.push_back(f);
      trace->stmm.push_back(std::move(st));
    }
  }
  Mat y = linear(f, w, "regressor");
  if (trace != nullptr) trace->output = y;
  return y;
}

/// Reshapes an L x 132 output into a pose sequence.
inline PoseSequence to_pose(const Mat& y) {
  kinest::detail::require_dims(y.cols() == static_cast<Eigen::Index>(kin::kNumJoints * 6), "to_pose: expected 132 columns");
  PoseSequence p(static_cast<std::size_t>(y.rows()));
  for (Eigen::Index r = 0; r < y.rows(); ++r)
    for (Eigen::Index k = 0; k < y.cols(); ++k)
      p.values()[static_cast<std::size_t>(r * y.cols() + k)] = static_cast<double>(y(r, k));
  return p;
}

/// Convenience owner of a configuration and its weights.
class KineST {
 public:
  explicit KineST(ModelConfig config) : config_(std::move(config)), weights_(init_weights(config_)) {}
  KineST(ModelConfig config, Weights weights) : config_(std::move(config)), weights_(std::move(weights)) {
    config_.validate();
    if (!weights_.same_layout(init_weights(config_))) {
      throw FormatError("KineST: weights do not match the configuration");
    }
  }

  const ModelConfig& config() const { return config_; }
  const Weights& weights() const { return weights_; }
  Weights& weights() { return weights_; }

  Mat forward(const Mat& x, ForwardTrace* trace = nullptr) const { return kinest_forward(x, config_, weights_, trace); }
  PoseSequence predict(const Mat& x) const { return to_pose(forward(x)); }

 private:
  ModelConfig config_;
  Weights weights_;
};

}  // namespace kinest::model
