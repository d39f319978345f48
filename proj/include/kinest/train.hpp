#pragma once

// Micro-scale derivative-free training with simultaneous perturbation
// stochastic approximation (SPSA): two forward passes per step.
//
// Step k (0-based) draws a Rademacher direction d and evaluates
//   L+ = L(theta + c_k d),  L- = L(theta - c_k d)
// then updates theta <- theta - a_k (L+ - L-) / (2 c_k) * d, with
//   a_k = a / (k + 1 + A)^0.602,   c_k = c / (k + 1)^0.101.
// The trace records (L+ + L-) / 2 per step.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "kinest/config.hpp"
#include "kinest/error.hpp"
#include "kinest/losses.hpp"
#include "kinest/model.hpp"
#include "kinest/pose.hpp"
#include "kinest/weights.hpp"

namespace kinest::train {

inline constexpr std::size_t kMaxMicroParameters = 20000;

struct SpsaOptions {
  std::size_t iters = 500;
  double a = 1e-3;
  double c = 1e-2;
  double stability = 50.0;  // A
  double alpha = 0.602;
  double gamma = 0.101;
  std::uint64_t seed = 0;
  std::size_t smooth_window = 25;
  double divergence_factor = 10.0;
  std::size_t divergence_patience = 50;
};

struct TrainResult {
  Weights weights;
  double initial_loss = 0.0;
  std::vector<double> trace;

  /// Mean of the last `window` trace entries (initial loss if empty).
  double smoothed_final(std::size_t window = 25) const {
    if (trace.empty()) return initial_loss;
    const std::size_t n = std::min(window, trace.size());
    return std::accumulate(trace.end() - static_cast<std::ptrdiff_t>(n), trace.end(), 0.0) / static_cast<double>(n);
  }
};

/// Loss of one forward pass; a degenerate predicted rotation counts as +inf.
inline double evaluate_loss(const model::Mat& x, const PoseSequence& target, const ModelConfig& c, const Weights& w,
                            const loss::LossWeights& lw) {
  try {
    const double v = loss::total_loss(model::to_pose(model::kinest_forward(x, c, w)), target, lw);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  } catch (const DomainError&) {
    return std::numeric_limits<double>::infinity();
  }
}

/// Fits `init` to map `x` (seq_len x input_dim) onto `target` (seq_len
/// frames). Throws DomainError when the configuration exceeds the micro
/// parameter budget or when training diverges.
inline TrainResult train_micro(const ModelConfig& c, const Weights& init, const model::Mat& x,
                               const PoseSequence& target, const loss::LossWeights& lw, const SpsaOptions& opt) {
  c.validate();
  const std::size_t n_params = init.parameter_count();
  kinest::detail::require_domain(n_params <= kMaxMicroParameters,
                                 "train_micro: " + std::to_string(n_params) + " parameters exceed the micro budget of " +
                                     std::to_string(kMaxMicroParameters));
  kinest::detail::require_dims(static_cast<std::size_t>(x.rows()) == c.seq_len &&
                                   static_cast<std::size_t>(x.cols()) == c.input_dim,
                               "train_micro: input must be seq_len x input_dim");
  kinest::detail::require_dims(target.frames() == c.seq_len && target.joints() == c.joints,
                               "train_micro: target must be seq_len frames of every joint");
  kinest::detail::require_domain(opt.c > 0.0 && opt.a > 0.0, "train_micro: gains must be positive");

  TrainResult r{init, 0.0, {}};
  r.initial_loss = evaluate_loss(x, target, c, init, lw);
  kinest::detail::require_domain(std::isfinite(r.initial_loss), "train_micro: initial loss is not finite");
  if (opt.iters == 0) return r;

  std::vector<float*> slots;
  slots.reserve(n_params);
  for (auto& [_, t] : r.weights.tensors())
    for (float& v : t.data) slots.push_back(&v);
  std::vector<double> theta(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) theta[i] = *slots[i];

  std::vector<double> dir(slots.size());
  std::uint64_t rng = opt.seed ^ 0x5350534154524E31ULL;
  auto load = [&](double scale) {
    for (std::size_t i = 0; i < slots.size(); ++i) *slots[i] = static_cast<float>(theta[i] + scale * dir[i]);
  };

  r.trace.reserve(opt.iters);
  std::size_t above = 0;
  for (std::size_t k = 0; k < opt.iters; ++k) {
    const double kk = static_cast<double>(k);
    const double ak = opt.a / std::pow(kk + 1.0 + opt.stability, opt.alpha);
    const double ck = opt.c / std::pow(kk + 1.0, opt.gamma);
    for (std::size_t i = 0; i < dir.size(); i += 64) {
      const std::uint64_t bits = kinest::detail::splitmix64(rng);
      for (std::size_t b = 0; b < 64 && i + b < dir.size(); ++b) dir[i + b] = ((bits >> b) & 1U) ? 1.0 : -1.0;
    }
    load(ck);
    const double lp = evaluate_loss(x, target, c, r.weights, lw);
    load(-ck);
    const double lm = evaluate_loss(x, target, c, r.weights, lw);
    const double mean = 0.5 * (lp + lm);
    r.trace.push_back(mean);
    if (std::isfinite(lp) && std::isfinite(lm)) {
      const double step = ak * (lp - lm) / (2.0 * ck);
      for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= step * dir[i];
    }

    above = (!(mean <= opt.divergence_factor * r.initial_loss)) ? above + 1 : 0;
    if (above >= opt.divergence_patience) {
      throw DomainError("train_micro: diverged (loss above " + std::to_string(opt.divergence_factor) +
                        "x initial for " + std::to_string(opt.divergence_patience) + " steps)");
    }
  }
  load(0.0);
  return r;
}

}  // namespace kinest::train
