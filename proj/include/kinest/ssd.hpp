#pragma once

// Scalar-decay state space duality (SSD) kernels.
//
// One SSM call maps an input sequence x (T x P) to y (T x P) through an
// N-dimensional state per channel:
//
//   h_t = a_t * h_{t-1} + b_t (x) x_t        (h_t is N x P)
//   y_t = c_t^T h_t
//
// which is the same as multiplying x by the lower-triangular semiseparable
// matrix M = F o (C B^T), F[j][i] = a_j a_{j-1} ... a_{i+1}. Three
// realizations are provided: the left-to-right recurrence, the quadratic
// matrix form and a blockwise chunked scan. All accumulate in double.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "kinest/error.hpp"

namespace kinest::ssd {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr std::size_t kDefaultStateDim = 16;
inline constexpr std::size_t kDefaultChunk = 16;

/// Parameters of one scalar-decay SSM call. Rows index time.
class SsdParams {
 public:
  SsdParams(std::vector<double> a, RowMatrix b, RowMatrix c, RowMatrix x)
      : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), x_(std::move(x)) {
    const auto t = static_cast<Eigen::Index>(a_.size());
    detail::require_dims(t >= 1, "SsdParams: empty sequence");
    detail::require_dims(b_.rows() == t && c_.rows() == t && x_.rows() == t,
                         "SsdParams: a, b, c, x must share the sequence length");
    detail::require_dims(b_.cols() == c_.cols() && b_.cols() >= 1,
                         "SsdParams: b and c must share a positive state dimension");
    detail::require_dims(x_.cols() >= 1, "SsdParams: x needs at least one channel");
    for (double v : a_) {
      // a = 0 (state fully reset) is allowed.
      detail::require_domain(std::isfinite(v) && v >= 0.0 && v <= 1.0,
                             "SsdParams: decay values must lie in [0, 1]");
    }
    detail::require_domain(b_.allFinite() && c_.allFinite() && x_.allFinite(),
                           "SsdParams: non-finite projection or input");
  }

  std::size_t length() const { return a_.size(); }
  std::size_t state_dim() const { return static_cast<std::size_t>(b_.cols()); }
  std::size_t channels() const { return static_cast<std::size_t>(x_.cols()); }

  const std::vector<double>& a() const { return a_; }
  const RowMatrix& b() const { return b_; }
  const RowMatrix& c() const { return c_; }
  const RowMatrix& x() const { return x_; }

 private:
  std::vector<double> a_;
  RowMatrix b_;
  RowMatrix c_;
  RowMatrix x_;
};

/// Lower-triangular matrix of cumulative decay products.
struct DecayMatrix {
  RowMatrix f;
};

/// F[j][j] = 1, F[j][i] = a_j F[j-1][i] for i < j, zero above the diagonal.
/// a[0] never enters the result.
inline DecayMatrix build_decay_matrix(std::span<const double> a) {
  detail::require_dims(!a.empty(), "build_decay_matrix: empty decay sequence");
  const auto t = static_cast<Eigen::Index>(a.size());
  RowMatrix f = RowMatrix::Zero(t, t);
  for (Eigen::Index j = 0; j < t; ++j) {
    f(j, j) = 1.0;
    for (Eigen::Index i = 0; i < j; ++i) f(j, i) = a[static_cast<std::size_t>(j)] * f(j - 1, i);
  }
  return {std::move(f)};
}

/// Strict left-to-right recurrence. `h0` is N x P; an empty matrix means zero state.
inline RowMatrix ssm_recurrence(const SsdParams& p, const RowMatrix& h0 = RowMatrix()) {
  const auto t_len = static_cast<Eigen::Index>(p.length());
  const auto n = static_cast<Eigen::Index>(p.state_dim());
  const auto ch = static_cast<Eigen::Index>(p.channels());
  RowMatrix h = RowMatrix::Zero(n, ch);
  if (h0.size() != 0) {
    detail::require_dims(h0.rows() == n && h0.cols() == ch,
                         "ssm_recurrence: initial state must be N x P");
    h = h0;
  }
  RowMatrix y(t_len, ch);
  for (Eigen::Index t = 0; t < t_len; ++t) {
    h *= p.a()[static_cast<std::size_t>(t)];
    h.noalias() += p.b().row(t).transpose() * p.x().row(t);
    y.row(t).noalias() = p.c().row(t) * h;
  }
  return y;
}

/// Vector-state overload: one state vector broadcast to every channel.
inline RowMatrix ssm_recurrence(const SsdParams& p, const Eigen::VectorXd& h0) {
  detail::require_dims(h0.size() == static_cast<Eigen::Index>(p.state_dim()),
                       "ssm_recurrence: initial state length must equal N");
  RowMatrix h = h0.replicate(1, static_cast<Eigen::Index>(p.channels()));
  return ssm_recurrence(p, h);
}

/// Quadratic form y = (F o C B^T) x. Rows of F are produced on the fly from
/// F[j] = a_j F[j-1] + e_j, so memory stays O(T) while the cost is O(T^2 (N + P)).
inline RowMatrix ssd_matrix_form(const SsdParams& p) {
  const auto t_len = static_cast<Eigen::Index>(p.length());
  const auto ch = static_cast<Eigen::Index>(p.channels());
  RowMatrix y = RowMatrix::Zero(t_len, ch);
  Eigen::RowVectorXd f_row = Eigen::RowVectorXd::Zero(t_len);
  Eigen::RowVectorXd m_row(t_len);
  for (Eigen::Index j = 0; j < t_len; ++j) {
    const double aj = p.a()[static_cast<std::size_t>(j)];
    f_row.head(j) *= aj;
    f_row(j) = 1.0;
    const auto k = j + 1;
    // G[j][i] = c_j . b_i for i <= j
    m_row.head(k).noalias() = p.c().row(j) * p.b().topRows(k).transpose();
    m_row.head(k).array() *= f_row.head(k).array();
    y.row(j).noalias() = m_row.head(k) * p.x().topRows(k);
  }
  return y;
}

/// Blockwise scan: quadratic form inside each chunk, N x P state carried
/// between chunks. The last block shrinks when `chunk` does not divide T.
inline RowMatrix chunked_scan(const SsdParams& p, std::size_t chunk = kDefaultChunk) {
  const std::size_t t_len = p.length();
  if (chunk < 1 || chunk > t_len) {
    throw DomainError("chunked_scan: chunk must satisfy 1 <= chunk <= T (got " +
                      std::to_string(chunk) + ", T = " + std::to_string(t_len) + ")");
  }
  const auto n = static_cast<Eigen::Index>(p.state_dim());
  const auto ch = static_cast<Eigen::Index>(p.channels());
  const auto& a = p.a();
  const RowMatrix& b = p.b();
  const RowMatrix& c = p.c();
  const RowMatrix& x = p.x();

  RowMatrix y(static_cast<Eigen::Index>(t_len), ch);
  RowMatrix state = RowMatrix::Zero(n, ch);  // state after the previous chunk
  std::vector<double> decay(chunk);
  Eigen::RowVectorXd weights(static_cast<Eigen::Index>(chunk));

  for (std::size_t start = 0; start < t_len; start += chunk) {
    const std::size_t stop = std::min(start + chunk, t_len);
    const auto s = static_cast<Eigen::Index>(start);

    double carry = 1.0;  // a_start * ... * a_t
    for (std::size_t t = start; t < stop; ++t) {
      carry *= a[t];
      // decay[i - start] = a_t ... a_{i+1}, built right to left.
      double d = 1.0;
      for (std::size_t i = t + 1; i-- > start;) {
        decay[i - start] = d;
        d *= a[i];
      }
      const auto ti = static_cast<Eigen::Index>(t);
      const auto k = ti - s + 1;
      weights.head(k).noalias() = c.row(ti) * b.middleRows(s, k).transpose();
      for (Eigen::Index i = 0; i < k; ++i) weights(i) *= decay[static_cast<std::size_t>(i)];
      y.row(ti).noalias() = weights.head(k) * x.middleRows(s, k);
      if (start > 0) y.row(ti).noalias() += carry * (c.row(ti) * state);
    }

    // Carry the state to the end of this chunk.
    double d = 1.0;
    RowMatrix next = RowMatrix::Zero(n, ch);
    for (std::size_t i = stop; i-- > start;) {
      const auto ii = static_cast<Eigen::Index>(i);
      next.noalias() += d * (b.row(ii).transpose() * x.row(ii));
      d *= a[i];
    }
    state = d * state + next;
  }
  return y;
}

/// Zero-order-hold discretization of a scalar-decay continuous SSM.
struct Discretized {
  double a;
  Eigen::VectorXd b;
};

inline Discretized discretize_zoh(double a_cont, const Eigen::VectorXd& b_cont, double dt) {
  detail::require_domain(std::isfinite(a_cont) && std::isfinite(dt) && b_cont.allFinite(),
                         "discretize_zoh: non-finite input");
  detail::require_domain(dt > 0.0, "discretize_zoh: dt must be positive");
  const double a_disc = std::exp(a_cont * dt);
  // (exp(a dt) - 1) / a, with the a -> 0 limit dt
  const double scale = a_cont == 0.0 ? dt : std::expm1(a_cont * dt) / a_cont;
  return {a_disc, scale * b_cont};
}

}  // namespace kinest::ssd
