#pragma once

// Training losses over 6D pose sequences and the analytic gradient of the
// weighted total (rotation L1, orientation L1, geometric angular velocity).

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include <Eigen/Core>

#include "kinest/error.hpp"
#include "kinest/kinematics.hpp"
#include "kinest/pose.hpp"
#include "kinest/rotations.hpp"

namespace kinest::loss {

using rot::Mat3;
using rot::Vec3;

struct LossWeights {
  double alpha = 1.0;   // rotation L1
  double beta = 0.02;   // root orientation L1
  double delta = 1.0;   // geometric angular velocity
};

/// Per-step, per-joint axis-angle velocities: (L-1) x J entries.
struct AngularVelocitySeq {
  std::size_t steps = 0;
  std::size_t joints = 0;
  std::vector<Vec3> omega;

  const Vec3& at(std::size_t t, std::size_t j) const { return omega[t * joints + j]; }
};

namespace detail {

inline void require_same_shape(const PoseSequence& y, const PoseSequence& z, const char* who) {
  kinest::detail::require_dims(y.same_shape(z), std::string(who) + ": pose sequences differ in shape");
}

inline double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace detail

/// Mean |y - z| over every raw 6D component.
inline double loss_rot(const PoseSequence& y, const PoseSequence& z) {
  detail::require_same_shape(y, z, "loss_rot");
  kinest::detail::require_dims(y.size() > 0, "loss_rot: empty sequence");
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) sum += std::abs(y.values()[i] - z.values()[i]);
  return sum / static_cast<double>(y.size());
}

/// Mean |y - z| over the root joint's 6D components.
inline double loss_ori(const PoseSequence& y, const PoseSequence& z) {
  detail::require_same_shape(y, z, "loss_ori");
  kinest::detail::require_dims(y.frames() > 0, "loss_ori: empty sequence");
  double sum = 0.0;
  for (std::size_t l = 0; l < y.frames(); ++l)
    for (std::size_t k = 0; k < 6; ++k) sum += std::abs(y.at(l, 0, k) - z.at(l, 0, k));
  return sum / static_cast<double>(y.frames() * 6);
}

inline AngularVelocitySeq angular_velocity(const PoseSequence& p) {
  kinest::detail::require_dims(p.frames() >= 2, "angular_velocity: need at least two frames");
  AngularVelocitySeq out{p.frames() - 1, p.joints(), {}};
  out.omega.reserve(out.steps * out.joints);
  std::vector<Mat3> prev(p.joints());
  for (std::size_t j = 0; j < p.joints(); ++j) prev[j] = p.rotation(0, j);
  for (std::size_t t = 1; t < p.frames(); ++t) {
    for (std::size_t j = 0; j < p.joints(); ++j) {
      const Mat3 cur = p.rotation(t, j);
      out.omega.push_back(rot::matrix_to_log(rot::relative_rotation(prev[j], cur)));
      prev[j] = cur;
    }
  }
  return out;
}

/// Sum over steps of the joint-averaged L1 distance between GT and
/// predicted so(3) velocities.
inline double loss_angvel_geo(const PoseSequence& y, const PoseSequence& z) {
  detail::require_same_shape(y, z, "loss_angvel_geo");
  const AngularVelocitySeq wy = angular_velocity(y);
  const AngularVelocitySeq wz = angular_velocity(z);
  double sum = 0.0;
  for (std::size_t i = 0; i < wy.omega.size(); ++i) sum += (wz.omega[i] - wy.omega[i]).lpNorm<1>();
  return sum / static_cast<double>(y.joints());
}

/// First-difference baseline on raw 6D values, normalized like loss_angvel_geo.
inline double loss_angvel_diff(const PoseSequence& y, const PoseSequence& z) {
  detail::require_same_shape(y, z, "loss_angvel_diff");
  kinest::detail::require_dims(y.frames() >= 2, "loss_angvel_diff: need at least two frames");
  double sum = 0.0;
  for (std::size_t t = 1; t < y.frames(); ++t)
    for (std::size_t j = 0; j < y.joints(); ++j)
      for (std::size_t k = 0; k < 6; ++k) {
        const double dz = z.at(t, j, k) - z.at(t - 1, j, k);
        const double dy = y.at(t, j, k) - y.at(t - 1, j, k);
        sum += std::abs(dz - dy);
      }
  return sum / static_cast<double>(y.joints());
}

/// Mean over frames and joints of the squared FK position error.
inline double loss_pos(const PoseSequence& y, const PoseSequence& z, const kin::KinematicTree& tree) {
  detail::require_same_shape(y, z, "loss_pos");
  const auto py = sequence_positions(y, tree);
  const auto pz = sequence_positions(z, tree);
  double sum = 0.0;
  for (std::size_t l = 0; l < y.frames(); ++l)
    for (std::size_t j = 0; j < y.joints(); ++j) sum += (pz[l][j] - py[l][j]).squaredNorm();
  return sum / static_cast<double>(y.frames() * y.joints());
}

/// Mean over steps and joints of the squared error of FK position differences.
inline double loss_vel(const PoseSequence& y, const PoseSequence& z, const kin::KinematicTree& tree) {
  detail::require_same_shape(y, z, "loss_vel");
  kinest::detail::require_dims(y.frames() >= 2, "loss_vel: need at least two frames");
  const auto py = sequence_positions(y, tree);
  const auto pz = sequence_positions(z, tree);
  double sum = 0.0;
  for (std::size_t l = 1; l < y.frames(); ++l)
    for (std::size_t j = 0; j < y.joints(); ++j)
      sum += ((pz[l][j] - pz[l - 1][j]) - (py[l][j] - py[l - 1][j])).squaredNorm();
  return sum / static_cast<double>((y.frames() - 1) * y.joints());
}

struct LossBreakdown {
  double rot = 0.0;
  double ori = 0.0;
  double angvel_geo = 0.0;
  double total = 0.0;
};

inline double combine(const LossWeights& w, double rot, double ori, double angvel_geo) {
  return w.alpha * rot + w.beta * ori + w.delta * angvel_geo;
}

inline LossBreakdown loss_breakdown(const PoseSequence& y, const PoseSequence& z, const LossWeights& w = {}) {
  LossBreakdown b;
  b.rot = loss_rot(y, z);
  b.ori = loss_ori(y, z);
  b.angvel_geo = y.frames() >= 2 ? loss_angvel_geo(y, z) : 0.0;
  b.total = combine(w, b.rot, b.ori, b.angvel_geo);
  return b;
}

inline double total_loss(const PoseSequence& y, const PoseSequence& z, const LossWeights& w = {}) {
  return loss_breakdown(y, z, w).total;
}

// ---------------------------------------------------------------------------
// Gradient

/// Minimum distance of a relative-rotation angle from 0 and pi for which the
/// log-map derivative is evaluated.
inline constexpr double kGradAngleMargin = 1e-5;

/// Backpropagates `g_omega` through omega = log(V) = theta s / |s| with
/// s = vee(V - V^T), theta = atan2(|s| / 2, (tr V - 1) / 2).
inline Mat3 log_map_backward(const Mat3& v, const Vec3& g_omega) {
  const Vec3 s = rot::skew_vector(v);
  const double n = s.norm();
  const double c = (v.trace() - 1.0) / 2.0;
  const double theta = std::atan2(0.5 * n, c);
  if (theta < kGradAngleMargin || std::numbers::pi - theta < kGradAngleMargin) {
    throw DomainError("grad_total_loss: relative rotation angle too close to 0 or pi");
  }
  const double d = c * c + 0.25 * n * n;
  const double gs_dot = g_omega.dot(s);
  const double k_n = gs_dot / n * c / (2.0 * d) - gs_dot * theta / (n * n);
  const Vec3 gs = (theta / n) * g_omega + (k_n / n) * s;
  const double gc = -gs_dot / (2.0 * d);

  Mat3 gv = Mat3::Zero();
  gv(2, 1) += gs.x();
  gv(1, 2) -= gs.x();
  gv(0, 2) += gs.y();
  gv(2, 0) -= gs.y();
  gv(1, 0) += gs.z();
  gv(0, 1) -= gs.z();
  gv.diagonal().array() += 0.5 * gc;
  return gv;
}

/// Backpropagates a gradient on the rotation matrix through Gram-Schmidt.
inline rot::Rot6D sixd_backward(const rot::Rot6D& r, const Mat3& g) {
  const Vec3 a1(r[0], r[1], r[2]);
  const Vec3 a2(r[3], r[4], r[5]);
  const double n1 = a1.norm();
  const Vec3 b1 = a1 / n1;
  const double proj = b1.dot(a2);
  const Vec3 u = a2 - proj * b1;
  const double n2 = u.norm();
  if (n1 < rot::kDegenerateNorm || n2 < rot::kDegenerateNorm) {
    throw DomainError("grad_total_loss: degenerate 6D rotation");
  }
  const Vec3 b2 = u / n2;

  const Vec3 g3 = g.col(2);
  Vec3 gb1 = g.col(0) + b2.cross(g3);
  const Vec3 gb2 = g.col(1) + g3.cross(b1);
  const Vec3 gu = (gb2 - b2 * b2.dot(gb2)) / n2;
  const Vec3 ga2 = gu - b1 * b1.dot(gu);
  gb1 -= proj * gu + a2 * b1.dot(gu);
  const Vec3 ga1 = (gb1 - b1 * b1.dot(gb1)) / n1;
  return {ga1.x(), ga1.y(), ga1.z(), ga2.x(), ga2.y(), ga2.z()};
}

/// d total_loss / d y, laid out like y. L1 kinks use subgradient 0 at exact
/// ties. Terms with zero weight are skipped entirely.
inline PoseSequence grad_total_loss(const PoseSequence& y, const PoseSequence& z, const LossWeights& w = {}) {
  detail::require_same_shape(y, z, "grad_total_loss");
  kinest::detail::require_dims(y.frames() > 0, "grad_total_loss: empty sequence");
  const std::size_t frames = y.frames();
  const std::size_t joints = y.joints();
  PoseSequence g(frames, joints);

  if (w.alpha != 0.0) {
    const double scale = w.alpha / static_cast<double>(y.size());
    for (std::size_t i = 0; i < y.size(); ++i)
      g.values()[i] += scale * detail::sign0(y.values()[i] - z.values()[i]);
  }
  if (w.beta != 0.0) {
    const double scale = w.beta / static_cast<double>(frames * 6);
    for (std::size_t l = 0; l < frames; ++l)
      for (std::size_t k = 0; k < 6; ++k) g.at(l, 0, k) += scale * detail::sign0(y.at(l, 0, k) - z.at(l, 0, k));
  }
  if (w.delta != 0.0 && frames >= 2) {
    const AngularVelocitySeq wz = angular_velocity(z);
    const double scale = w.delta / static_cast<double>(joints);
    for (std::size_t j = 0; j < joints; ++j) {
      std::vector<Mat3> r(frames);
      std::vector<Mat3> gr(frames, Mat3::Zero());
      for (std::size_t l = 0; l < frames; ++l) r[l] = y.rotation(l, j);
      for (std::size_t t = 1; t < frames; ++t) {
        const Mat3 v = rot::relative_rotation(r[t - 1], r[t]);
        const Vec3 wy = rot::matrix_to_log(v);
        const Vec3& wg = wz.at(t - 1, j);
        Vec3 g_omega;
        for (int k = 0; k < 3; ++k) g_omega[k] = scale * detail::sign0(wy[k] - wg[k]);
        if (g_omega.isZero(0.0)) continue;
        const Mat3 gv = log_map_backward(v, g_omega);
        // V = A^T B
        gr[t - 1] += r[t] * gv.transpose();
        gr[t] += r[t - 1] * gv;
      }
      for (std::size_t l = 0; l < frames; ++l) {
        if (gr[l].isZero(0.0)) continue;
        const rot::Rot6D ga = sixd_backward(y.sixd(l, j), gr[l]);
        for (std::size_t k = 0; k < 6; ++k) g.at(l, j, k) += ga[k];
      }
    }
  }
  return g;
}

}  // namespace kinest::loss
