#pragma once

// SO(3) helpers: 6D <-> matrix, exp/log maps, geodesic angle.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "kinest/error.hpp"

namespace kinest::rot {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

/// Two 3-vectors a1 = v[0..2], a2 = v[3..5]; they become the first two
/// columns of the rotation after Gram-Schmidt.
using Rot6D = std::array<double, 6>;

inline constexpr double kDegenerateNorm = 1e-8;
inline constexpr double kSmallAngle = 1e-6;
inline constexpr double kNearPi = 1e-4;

inline Mat3 skew(const Vec3& w) {
  Mat3 m;
  m << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
       -w.y(), w.x(), 0.0;
  return m;
}

/// (V32 - V23, V13 - V31, V21 - V12)
inline Vec3 skew_vector(const Mat3& v) {
  return {v(2, 1) - v(1, 2), v(0, 2) - v(2, 0), v(1, 0) - v(0, 1)};
}

inline Mat3 sixd_to_matrix(const Rot6D& r) {
  const Vec3 a1(r[0], r[1], r[2]);
  const Vec3 a2(r[3], r[4], r[5]);
  const double n1 = a1.norm();
  if (!(n1 >= kDegenerateNorm)) throw DomainError("sixd_to_matrix: first column is degenerate");
  const Vec3 b1 = a1 / n1;
  const Vec3 u = a2 - b1.dot(a2) * b1;
  const double n2 = u.norm();
  if (!(n2 >= kDegenerateNorm)) {
    throw DomainError("sixd_to_matrix: second column is parallel to the first");
  }
  const Vec3 b2 = u / n2;
  Mat3 r_out;
  r_out.col(0) = b1;
  r_out.col(1) = b2;
  r_out.col(2) = b1.cross(b2);
  return r_out;
}

/// First two columns of a rotation.
inline Rot6D matrix_to_sixd(const Mat3& r) {
  return {r(0, 0), r(1, 0), r(2, 0), r(0, 1), r(1, 1), r(2, 1)};
}

inline bool is_rotation(const Mat3& r, double tol = 1e-6) {
  return r.allFinite() && (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(r.determinant() - 1.0) <= tol;
}

/// Rodrigues formula.
inline Mat3 exp_map(const Vec3& w) {
  const double theta = w.norm();
  const Mat3 k = skew(w);
  if (theta < 1e-8) {
    // Second-order Taylor expansion; exact to double precision here.
    return Mat3::Identity() + k + 0.5 * k * k;
  }
  const double s = std::sin(theta) / theta;
  const double c = (1.0 - std::cos(theta)) / (theta * theta);
  return Mat3::Identity() + s * k + c * k * k;
}

namespace detail {

/// Representatives of the half-turn class: pick the sign whose first
/// non-negligible component is positive.
inline Vec3 canonical_half_turn(Vec3 w) {
  for (int i = 0; i < 3; ++i) {
    if (std::abs(w[i]) > 1e-12) {
      if (w[i] < 0.0) w = -w;
      break;
    }
  }
  return w;
}

}  // namespace detail

/// Logarithm of a rotation as an axis-angle vector with norm in [0, pi].
inline Vec3 matrix_to_log(const Mat3& v) {
  if (!is_rotation(v)) throw DomainError("matrix_to_log: input is not a rotation");
  const Vec3 s = skew_vector(v);
  const double cos_theta = std::clamp((v.trace() - 1.0) / 2.0, -1.0, 1.0);
  // atan2 keeps full precision at both ends where arccos alone does not.
  const double theta = std::atan2(0.5 * s.norm(), cos_theta);

  if (theta < kSmallAngle) {
    // theta / (2 sin theta) -> 1/2
    return 0.5 * s;
  }
  if (std::numbers::pi - theta < kNearPi) {
    // Symmetric part is cos(theta) I + (1 - cos(theta)) u u^T.
    const Mat3 sym = 0.5 * (v + v.transpose());
    const Mat3 uut = (sym - cos_theta * Mat3::Identity()) / (1.0 - cos_theta);
    Eigen::Index k = 0;
    uut.diagonal().maxCoeff(&k);
    Vec3 axis = uut.col(k) / std::sqrt(std::max(uut(k, k), 1e-300));
    axis.normalize();
    if (s.norm() > 1e-12) {
      if (axis.dot(s) < 0.0) axis = -axis;
    } else {
      axis = detail::canonical_half_turn(axis);
    }
    return theta * axis;
  }
  return theta / (2.0 * std::sin(theta)) * s;
}

/// r_prev^T r_curr: the rotation taking frame t-1 to frame t.
inline Mat3 relative_rotation(const Mat3& r_prev, const Mat3& r_curr) {
  return r_prev.transpose() * r_curr;
}

/// arccos of the clamped trace term, in [0, pi].
inline double geodesic_angle(const Mat3& v) {
  return std::acos(std::clamp((v.trace() - 1.0) / 2.0, -1.0, 1.0));
}

inline Mat3 rot_z(double theta) {
  return Eigen::AngleAxisd(theta, Vec3::UnitZ()).toRotationMatrix();
}

}  // namespace kinest::rot
