#pragma once

// Evaluation metrics: MPJRE (deg), MPJPE and per-region PE (cm), MPJVE
// (cm/s) and per-sequence jitter (10^2 m/s^3).

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "kinest/error.hpp"
#include "kinest/kinematics.hpp"
#include "kinest/pose.hpp"
#include "kinest/rotations.hpp"

namespace kinest::metrics {

inline constexpr double kDefaultFps = 60.0;

inline constexpr std::array<int, 1> kRootJoints = {kin::kPelvis};
inline constexpr std::array<int, 2> kHandJoints = {kin::kLeftWrist, kin::kRightWrist};
inline constexpr std::array<int, 8> kLowerJoints = {kin::kLeftHip,   kin::kRightHip,   kin::kLeftKnee, kin::kRightKnee,
                                                    kin::kLeftAnkle, kin::kRightAnkle, kin::kLeftFoot, kin::kRightFoot};
inline constexpr std::array<int, 11> kUpperJoints = {
    kin::kSpine1,       kin::kSpine2,       kin::kSpine3,       kin::kNeck,      kin::kLeftCollar, kin::kRightCollar,
    kin::kHead,         kin::kLeftShoulder, kin::kRightShoulder, kin::kLeftElbow, kin::kRightElbow};

struct MetricReport {
  double mpjre = 0.0;   // degrees
  double mpjpe = 0.0;   // cm
  double mpjve = 0.0;   // cm/s
  double root_pe = 0.0; // cm
  double hand_pe = 0.0;
  double upper_pe = 0.0;
  double lower_pe = 0.0;
  std::optional<double> jitter_pred;  // 10^2 m/s^3, needs L >= 4
  std::optional<double> jitter_gt;
  std::size_t frames = 0;
  double fps = kDefaultFps;

  /// "key: value" lines.
  std::string to_text() const {
    std::string out;
    for (const auto& [k, v] : entries()) out += k + ": " + v + "\n";
    return out;
  }

  /// "metric,value" rows with a header line.
  std::string to_rows() const {
    std::string out = "metric,value\n";
    for (const auto& [k, v] : entries()) out += k + "," + v + "\n";
    return out;
  }

 private:
  static std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
  }
  std::vector<std::pair<std::string, std::string>> entries() const {
    auto opt = [](const std::optional<double>& v) { return v ? fmt(*v) : std::string("n/a"); };
    return {{"frames", std::to_string(frames)}, {"fps", fmt(fps)},
            {"mpjre_deg", fmt(mpjre)},          {"mpjpe_cm", fmt(mpjpe)},
            {"mpjve_cm_s", fmt(mpjve)},         {"root_pe_cm", fmt(root_pe)},
            {"hand_pe_cm", fmt(hand_pe)},       {"upper_pe_cm", fmt(upper_pe)},
            {"lower_pe_cm", fmt(lower_pe)},     {"jitter_pred_1e2m_s3", opt(jitter_pred)},
            {"jitter_gt_1e2m_s3", opt(jitter_gt)}};
  }
};

using Trajectory = std::vector<std::vector<Eigen::Vector3d>>;  // [frame][joint]

/// Mean over frames and joints of |third difference| * fps^3, in 10^2 m/s^3.
/// Empty when fewer than four frames are available.
inline std::optional<double> jitter(const Trajectory& p, double fps) {
  if (p.size() < 4) return std::nullopt;
  const std::size_t joints = p.front().size();
  double sum = 0.0;
  for (std::size_t t = 3; t < p.size(); ++t)
    for (std::size_t j = 0; j < joints; ++j)
      sum += (p[t][j] - 3.0 * p[t - 1][j] + 3.0 * p[t - 2][j] - p[t - 3][j]).norm();
  const double mean = sum / static_cast<double>((p.size() - 3) * joints);
  return mean * fps * fps * fps / 100.0;
}

namespace detail {

inline double mean_position_error(const Trajectory& a, const Trajectory& b, std::span<const int> joints) {
  double sum = 0.0;
  for (std::size_t l = 0; l < a.size(); ++l)
    for (int j : joints) sum += (a[l][static_cast<std::size_t>(j)] - b[l][static_cast<std::size_t>(j)]).norm();
  return sum / static_cast<double>(a.size() * joints.size());
}

}  // namespace detail

/// Compares prediction `y` with ground truth `z`. Each sequence uses its own
/// root translation; a prediction without one borrows the ground truth's,
/// and the origin is used when neither has one.
inline MetricReport evaluate(const PoseSequence& y, const PoseSequence& z, const kin::KinematicTree& tree,
                             double fps = kDefaultFps) {
  kinest::detail::require_dims(y.same_shape(z), "metrics: sequences differ in shape");
  kinest::detail::require_dims(y.joints() == kin::kNumJoints && tree.size() == kin::kNumJoints,
                               "metrics: expected the 22-joint skeleton");
  if (y.frames() < 2) throw DimensionError("metrics: sequence too short (need at least 2 frames)");
  kinest::detail::require_domain(fps > 0.0 && std::isfinite(fps), "metrics: fps must be positive");

  const std::vector<Eigen::Vector3d>* gt_root = z.has_root_translation() ? &z.root_translation() : nullptr;
  const Trajectory py = sequence_positions(y, tree, gt_root);
  const Trajectory pz = sequence_positions(z, tree);

  MetricReport r;
  r.frames = y.frames();
  r.fps = fps;

  double ang = 0.0;
  for (std::size_t l = 0; l < y.frames(); ++l)
    for (std::size_t j = 0; j < y.joints(); ++j)
      ang += rot::geodesic_angle(rot::relative_rotation(y.rotation(l, j), z.rotation(l, j)));
  r.mpjre = ang / static_cast<double>(y.frames() * y.joints()) * 180.0 / std::numbers::pi;

  std::array<int, kin::kNumJoints> all{};
  for (std::size_t j = 0; j < all.size(); ++j) all[j] = static_cast<int>(j);
  r.mpjpe = 100.0 * detail::mean_position_error(py, pz, all);
  r.root_pe = 100.0 * detail::mean_position_error(py, pz, kRootJoints);
  r.hand_pe = 100.0 * detail::mean_position_error(py, pz, kHandJoints);
  r.upper_pe = 100.0 * detail::mean_position_error(py, pz, kUpperJoints);
  r.lower_pe = 100.0 * detail::mean_position_error(py, pz, kLowerJoints);

  double vel = 0.0;
  for (std::size_t l = 1; l < y.frames(); ++l)
    for (std::size_t j = 0; j < y.joints(); ++j)
      vel += ((py[l][j] - py[l - 1][j]) - (pz[l][j] - pz[l - 1][j])).norm();
  r.mpjve = 100.0 * fps * vel / static_cast<double>((y.frames() - 1) * y.joints());

  r.jitter_pred = jitter(py, fps);
  r.jitter_gt = jitter(pz, fps);
  return r;
}

}  // namespace kinest::metrics
