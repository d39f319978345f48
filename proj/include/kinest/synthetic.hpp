#pragma once

// Deterministic synthetic motion and the sparse tracking signals derived
// from it.

#include <cmath>
#include <array>
#include <cstdint>
#include <numbers>
#include <vector>

#include <Eigen/Core>

#include "kinest/io.hpp"
#include "kinest/kinematics.hpp"
#include "kinest/pose.hpp"
#include "kinest/rotations.hpp"
#include "kinest/weights.hpp"

namespace kinest::synth {

/// SplitMix64-backed generator; portable across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() { return detail::splitmix64(state_); }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller.
  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  double sign() { return (next() >> 63) ? 1.0 : -1.0; }

 private:
  std::uint64_t state_;
};

/// One channel: sum of three low-frequency sinusoids.
struct Wave {
  std::array<double, 3> amp{};
  std::array<double, 3> freq{};
  std::array<double, 3> phase{};

  static Wave random(Rng& rng, double max_amp) {
    Wave w;
    for (std::size_t m = 0; m < 3; ++m) {
      w.amp[m] = rng.uniform(0.0, max_amp / 3.0);
      w.freq[m] = rng.uniform(0.1, 1.2);  // Hz
      w.phase[m] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
    return w;
  }
  double operator()(double seconds) const {
    double v = 0.0;
    for (std::size_t m = 0; m < 3; ++m) v += amp[m] * std::sin(2.0 * std::numbers::pi * freq[m] * seconds + phase[m]);
    return v;
  }
};

/// Smooth 22-joint motion: every joint's axis-angle follows per-axis
/// sinusoids (root yaw also drifts), root translation walks forward.
inline PoseSequence synthetic_pose(std::uint64_t seed, std::size_t frames, double fps = 60.0) {
  Rng rng(seed ^ 0x706F736553455121ULL);
  std::vector<std::array<Wave, 3>> joint_waves(kin::kNumJoints);
  for (std::size_t j = 0; j < kin::kNumJoints; ++j)
    for (auto& w : joint_waves[j]) w = Wave::random(rng, j == 0 ? 0.3 : 0.6);
  std::array<Wave, 3> root_waves;
  for (auto& w : root_waves) w = Wave::random(rng, 0.1);
  const double yaw_rate = rng.uniform(-0.5, 0.5);  // rad/s
  const double speed = rng.uniform(0.2, 1.2);      // m/s

  PoseSequence p(frames);
  std::vector<Eigen::Vector3d> root(frames);
  for (std::size_t l = 0; l < frames; ++l) {
    const double s = static_cast<double>(l) / fps;
    for (std::size_t j = 0; j < kin::kNumJoints; ++j) {
      Eigen::Vector3d w(joint_waves[j][0](s), joint_waves[j][1](s), joint_waves[j][2](s));
      rot::Mat3 r = rot::exp_map(w);
      if (j == 0) r = rot::exp_map(Eigen::Vector3d(0.0, yaw_rate * s, 0.0)) * r;
      p.set_rotation(l, j, r);
    }
    root[l] = Eigen::Vector3d(root_waves[0](s), 0.95 + root_waves[1](s), speed * s + root_waves[2](s));
  }
  p.set_root_translation(std::move(root));
  return p;
}

/// Tracked parts for sparse input: head, left wrist, right wrist.
inline constexpr std::array<int, 3> kTrackedJoints = {kin::kHead, kin::kLeftWrist, kin::kRightWrist};

/// 54 columns per frame: for each tracked part, global position (3), global
/// orientation as 6D (6), linear velocity (3, m/s) and frame-to-frame
/// relative rotation as 6D (6). Frame 0 uses zero velocity and identity.
inline io::SequenceFile sparse_from_pose(const PoseSequence& pose, const kin::KinematicTree& tree, double fps) {
  detail::require_dims(pose.joints() == tree.size(), "sparse_from_pose: joint count differs from skeleton");
  detail::require_domain(fps > 0.0, "sparse_from_pose: fps must be positive");
  io::SequenceFile s;
  s.kind = io::SequenceKind::kSparseInput;
  s.frames = pose.frames();
  s.columns = io::kSparseColumns;
  s.fps = fps;
  s.values.assign(s.frames * s.columns, 0.0f);

  std::vector<rot::Mat3> local(pose.joints());
  kin::FkResult prev;
  for (std::size_t l = 0; l < pose.frames(); ++l) {
    for (std::size_t j = 0; j < pose.joints(); ++j) local[j] = pose.rotation(l, j);
    const Eigen::Vector3d root = pose.has_root_translation() ? pose.root_translation()[l] : Eigen::Vector3d::Zero();
    kin::FkResult cur = kin::forward_kinematics_global(local, tree, root);
    for (std::size_t part = 0; part < kTrackedJoints.size(); ++part) {
      const auto j = static_cast<std::size_t>(kTrackedJoints[part]);
      const std::size_t base = part * 18;
      const rot::Rot6D ori = rot::matrix_to_sixd(cur.rotations[j]);
      Eigen::Vector3d vel = Eigen::Vector3d::Zero();
      rot::Rot6D ang = rot::matrix_to_sixd(rot::Mat3::Identity());
      if (l > 0) {
        vel = (cur.positions[j] - prev.positions[j]) * fps;
        ang = rot::matrix_to_sixd(rot::relative_rotation(prev.rotations[j], cur.rotations[j]));
      }
      for (int k = 0; k < 3; ++k) s.at(l, base + k) = static_cast<float>(cur.positions[j][k]);
      for (std::size_t k = 0; k < 6; ++k) s.at(l, base + 3 + k) = static_cast<float>(ori[k]);
      for (int k = 0; k < 3; ++k) s.at(l, base + 9 + k) = static_cast<float>(vel[k]);
      for (std::size_t k = 0; k < 6; ++k) s.at(l, base + 12 + k) = static_cast<float>(ang[k]);
    }
    prev = std::move(cur);
  }
  return s;
}

inline io::SequenceFile synthetic_pose_file(std::uint64_t seed, std::size_t frames, double fps = 60.0) {
  return io::from_pose_sequence(synthetic_pose(seed, frames, fps), fps);
}

inline io::SequenceFile synthetic_sparse(std::uint64_t seed, std::size_t frames, const kin::KinematicTree& tree,
                                         double fps = 60.0) {
  return sparse_from_pose(synthetic_pose(seed, frames, fps), tree, fps);
}

}  // namespace kinest::synth
