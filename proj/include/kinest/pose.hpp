#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "kinest/error.hpp"
#include "kinest/kinematics.hpp"
#include "kinest/rotations.hpp"

namespace kinest {

/// L frames x J joints x 6D rotation values, optionally with a per-frame
/// root translation in meters. J is 22 for SMPL sequences; the losses also
/// accept other joint counts.
class PoseSequence {
 public:
  PoseSequence() = default;
  PoseSequence(std::size_t frames, std::size_t joints = kin::kNumJoints)
      : frames_(frames), joints_(joints), values_(frames * joints * 6, 0.0) {}
  PoseSequence(std::size_t frames, std::size_t joints, std::vector<double> values)
      : frames_(frames), joints_(joints), values_(std::move(values)) {
    detail::require_dims(values_.size() == frames_ * joints_ * 6,
                         "PoseSequence: value count must equal L * J * 6");
  }

  std::size_t frames() const { return frames_; }
  std::size_t joints() const { return joints_; }
  std::size_t size() const { return values_.size(); }

  double& at(std::size_t l, std::size_t j, std::size_t k) { return values_[(l * joints_ + j) * 6 + k]; }
  double at(std::size_t l, std::size_t j, std::size_t k) const { return values_[(l * joints_ + j) * 6 + k]; }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  rot::Rot6D sixd(std::size_t l, std::size_t j) const {
    rot::Rot6D r;
    for (std::size_t k = 0; k < 6; ++k) r[k] = at(l, j, k);
    return r;
  }
  void set_sixd(std::size_t l, std::size_t j, const rot::Rot6D& r) {
    for (std::size_t k = 0; k < 6; ++k) at(l, j, k) = r[k];
  }
  void set_rotation(std::size_t l, std::size_t j, const rot::Mat3& r) { set_sixd(l, j, rot::matrix_to_sixd(r)); }
  rot::Mat3 rotation(std::size_t l, std::size_t j) const { return rot::sixd_to_matrix(sixd(l, j)); }

  bool has_root_translation() const { return root_translation_.has_value(); }
  const std::vector<Eigen::Vector3d>& root_translation() const { return *root_translation_; }
  void set_root_translation(std::vector<Eigen::Vector3d> t) {
    detail::require_dims(t.size() == frames_, "PoseSequence: one root translation per frame");
    root_translation_ = std::move(t);
  }
  void clear_root_translation() { root_translation_.reset(); }

  bool same_shape(const PoseSequence& o) const { return frames_ == o.frames_ && joints_ == o.joints_; }

 private:
  std::size_t frames_ = 0;
  std::size_t joints_ = kin::kNumJoints;
  std::vector<double> values_;
  std::optional<std::vector<Eigen::Vector3d>> root_translation_;
};

/// Global joint positions for every frame: result[l][j]. Uses the
/// sequence's own root translation, then `fallback_root`, then the origin.
inline std::vector<std::vector<Eigen::Vector3d>> sequence_positions(
    const PoseSequence& pose, const kin::KinematicTree& tree,
    const std::vector<Eigen::Vector3d>* fallback_root = nullptr) {
  detail::require_dims(pose.joints() == tree.size(), "sequence_positions: joint count differs from skeleton");
  const std::vector<Eigen::Vector3d>* root = pose.has_root_translation() ? &pose.root_translation() : fallback_root;
  if (root != nullptr) detail::require_dims(root->size() == pose.frames(), "sequence_positions: root length");
  std::vector<std::vector<Eigen::Vector3d>> out(pose.frames());
  std::vector<rot::Mat3> local(pose.joints());
  for (std::size_t l = 0; l < pose.frames(); ++l) {
    for (std::size_t j = 0; j < pose.joints(); ++j) local[j] = pose.rotation(l, j);
    out[l] = kin::forward_kinematics(local, tree, root != nullptr ? (*root)[l] : Eigen::Vector3d::Zero());
  }
  return out;
}

}  // namespace kinest
