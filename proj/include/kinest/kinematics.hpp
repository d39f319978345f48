#pragma once

// SMPL-22 skeleton, kinematic-tree scan orders and forward kinematics.

#include <algorithm>
#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "kinest/error.hpp"
#include "kinest/rotations.hpp"

namespace kinest::kin {

inline constexpr std::size_t kNumJoints = 22;

/// SMPL joint indices used across the library.
enum Joint : int {
  kPelvis = 0,
  kLeftHip = 1,
  kRightHip = 2,
  kSpine1 = 3,
  kLeftKnee = 4,
  kRightKnee = 5,
  kSpine2 = 6,
  kLeftAnkle = 7,
  kRightAnkle = 8,
  kSpine3 = 9,
  kLeftFoot = 10,
  kRightFoot = 11,
  kNeck = 12,
  kLeftCollar = 13,
  kRightCollar = 14,
  kHead = 15,
  kLeftShoulder = 16,
  kRightShoulder = 17,
  kLeftElbow = 18,
  kRightElbow = 19,
  kLeftWrist = 20,
  kRightWrist = 21,
};

inline constexpr std::array<int, kNumJoints> kSmplParents = {
    -1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19};

/// Neutral-body rest offsets (child minus parent, meters). Also shipped as
/// data/smpl22_neutral.skel.
inline constexpr std::array<std::array<double, 3>, kNumJoints> kNeutralOffsets = {{
    {0.0, 0.0, 0.0},
    {0.0586, -0.0823, -0.0177},
    {-0.0603, -0.0905, -0.0135},
    {0.0044, 0.1244, -0.0384},
    {0.0435, -0.3865, 0.0080},
    {-0.0433, -0.3831, -0.0048},
    {0.0045, 0.1380, 0.0268},
    {-0.0148, -0.4269, -0.0374},
    {0.0191, -0.4200, -0.0346},
    {-0.0023, 0.0560, 0.0029},
    {0.0412, -0.0603, 0.1220},
    {-0.0348, -0.0621, 0.1303},
    {-0.0134, 0.2116, -0.0335},
    {0.0717, 0.1140, -0.0189},
    {-0.0830, 0.1125, -0.0237},
    {0.0101, 0.0889, 0.0504},
    {0.1229, 0.0452, -0.0190},
    {-0.1132, 0.0468, -0.0085},
    {0.2553, -0.0156, -0.0229},
    {-0.2601, -0.0143, -0.0313},
    {0.2657, 0.0127, -0.0073},
    {-0.2691, 0.0068, -0.0060},
}};

/// Parent pointers plus rest offsets. Construction validates a single root
/// and acyclicity and caches a parents-first evaluation order.
class KinematicTree {
 public:
  KinematicTree(std::vector<int> parent, std::vector<Eigen::Vector3d> offset)
      : parent_(std::move(parent)), offset_(std::move(offset)) {
    const std::size_t n = parent_.size();
    detail::require_dims(n >= 1 && offset_.size() == n,
                         "KinematicTree: parent and offset counts differ");
    std::size_t roots = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const int p = parent_[j];
      if (p == -1) {
        ++roots;
        root_ = static_cast<int>(j);
      } else if (p < 0 || static_cast<std::size_t>(p) >= n || static_cast<std::size_t>(p) == j) {
        throw DomainError("KinematicTree: joint " + std::to_string(j) + " has invalid parent");
      }
      detail::require_domain(offset_[j].allFinite(), "KinematicTree: non-finite offset");
    }
    if (roots != 1) throw DomainError("KinematicTree: expected exactly one root");

    // Walk every joint up to the root; a walk longer than n means a cycle.
    std::vector<std::size_t> depth(n, 0);
    for (std::size_t j = 0; j < n; ++j) {
      std::size_t steps = 0;
      for (int cur = static_cast<int>(j); parent_[static_cast<std::size_t>(cur)] != -1;
           cur = parent_[static_cast<std::size_t>(cur)]) {
        if (++steps > n) throw DomainError("KinematicTree: cycle through joint " + std::to_string(j));
      }
      depth[j] = steps;
    }
    order_.resize(n);
    for (std::size_t j = 0; j < n; ++j) order_[j] = static_cast<int>(j);
    std::stable_sort(order_.begin(), order_.end(), [&](int l, int r) {
      return depth[static_cast<std::size_t>(l)] < depth[static_cast<std::size_t>(r)];
    });
  }

  std::size_t size() const { return parent_.size(); }
  int root() const { return root_; }
  int parent(std::size_t j) const { return parent_[j]; }
  const std::vector<int>& parents() const { return parent_; }
  const Eigen::Vector3d& offset(std::size_t j) const { return offset_[j]; }
  const std::vector<Eigen::Vector3d>& offsets() const { return offset_; }
  /// Joints sorted so every parent precedes its children.
  const std::vector<int>& topological_order() const { return order_; }

 private:
  std::vector<int> parent_;
  std::vector<Eigen::Vector3d> offset_;
  std::vector<int> order_;
  int root_ = 0;
};

inline KinematicTree smpl22_tree() {
  std::vector<int> parent(kSmplParents.begin(), kSmplParents.end());
  std::vector<Eigen::Vector3d> offset;
  offset.reserve(kNumJoints);
  for (const auto& o : kNeutralOffsets) offset.emplace_back(o[0], o[1], o[2]);
  return {std::move(parent), std::move(offset)};
}

enum class Direction { kForward, kBackward };

/// A joint scan sequence and its exact reverse.
class ScanOrder {
 public:
  explicit ScanOrder(std::vector<int> forward, std::size_t num_joints = kNumJoints)
      : forward_(std::move(forward)), backward_(forward_.rbegin(), forward_.rend()), num_joints_(num_joints) {
    std::vector<bool> seen(num_joints, false);
    for (int j : forward_) {
      if (j < 0 || static_cast<std::size_t>(j) >= num_joints) {
        throw DomainError("ScanOrder: joint index " + std::to_string(j) + " out of range");
      }
      seen[static_cast<std::size_t>(j)] = true;
    }
    if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) {
      throw DomainError("ScanOrder: every joint must appear at least once");
    }
  }

  const std::vector<int>& forward() const { return forward_; }
  const std::vector<int>& backward() const { return backward_; }
  const std::vector<int>& sequence(Direction d) const {
    return d == Direction::kForward ? forward_ : backward_;
  }
  std::size_t length() const { return forward_.size(); }
  std::size_t num_joints() const { return num_joints_; }

  bool is_permutation() const {
    std::vector<int> s = forward_;
    std::sort(s.begin(), s.end());
    return std::adjacent_find(s.begin(), s.end()) == s.end();
  }

 private:
  std::vector<int> forward_;
  std::vector<int> backward_;
  std::size_t num_joints_;
};

/// Plain SMPL index order 0..21.
inline ScanOrder index_order() {
  std::vector<int> f(kNumJoints);
  for (std::size_t j = 0; j < kNumJoints; ++j) f[j] = static_cast<int>(j);
  return ScanOrder(std::move(f));
}

/// Five root-to-leaf branches (left leg, right leg, left arm, head, right
/// arm), each restarting at the pelvis. A new branch begins wherever joint 0
/// reappears.
inline ScanOrder fks_order() {
  return ScanOrder({0, 1, 4, 7, 10,
                    0, 2, 5, 8, 11,
                    0, 3, 6, 9, 13, 16, 18, 20,
                    0, 3, 6, 9, 12, 15,
                    0, 3, 6, 9, 14, 17, 19, 21});
}

/// Single permutation with the pelvis in the middle: right arm, head and
/// neck, left arm, spine, pelvis, left leg, right leg.
inline ScanOrder uks_order() {
  return ScanOrder({21, 19, 17, 14, 15, 12, 20, 18, 16, 13, 9, 6, 3, 0, 1, 4, 7, 10, 2, 5, 8, 11});
}

enum class ScanStrategy { kIndex, kFks, kUks };

inline ScanOrder scan_order(ScanStrategy s) {
  switch (s) {
    case ScanStrategy::kIndex: return index_order();
    case ScanStrategy::kFks: return fks_order();
    case ScanStrategy::kUks: return uks_order();
  }
  throw DomainError("scan_order: unknown strategy");
}

/// Dense L x J x D tensor, row-major with D fastest.
template <class T>
struct JointTensor {
  std::size_t frames = 0;
  std::size_t joints = 0;
  std::size_t dim = 0;
  std::vector<T> data;

  JointTensor() = default;
  JointTensor(std::size_t l, std::size_t j, std::size_t d) : frames(l), joints(j), dim(d), data(l * j * d) {}

  T& at(std::size_t l, std::size_t j, std::size_t d) { return data[(l * joints + j) * dim + d]; }
  const T& at(std::size_t l, std::size_t j, std::size_t d) const { return data[(l * joints + j) * dim + d]; }

  bool operator==(const JointTensor&) const = default;
};

/// output[l][k] = features[l][order[k]] along the requested direction.
template <class T>
JointTensor<T> reorder_joint_features(const JointTensor<T>& features, const ScanOrder& order,
                                      Direction direction) {
  const auto& seq = order.sequence(direction);
  JointTensor<T> out(features.frames, seq.size(), features.dim);
  for (std::size_t k = 0; k < seq.size(); ++k) {
    if (seq[k] < 0 || static_cast<std::size_t>(seq[k]) >= features.joints) {
      throw DomainError("reorder_joint_features: order index out of range");
    }
  }
  for (std::size_t l = 0; l < features.frames; ++l) {
    for (std::size_t k = 0; k < seq.size(); ++k) {
      const T* src = &features.at(l, static_cast<std::size_t>(seq[k]), 0);
      std::copy(src, src + features.dim, &out.at(l, k, 0));
    }
  }
  return out;
}

/// Adjoint of the gather: scatter-add back onto `num_joints` joints, so a
/// joint visited several times receives the sum of its contributions.
template <class T>
JointTensor<T> scatter_joint_features(const JointTensor<T>& gathered, const ScanOrder& order,
                                      Direction direction, std::size_t num_joints = kNumJoints) {
  const auto& seq = order.sequence(direction);
  detail::require_dims(gathered.joints == seq.size(), "scatter_joint_features: length mismatch");
  JointTensor<T> out(gathered.frames, num_joints, gathered.dim);
  for (std::size_t l = 0; l < gathered.frames; ++l) {
    for (std::size_t k = 0; k < seq.size(); ++k) {
      const auto j = static_cast<std::size_t>(seq[k]);
      for (std::size_t d = 0; d < gathered.dim; ++d) out.at(l, j, d) += gathered.at(l, k, d);
    }
  }
  return out;
}

struct FkResult {
  std::vector<Eigen::Vector3d> positions;
  std::vector<rot::Mat3> rotations;  // global orientation of each joint
};

/// global_rot[root] = local[root], global_rot[j] = global_rot[parent] local[j];
/// pos[root] = root_position, pos[j] = pos[parent] + global_rot[parent] offset[j].
inline FkResult forward_kinematics_global(std::span<const rot::Mat3> local, const KinematicTree& tree,
                                          const Eigen::Vector3d& root_position = Eigen::Vector3d::Zero()) {
  detail::require_dims(local.size() == tree.size(), "forward_kinematics: one rotation per joint required");
  FkResult r{std::vector<Eigen::Vector3d>(tree.size()), std::vector<rot::Mat3>(tree.size())};
  for (int j : tree.topological_order()) {
    const auto ju = static_cast<std::size_t>(j);
    const int p = tree.parent(ju);
    if (p < 0) {
      r.rotations[ju] = local[ju];
      r.positions[ju] = root_position;
    } else {
      const auto pu = static_cast<std::size_t>(p);
      r.rotations[ju] = r.rotations[pu] * local[ju];
      r.positions[ju] = r.positions[pu] + r.rotations[pu] * tree.offset(ju);
    }
  }
  return r;
}

/// Global joint positions for one frame of local rotations.
inline std::vector<Eigen::Vector3d> forward_kinematics(std::span<const rot::Mat3> local, const KinematicTree& tree,
                                                       const Eigen::Vector3d& root_position = Eigen::Vector3d::Zero()) {
  return forward_kinematics_global(local, tree, root_position).positions;
}

}  // namespace kinest::kin
