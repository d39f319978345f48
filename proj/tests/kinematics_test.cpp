#include <gtest/gtest.h>

#include <algorithm>
#include <numbers>
#include <random>

#include "kinest/kinematics.hpp"
#include "kinest/rotations.hpp"
#include "oracles.hpp"

namespace kin = kinest::kin;
using oracle::Mat3;
using oracle::Vec3;

TEST(Tree, SmplParents) {
  const auto t = kin::smpl22_tree();
  const std::vector<int> expected = {-1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19};
  EXPECT_EQ(t.parents(), expected);
  EXPECT_EQ(t.root(), 0);
  EXPECT_EQ(t.size(), 22u);
}

TEST(Tree, RejectsCyclesAndMultipleRoots) {
  const std::vector<Vec3> off(3, Vec3::Zero());
  EXPECT_THROW(kin::KinematicTree({-1, 2, 1}, off), kinest::DomainError);
  EXPECT_THROW(kin::KinematicTree({-1, -1, 0}, off), kinest::DomainError);
  EXPECT_THROW(kin::KinematicTree({-1, 0, 7}, off), kinest::DomainError);
  EXPECT_THROW(kin::KinematicTree({-1, 0}, off), kinest::DimensionError);
}

TEST(Tree, ParentNeedNotPrecedeChild) {
  // Joint 0 hangs off joint 2, which is the root.
  const std::vector<Vec3> off = {Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3::Zero()};
  const kin::KinematicTree t({2, 0, -1}, off);
  EXPECT_EQ(t.root(), 2);
  const auto order = t.topological_order();
  EXPECT_EQ(order.front(), 2);
  std::vector<Mat3> local(3, Mat3::Identity());
  const auto p = kin::forward_kinematics(local, t);
  EXPECT_TRUE(p[1].isApprox(Vec3(1, 1, 0)));
}

TEST(Orders, IndexOrder) {
  const auto o = kin::index_order();
  ASSERT_EQ(o.length(), 22u);
  EXPECT_EQ(o.forward()[0], 0);
  EXPECT_EQ(o.forward()[21], 21);
  EXPECT_EQ(o.backward()[0], 21);
}

TEST(Orders, FksExactList) {
  const std::vector<int> expected = {0, 1, 4, 7, 10, 0, 2, 5, 8, 11, 0, 3, 6, 9, 13, 16,
                                     18, 20, 0, 3, 6, 9, 12, 15, 0, 3, 6, 9, 14, 17, 19, 21};
  const auto o = kin::fks_order();
  EXPECT_EQ(o.forward(), expected);
  EXPECT_EQ(std::count(o.forward().begin(), o.forward().end(), 0), 5);
  EXPECT_FALSE(o.is_permutation());
}

TEST(Orders, FksBranchesFollowBones) {
  const auto t = kin::smpl22_tree();
  const auto f = kin::fks_order().forward();
  for (std::size_t k = 1; k < f.size(); ++k) {
    if (f[k] == 0) continue;
    EXPECT_EQ(t.parent(static_cast<std::size_t>(f[k])), f[k - 1]) << "position " << k;
  }
}

TEST(Orders, UksExactList) {
  const std::vector<int> expected = {21, 19, 17, 14, 15, 12, 20, 18, 16, 13, 9, 6, 3, 0, 1, 4, 7, 10, 2, 5, 8, 11};
  const auto o = kin::uks_order();
  EXPECT_EQ(o.forward(), expected);
  EXPECT_TRUE(o.is_permutation());
  EXPECT_EQ(std::find(o.forward().begin(), o.forward().end(), 0) - o.forward().begin(), 13);
}

TEST(Orders, BackwardIsReverse) {
  for (const auto& o : {kin::index_order(), kin::fks_order(), kin::uks_order()}) {
    for (std::size_t i = 0; i < o.length(); ++i) EXPECT_EQ(o.backward()[i], o.forward()[o.length() - 1 - i]);
  }
}

TEST(Orders, RejectsIncompleteOrOutOfRange) {
  EXPECT_THROW(kin::ScanOrder({0, 1, 2}), kinest::DomainError);
  std::vector<int> bad(22);
  for (int j = 0; j < 22; ++j) bad[static_cast<std::size_t>(j)] = j;
  bad[5] = 22;
  EXPECT_THROW(kin::ScanOrder{bad}, kinest::DomainError);
}

namespace {

kin::JointTensor<float> random_tensor(std::mt19937_64& g, std::size_t l, std::size_t j, std::size_t d) {
  kin::JointTensor<float> t(l, j, d);
  std::normal_distribution<float> nd;
  for (float& v : t.data) v = nd(g);
  return t;
}

}  // namespace

TEST(Reorder, IndexForwardIsIdentity) {
  std::mt19937_64 g(1);
  const auto t = random_tensor(g, 3, 22, 4);
  EXPECT_EQ(kin::reorder_joint_features(t, kin::index_order(), kin::Direction::kForward), t);
}

TEST(Reorder, UksStartsAtRightWrist) {
  std::mt19937_64 g(2);
  const auto t = random_tensor(g, 3, 22, 4);
  const auto r = kin::reorder_joint_features(t, kin::uks_order(), kin::Direction::kForward);
  for (std::size_t l = 0; l < 3; ++l)
    for (std::size_t d = 0; d < 4; ++d) EXPECT_EQ(r.at(l, 0, d), t.at(l, 21, d));
}

TEST(Reorder, MatchesNaiveGather) {
  std::mt19937_64 g(3);
  const auto t = random_tensor(g, 4, 22, 3);
  for (auto dir : {kin::Direction::kForward, kin::Direction::kBackward}) {
    const auto o = kin::fks_order();
    const auto r = kin::reorder_joint_features(t, o, dir);
    ASSERT_EQ(r.joints, 32u);
    const auto& seq = o.sequence(dir);
    for (std::size_t l = 0; l < 4; ++l)
      for (std::size_t k = 0; k < seq.size(); ++k)
        for (std::size_t d = 0; d < 3; ++d)
          EXPECT_EQ(r.at(l, k, d), t.data[(l * 22 + static_cast<std::size_t>(seq[k])) * 3 + d]);
  }
}

TEST(Reorder, ScatterInvertsPermutation) {
  std::mt19937_64 g(4);
  const auto t = random_tensor(g, 2, 22, 5);
  for (auto dir : {kin::Direction::kForward, kin::Direction::kBackward}) {
    const auto r = kin::reorder_joint_features(t, kin::uks_order(), dir);
    EXPECT_EQ(kin::scatter_joint_features(r, kin::uks_order(), dir, 22), t);
  }
}

TEST(Reorder, ScatterSumsRepeatedJoints) {
  kin::JointTensor<float> t(1, 22, 1);
  for (std::size_t j = 0; j < 22; ++j) t.at(0, j, 0) = 1.0f;
  const auto r = kin::reorder_joint_features(t, kin::fks_order(), kin::Direction::kForward);
  const auto s = kin::scatter_joint_features(r, kin::fks_order(), kin::Direction::kForward, 22);
  EXPECT_EQ(s.at(0, 0, 0), 5.0f);   // pelvis starts every branch
  EXPECT_EQ(s.at(0, 3, 0), 3.0f);   // spine1 shared by three branches
  EXPECT_EQ(s.at(0, 10, 0), 1.0f);  // left foot
}

TEST(Fk, IdentityPoseSumsOffsets) {
  const auto t = kin::smpl22_tree();
  const std::vector<Mat3> local(22, Mat3::Identity());
  const auto p = kin::forward_kinematics(local, t);
  for (std::size_t j = 0; j < 22; ++j) {
    Vec3 sum = Vec3::Zero();
    for (int cur = static_cast<int>(j); cur >= 0; cur = t.parent(static_cast<std::size_t>(cur)))
      sum += t.offset(static_cast<std::size_t>(cur));
    EXPECT_LE((p[j] - sum).norm(), 1e-12) << j;
  }
}

TEST(Fk, RootHalfTurnNegatesXY) {
  const auto t = kin::smpl22_tree();
  std::vector<Mat3> local(22, Mat3::Identity());
  const auto rest = kin::forward_kinematics(local, t);
  local[0] = kinest::rot::rot_z(std::numbers::pi);
  const auto p = kin::forward_kinematics(local, t);
  for (std::size_t j = 1; j < 22; ++j) {
    EXPECT_NEAR(p[j].x(), -rest[j].x(), 1e-12);
    EXPECT_NEAR(p[j].y(), -rest[j].y(), 1e-12);
    EXPECT_NEAR(p[j].z(), rest[j].z(), 1e-12);
  }
}

TEST(Fk, MatchesHomogeneousChainOracle) {
  std::mt19937_64 g(5);
  const auto t = kin::smpl22_tree();
  std::normal_distribution<double> nd;
  for (int i = 0; i < 50; ++i) {
    std::vector<Mat3> local(22);
    for (auto& r : local) r = oracle::random_rotation(g);
    const Vec3 root(nd(g), nd(g), nd(g));
    const auto p = kin::forward_kinematics(local, t, root);
    const auto ref = oracle::chain_fk(local, t, root);
    for (std::size_t j = 0; j < 22; ++j) EXPECT_LE((p[j] - ref[j]).norm(), 1e-12);
  }
}

TEST(Fk, GlobalRotationsCompose) {
  std::mt19937_64 g(6);
  const auto t = kin::smpl22_tree();
  std::vector<Mat3> local(22);
  for (auto& r : local) r = oracle::random_rotation(g);
  const auto fk = kin::forward_kinematics_global(local, t);
  // Left wrist: 0 -> 3 -> 6 -> 9 -> 13 -> 16 -> 18 -> 20.
  Mat3 expect = Mat3::Identity();
  for (int j : {0, 3, 6, 9, 13, 16, 18, 20}) expect = expect * local[static_cast<std::size_t>(j)];
  EXPECT_LE((fk.rotations[20] - expect).norm(), 1e-12);
}

TEST(Fk, BoneLengthsAndRigidInvariance) {
  std::mt19937_64 g(7);
  const auto t = kin::smpl22_tree();
  std::vector<Mat3> local(22);
  for (auto& r : local) r = oracle::random_rotation(g);
  const Vec3 root(0.1, 0.9, -0.3);
  const auto p = kin::forward_kinematics(local, t, root);
  for (std::size_t j = 1; j < 22; ++j) {
    const auto par = static_cast<std::size_t>(t.parent(j));
    EXPECT_NEAR((p[j] - p[par]).norm(), t.offset(j).norm(), 1e-12);
  }
  const Mat3 q = oracle::random_rotation(g);
  auto moved = local;
  moved[0] = q * local[0];
  const auto pq = kin::forward_kinematics(moved, t, root);
  for (std::size_t j = 0; j < 22; ++j) EXPECT_LE((pq[j] - root - q * (p[j] - root)).norm(), 1e-12);
}

TEST(Fk, RejectsWrongJointCount) {
  const std::vector<Mat3> local(21, Mat3::Identity());
  EXPECT_THROW(kin::forward_kinematics(local, kin::smpl22_tree()), kinest::DimensionError);
}
