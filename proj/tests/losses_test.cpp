#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "kinest/losses.hpp"
#include "oracles.hpp"

namespace loss = kinest::loss;
namespace rot = kinest::rot;
using kinest::PoseSequence;
using oracle::Vec3;

namespace {

PoseSequence identity_pose(std::size_t frames, std::size_t joints = 22) {
  PoseSequence p(frames, joints);
  for (std::size_t l = 0; l < frames; ++l)
    for (std::size_t j = 0; j < joints; ++j) p.set_rotation(l, j, rot::Mat3::Identity());
  return p;
}

}  // namespace

TEST(LossRot, ConstantOffset) {
  const auto z = identity_pose(4);
  auto y = z;
  for (double& v : y.values()) v += 0.5;
  EXPECT_DOUBLE_EQ(loss::loss_rot(y, z), 0.5);
  EXPECT_EQ(loss::loss_rot(z, z), 0.0);
}

TEST(LossRot, RejectsShapeMismatch) {
  EXPECT_THROW(loss::loss_rot(identity_pose(3), identity_pose(4)), kinest::DimensionError);
}

TEST(LossOri, OnlyRootCounts) {
  const auto z = identity_pose(3);
  auto y = z;
  for (std::size_t l = 0; l < 3; ++l)
    for (std::size_t j = 1; j < 22; ++j) y.at(l, j, 0) += 1.0;
  EXPECT_EQ(loss::loss_ori(y, z), 0.0);
  y.at(1, 0, 2) += 0.6;
  EXPECT_DOUBLE_EQ(loss::loss_ori(y, z), 0.6 / 18.0);
}

TEST(AngularVelocity, ConstantSpinAboutZ) {
  PoseSequence p(3, 1);
  for (std::size_t l = 0; l < 3; ++l) p.set_rotation(l, 0, rot::rot_z(std::numbers::pi / 8 * double(l)));
  const auto w = loss::angular_velocity(p);
  ASSERT_EQ(w.steps, 2u);
  for (std::size_t t = 0; t < 2; ++t) EXPECT_LE((w.at(t, 0) - Vec3(0, 0, std::numbers::pi / 8)).norm(), 1e-12);
  EXPECT_THROW(loss::angular_velocity(PoseSequence(1, 1)), kinest::DimensionError);
}

TEST(AngvelGeo, StaticVersusSpinningJoint) {
  const auto z = identity_pose(2, 1);
  PoseSequence y(2, 1);
  y.set_rotation(0, 0, rot::Mat3::Identity());
  y.set_rotation(1, 0, rot::rot_z(std::numbers::pi / 8));
  EXPECT_NEAR(loss::loss_angvel_geo(y, z), std::numbers::pi / 8, 1e-12);
}

TEST(AngvelGeo, MatchesOracle) {
  std::mt19937_64 g(1);
  for (int i = 0; i < 10; ++i) {
    const auto y = oracle::random_pose(g, 6);
    const auto z = oracle::random_pose(g, 6);
    EXPECT_NEAR(loss::loss_angvel_geo(y, z), oracle::angvel_geo(y, z), 1e-9);
  }
}

TEST(AngvelDiff, LinearRamp) {
  // Every component of y ramps by 0.1 per frame; z is static. Three
  // frames give two steps of 6 * 0.1 per joint.
  const auto z = identity_pose(3);
  auto y = z;
  for (std::size_t l = 0; l < 3; ++l)
    for (std::size_t j = 0; j < 22; ++j)
      for (std::size_t k = 0; k < 6; ++k) y.at(l, j, k) += 0.1 * double(l);
  EXPECT_NEAR(loss::loss_angvel_diff(y, z), 1.2, 1e-12);
}

TEST(PosVel, RootShift) {
  const auto tree = kinest::kin::smpl22_tree();
  auto z = identity_pose(3);
  auto y = z;
  const Vec3 delta(0.1, -0.2, 0.05);
  z.set_root_translation({Vec3::Zero(), Vec3::Zero(), Vec3::Zero()});
  y.set_root_translation({delta, delta, delta});
  EXPECT_NEAR(loss::loss_pos(y, z, tree), delta.squaredNorm(), 1e-14);
  EXPECT_NEAR(loss::loss_vel(y, z, tree), 0.0, 1e-14);
}

TEST(Total, WeightedSumOfParts) {
  // rot = ori = angvel = 1 gives 1 + 0.02 + 1.
  EXPECT_DOUBLE_EQ(loss::combine({}, 1.0, 1.0, 1.0), 2.02);
  std::mt19937_64 g(2);
  const auto y = oracle::random_pose(g, 5);
  const auto z = oracle::random_pose(g, 5);
  const loss::LossWeights w{0.7, 0.3, 1.9};
  const auto b = loss::loss_breakdown(y, z, w);
  EXPECT_NEAR(b.rot, oracle::rot_l1(y, z), 1e-12);
  EXPECT_NEAR(b.ori, oracle::ori_l1(y, z), 1e-12);
  EXPECT_NEAR(b.total, 0.7 * b.rot + 0.3 * b.ori + 1.9 * b.angvel_geo, 1e-12);
  EXPECT_NEAR(loss::total_loss(y, z, w), b.total, 1e-12);
}

TEST(Gradient, RotationTermIsScaledSign) {
  std::mt19937_64 g(3);
  const std::size_t frames = 3;
  const auto z = oracle::random_pose(g, frames);
  auto y = z;
  y.values()[0] += 0.5;
  y.values()[7] -= 0.25;
  const auto grad = loss::grad_total_loss(y, z, {1.0, 0.0, 0.0});
  const double s = 1.0 / double(frames * 22 * 6);
  EXPECT_DOUBLE_EQ(grad.values()[0], s);
  EXPECT_DOUBLE_EQ(grad.values()[7], -s);
  EXPECT_EQ(grad.values()[1], 0.0);  // exact tie
}

TEST(Gradient, OrientationTermTouchesRootOnly) {
  std::mt19937_64 g(4);
  const auto y = oracle::random_pose(g, 4);
  const auto z = oracle::random_pose(g, 4);
  const auto grad = loss::grad_total_loss(y, z, {0.0, 1.0, 0.0});
  for (std::size_t l = 0; l < 4; ++l)
    for (std::size_t j = 1; j < 22; ++j)
      for (std::size_t k = 0; k < 6; ++k) EXPECT_EQ(grad.at(l, j, k), 0.0);
  EXPECT_NE(grad.at(0, 0, 0), 0.0);
}

TEST(Gradient, MatchesCentralDifference) {
  std::mt19937_64 g(5);
  std::size_t checked = 0, close = 0;
  for (int i = 0; i < 3; ++i) {
    const auto y = oracle::random_pose(g, 5, 22, 1.5);
    const auto z = oracle::random_pose(g, 5, 22, 1.5);
    const auto grad = loss::grad_total_loss(y, z);
    const auto fd = oracle::central_difference(
        y.values(), [&](const std::vector<double>& v) { return loss::total_loss(PoseSequence(5, 22, v), z); }, 1e-6);
    for (std::size_t k = 0; k < fd.size(); ++k) {
      const double rel = std::abs(fd[k] - grad.values()[k]) / std::max(std::abs(fd[k]), 1e-6);
      ++checked;
      if (rel <= 1e-4) ++close;
    }
  }
  EXPECT_GE(double(close) / double(checked), 0.99);
}
