#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "kinest/rotations.hpp"
#include "oracles.hpp"

namespace rot = kinest::rot;
using rot::Mat3;
using rot::Vec3;

constexpr double kPi = std::numbers::pi;

TEST(SixD, IdentityColumns) {
  const Mat3 r = rot::sixd_to_matrix({1, 0, 0, 0, 1, 0});
  EXPECT_TRUE(r.isApprox(Mat3::Identity(), 1e-15));
}

TEST(SixD, ScaledAndSkewedInputIsOrthonormalized) {
  // a1 = (2,0,0), a2 = (1,3,0) -> columns e1, e2, e3.
  const Mat3 r = rot::sixd_to_matrix({2, 0, 0, 1, 3, 0});
  EXPECT_TRUE(r.isApprox(Mat3::Identity(), 1e-15));
}

TEST(SixD, MatchesGramSchmidtOracle) {
  std::mt19937_64 g(2);
  std::normal_distribution<double> nd;
  for (int i = 0; i < 500; ++i) {
    rot::Rot6D v;
    for (double& e : v) e = nd(g);
    const Mat3 r = rot::sixd_to_matrix(v);
    EXPECT_LE((r - oracle::gram_schmidt(v)).norm(), 1e-12);
    EXPECT_LE((r.transpose() * r - Mat3::Identity()).norm(), 1e-12);
    EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
  }
}

TEST(SixD, DegenerateInputsThrow) {
  EXPECT_THROW(rot::sixd_to_matrix({0, 0, 0, 0, 1, 0}), kinest::DomainError);
  EXPECT_THROW(rot::sixd_to_matrix({1, 0, 0, 2, 0, 0}), kinest::DomainError);
  EXPECT_THROW(rot::sixd_to_matrix({NAN, 0, 0, 0, 1, 0}), kinest::DomainError);
}

TEST(SixD, RoundTripFromRotation) {
  std::mt19937_64 g(4);
  for (int i = 0; i < 100; ++i) {
    const Mat3 r = oracle::random_rotation(g);
    EXPECT_LE((rot::sixd_to_matrix(rot::matrix_to_sixd(r)) - r).norm(), 1e-12);
  }
}

TEST(ExpMap, MatchesAngleAxis) {
  std::mt19937_64 g(6);
  std::uniform_real_distribution<double> ang(0.0, kPi);
  for (int i = 0; i < 200; ++i) {
    const Vec3 axis = oracle::random_axis(g);
    const double t = ang(g);
    EXPECT_LE((rot::exp_map(t * axis) - oracle::rotation(axis, t)).norm(), 1e-12);
  }
  EXPECT_TRUE(rot::exp_map(Vec3::Zero()).isApprox(Mat3::Identity()));
}

TEST(LogMap, QuarterTurnAboutZ) {
  const Vec3 w = rot::matrix_to_log(rot::rot_z(kPi / 2));
  EXPECT_NEAR(w.x(), 0.0, 1e-15);
  EXPECT_NEAR(w.y(), 0.0, 1e-15);
  EXPECT_NEAR(w.z(), kPi / 2, 1e-15);
}

TEST(LogMap, IdentityIsZero) { EXPECT_EQ(rot::matrix_to_log(Mat3::Identity()), Vec3::Zero()); }

TEST(LogMap, MatchesAngleAxisOracleInGeneralPosition) {
  std::mt19937_64 g(8);
  std::uniform_real_distribution<double> ang(1e-3, kPi - 1e-3);
  for (int i = 0; i < 500; ++i) {
    const Vec3 axis = oracle::random_axis(g);
    const Mat3 r = oracle::rotation(axis, ang(g));
    EXPECT_LE((rot::matrix_to_log(r) - oracle::log_vector(r)).norm(), 1e-10);
  }
}

TEST(LogMap, SmallAnglesKeepPrecision) {
  for (double t : {1e-12, 1e-9, 1e-7, 1e-6, 2e-6}) {
    const Vec3 axis = Vec3(1, 2, -2).normalized();
    const Vec3 w = rot::matrix_to_log(rot::exp_map(t * axis));
    EXPECT_NEAR(w.norm(), t, t * 1e-6) << t;
    EXPECT_LE((w.normalized() - axis).norm(), 1e-6) << t;
  }
}

TEST(LogMap, NearHalfTurnRecoversAxisAndSign) {
  const Vec3 axis = Vec3(0.3, -0.5, 0.8).normalized();
  for (double gap : {1e-3, 1e-5, 1e-6, 1e-8}) {
    const Vec3 w = rot::matrix_to_log(rot::exp_map((kPi - gap) * axis));
    EXPECT_NEAR(w.norm(), kPi - gap, 1e-8) << gap;
    EXPECT_LE((w.normalized() - axis).norm(), 1e-6) << gap;
  }
}

TEST(LogMap, ExactHalfTurnIsCanonical) {
  const Vec3 axis = Vec3(-0.6, 0.0, 0.8);
  const Vec3 w = rot::matrix_to_log(oracle::rotation(axis, kPi));
  EXPECT_NEAR(w.norm(), kPi, 1e-9);
  // Either sign is a valid logarithm; the returned one has a positive leading component.
  EXPECT_GT(w.x(), 0.0);
  EXPECT_LE((rot::exp_map(w) - oracle::rotation(axis, kPi)).norm(), 1e-9);
}

TEST(LogMap, RejectsNonRotation) {
  EXPECT_THROW(rot::matrix_to_log(2.0 * Mat3::Identity()), kinest::DomainError);
  Mat3 reflect = Mat3::Identity();
  reflect(2, 2) = -1.0;
  EXPECT_THROW(rot::matrix_to_log(reflect), kinest::DomainError);
}

TEST(ExpLog, RoundTripIncludingSpecialAngles) {
  std::mt19937_64 g(10);
  std::uniform_real_distribution<double> ang(0.0, kPi);
  const double special[] = {0.0, 1e-9, 1e-6, kPi - 1e-6, kPi};
  for (int i = 0; i < 2000; ++i) {
    const double t = i < 50 ? special[i % 5] : ang(g);
    const Mat3 r = oracle::rotation(oracle::random_axis(g), t);
    EXPECT_LE((rot::exp_map(rot::matrix_to_log(r)) - r).norm(), 1e-7);
  }
}

TEST(Relative, ComposesBack) {
  std::mt19937_64 g(12);
  const Mat3 a = oracle::random_rotation(g), b = oracle::random_rotation(g);
  EXPECT_LE((a * rot::relative_rotation(a, b) - b).norm(), 1e-12);
}

TEST(Geodesic, AngleOfKnownRotations) {
  EXPECT_NEAR(rot::geodesic_angle(rot::rot_z(0.7)), 0.7, 1e-12);
  EXPECT_NEAR(rot::geodesic_angle(rot::rot_z(kPi)), kPi, 1e-12);
  EXPECT_EQ(rot::geodesic_angle(Mat3::Identity()), 0.0);
}

TEST(Skew, VectorInverse) {
  const Vec3 w(0.1, -0.2, 0.3);
  EXPECT_TRUE(rot::skew_vector(rot::skew(w)).isApprox(2.0 * w));
  EXPECT_TRUE((rot::skew(w) * Vec3(1, 2, 3)).isApprox(w.cross(Vec3(1, 2, 3))));
}

TEST(ExpMap, HalfTurnAboutZ) {
  const Mat3 r = rot::exp_map(Vec3(0, 0, kPi));
  EXPECT_LE((r - Vec3(-1, -1, 1).asDiagonal().toDenseMatrix()).norm(), 1e-15);
}

TEST(ExpLog, LogOfExpInsideOpenBall) {
  std::mt19937_64 g(14);
  std::uniform_real_distribution<double> ang(0.0, kPi - 1e-3);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 w = ang(g) * oracle::random_axis(g);
    EXPECT_LE((rot::matrix_to_log(rot::exp_map(w)) - w).norm(), 1e-9);
  }
}

TEST(SixD, ScaleInvariance) {
  std::mt19937_64 g(16);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> sc(0.01, 100.0);
  for (int i = 0; i < 100; ++i) {
    rot::Rot6D v, s;
    for (double& e : v) e = nd(g);
    const double s1 = sc(g), s2 = sc(g);
    for (int k = 0; k < 3; ++k) {
      s[k] = s1 * v[k];
      s[k + 3] = s2 * v[k + 3];
    }
    EXPECT_LE((rot::sixd_to_matrix(s) - rot::sixd_to_matrix(v)).norm(), 1e-12);
  }
}

TEST(Geodesic, EqualsLogNormAndIsBiInvariant) {
  std::mt19937_64 g(18);
  std::uniform_real_distribution<double> ang(0.0, kPi - 1e-4);
  for (int i = 0; i < 300; ++i) {
    const Mat3 v = oracle::rotation(oracle::random_axis(g), ang(g));
    EXPECT_NEAR(rot::geodesic_angle(v), rot::matrix_to_log(v).norm(), 1e-9);
    const Mat3 q = oracle::random_rotation(g);
    EXPECT_NEAR(rot::geodesic_angle(q.transpose() * v * q), rot::geodesic_angle(v), 1e-7);
  }
  EXPECT_NEAR(rot::geodesic_angle(rot::rot_z(0.3)), 0.3, 1e-12);
  EXPECT_NEAR(rot::geodesic_angle(oracle::rotation(Vec3(1, 1, 0), kPi)), kPi, 1e-12);
}

TEST(Relative, Trivial) {
  const Mat3 r = rot::rot_z(0.4);
  EXPECT_LE((rot::relative_rotation(r, r) - Mat3::Identity()).norm(), 1e-15);
  EXPECT_LE((rot::relative_rotation(Mat3::Identity(), r) - r).norm(), 1e-15);
}
