#include <gtest/gtest.h>

#include "gfusion/errors.hpp"
#include "gfusion/manifold.hpp"
#include "test_support.hpp"

using namespace gfusion;
using gfusion::test::random_pose;
using gfusion::test::random_rotation;
using gfusion::test::random_vector;

TEST(Quaternion, CanonicalizedAndNormalized) {
  const UnitQuaternion q(-2, 0, 0, 0);
  EXPECT_EQ(q.w(), 1.0);
  const UnitQuaternion r(-0.5, 0.5, 0.5, 0.5);
  EXPECT_GT(r.w(), 0.0);
  EXPECT_NEAR(r.eigen().norm(), 1.0, 1e-15);
  EXPECT_THROW(UnitQuaternion(0, 0, 0, 0), DomainError);
}

TEST(Quaternion, BoxminusIdentical) {
  std::mt19937_64 rng(1);
  const UnitQuaternion q = random_rotation(rng);
  EXPECT_LT(quat_boxminus(q, q).norm(), 1e-15);
}

TEST(Quaternion, BoxminusQuarterTurn) {
  const UnitQuaternion a = UnitQuaternion::from_axis_angle(Eigen::Vector3d::UnitZ(), M_PI / 2);
  const Eigen::Vector3d v = quat_boxminus(a, UnitQuaternion::identity());
  // Rotation-matrix logarithm oracle.
  const Eigen::AngleAxisd aa(a.matrix());
  EXPECT_LT((v - aa.angle() * aa.axis()).norm(), 1e-12);
  EXPECT_LT((v - Eigen::Vector3d(0, 0, M_PI / 2)).norm(), 1e-12);
}

TEST(Quaternion, BoxminusSmallAngle) {
  const UnitQuaternion a = UnitQuaternion::from_axis_angle(Eigen::Vector3d::UnitX(), 1e-4);
  const Eigen::Vector3d v = quat_boxminus(a, UnitQuaternion::identity());
  EXPECT_LT((v - Eigen::Vector3d(1e-4, 0, 0)).norm(), 1e-12);
}

TEST(Quaternion, LogAtPiIsDeterministic) {
  const UnitQuaternion a(0, 0, 0, 1);
  const UnitQuaternion b(0, 0, 0, -1);
  EXPECT_LT((a.log() - Eigen::Vector3d(0, 0, M_PI)).norm(), 1e-12);
  EXPECT_EQ(a.log(), b.log());
  const UnitQuaternion c(0, 0.6, -0.8, 0);
  EXPECT_NEAR(c.log().norm(), M_PI, 1e-12);
  EXPECT_GT(c.log().y(), 0.0);
}

TEST(Quaternion, ExpLogRoundTrip) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Vector3d v = random_vector(rng, 1.7);
    if (v.norm() >= M_PI - 1e-6) continue;
    EXPECT_LT((UnitQuaternion::exp(v).log() - v).norm(), 1e-9);
  }
  for (double s : {1e-12, 1e-9, 1e-6, 1e-5, 1e-3}) {
    const Eigen::Vector3d v = Eigen::Vector3d(1, -2, 0.5).normalized() * s;
    EXPECT_LT((UnitQuaternion::exp(v).log() - v).norm(), 1e-15 + 1e-12 * s);
  }
}

TEST(Quaternion, BoxminusAntisymmetric) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    const UnitQuaternion a = random_rotation(rng), b = random_rotation(rng);
    if (rotation_angle(a, b) > M_PI - 1e-6) continue;
    EXPECT_LT((quat_boxminus(a, b) + quat_boxminus(b, a)).norm(), 1e-9);
  }
}

TEST(Quaternion, BoxminusNormIsGeodesicAngle) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 1000; ++i) {
    const UnitQuaternion a = random_rotation(rng), b = random_rotation(rng);
    const double dot = std::abs(a.eigen().dot(b.eigen()));
    const double angle = 2.0 * std::acos(std::min(1.0, dot));
    EXPECT_NEAR(quat_boxminus(a, b).norm(), angle, 1e-9);
    EXPECT_LE(quat_boxminus(a, b).norm(), M_PI + 1e-12);
  }
}

TEST(Pose, BoxplusZeroIsIdentityOperation) {
  std::mt19937_64 rng(5);
  const Pose x = random_pose(rng);
  const Pose y = pose_boxplus(x, {});
  EXPECT_EQ(y.position, x.position);
  EXPECT_LT(test::rotation_distance(x.orientation, y.orientation), 1e-15);
}

TEST(Pose, BoxplusTranslationOnIdentity) {
  const Pose y = pose_boxplus(Pose::identity(), {{1, 2, 3}, {0, 0, 0}});
  EXPECT_EQ(y.position, Eigen::Vector3d(1, 2, 3));
  EXPECT_EQ(y.orientation.w(), 1.0);
}

TEST(Pose, BoxplusThenBoxminusRecoversRotation) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 1000; ++i) {
    const Pose x = random_pose(rng);
    Tangent6 d{random_vector(rng), random_vector(rng, 1.5)};
    if (d.rotation.norm() >= M_PI - 1e-6) continue;
    const Pose y = pose_boxplus(x, d);
    EXPECT_LT((quat_boxminus(y.orientation, x.orientation) - d.rotation).norm(), 1e-9);
    EXPECT_LT((y.position - x.position - d.translation).norm(), 1e-12);
    EXPECT_NEAR(y.orientation.eigen().norm(), 1.0, 1e-12);
  }
}

TEST(Pose, BoxplusComposesToFirstOrder) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const Pose x = random_pose(rng);
    const double s = 1e-3;
    const Tangent6 d1{random_vector(rng, s), random_vector(rng, s)};
    const Tangent6 d2{random_vector(rng, s), random_vector(rng, s)};
    const Pose a = pose_boxplus(x, Tangent6::from_vector(d1.vector() + d2.vector()));
    const Pose b = pose_boxplus(pose_boxplus(x, d1), d2);
    const double bound = 1.0 * d1.vector().norm() * d2.vector().norm();
    EXPECT_LE(quat_boxminus(a.orientation, b.orientation).norm(), bound);
    EXPECT_LE((a.position - b.position).norm(), 1e-12);
  }
}

TEST(Pose, RelativePose) {
  std::mt19937_64 rng(8);
  const Pose x = random_pose(rng);
  const Pose r = relative_pose(x, x);
  EXPECT_LT(r.position.norm(), 1e-12);
  EXPECT_LT(quat_boxminus(r.orientation, UnitQuaternion::identity()).norm(), 1e-12);

  const Pose b = random_pose(rng);
  const Pose rb = relative_pose(Pose::identity(), b);
  EXPECT_LT((rb.position - b.position).norm(), 1e-12);
  EXPECT_LT(test::rotation_distance(rb.orientation, b.orientation), 1e-12);
}

TEST(Pose, RelativePoseLeftInvariantAndComposable) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 1000; ++i) {
    const Pose a = random_pose(rng), b = random_pose(rng), t = random_pose(rng);
    const Pose r1 = relative_pose(a, b);
    const Pose r2 = relative_pose(t * a, t * b);
    EXPECT_LT((r1.position - r2.position).norm(), 1e-12 * 100);
    EXPECT_LT(test::rotation_distance(r1.orientation, r2.orientation), 1e-12 * 10);
    const Pose back = a * r1;
    EXPECT_LT((back.position - b.position).norm(), 1e-12 * 100);
    EXPECT_LT(test::rotation_distance(back.orientation, b.orientation), 1e-12 * 10);
  }
}

TEST(Mahalanobis, Examples) {
  EXPECT_EQ(mahalanobis_sq(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3)), 0.0);
  EXPECT_DOUBLE_EQ(mahalanobis_sq(Eigen::VectorXd::Constant(1, 3.0), Eigen::MatrixXd::Constant(1, 1, 9.0)), 1.0);
  Eigen::VectorXd r(2);
  r << 1, 1;
  Eigen::MatrixXd o = Eigen::Vector2d(1, 4).asDiagonal();
  EXPECT_DOUBLE_EQ(mahalanobis_sq(r, o), 1.25);
}

TEST(Mahalanobis, RejectsNonSpd) {
  Eigen::VectorXd r = Eigen::VectorXd::Ones(2);
  Eigen::MatrixXd o(2, 2);
  o << 1, 2, 2, 1;
  EXPECT_THROW(mahalanobis_sq(r, o), NumericError);
  o << 1, 0.5, 0.1, 1;
  EXPECT_THROW(mahalanobis_sq(r, o), NumericError);
  EXPECT_THROW(mahalanobis_sq(r, Eigen::MatrixXd::Identity(3, 3)), NumericError);
}

TEST(Jacobians, RightJacobianInverseSeriesMatchesClosedForm) {
  // The small-angle branch must join the closed form smoothly.
  for (double s : {0.9e-4, 1.1e-4}) {
    const Eigen::Vector3d phi = Eigen::Vector3d(0.3, -0.5, 0.8).normalized() * s;
    const Eigen::Matrix3d a = right_jacobian_inverse(phi);
    const Eigen::Matrix3d id = Eigen::Matrix3d::Identity();
    const Eigen::Matrix3d k = skew(phi);
    const Eigen::Matrix3d approx = id + 0.5 * k + (1.0 / 12.0) * k * k;
    EXPECT_LT((a - approx).norm(), 1e-12);
  }
}
