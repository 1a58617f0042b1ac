#include "gomp/kinematics.hpp"

#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "gomp/limits.hpp"
#include "gomp/scene.hpp"
#include "oracles.hpp"

namespace gomp {
namespace {

constexpr double kPi = std::numbers::pi;

Eigen::VectorXd random_q(std::mt19937_64& rng, int n, double range = kPi) {
  std::uniform_real_distribution<double> U(-range, range);
  Eigen::VectorXd q(n);
  for (int i = 0; i < n; ++i) q[i] = U(rng);
  return q;
}

TEST(ForwardKinematics, MatchesHomogeneousChainAtZero) {
  const KinematicChain ur5 = KinematicChain::ur5();
  const Eigen::VectorXd q = Eigen::VectorXd::Zero(6);
  const Pose p = forward_kinematics(ur5, q);
  const Eigen::Matrix4d T = oracle::fk_homogeneous(ur5, q);
  EXPECT_TRUE(p.rotation.isApprox(T.topLeftCorner<3, 3>(), 1e-12));
  EXPECT_TRUE(p.translation.isApprox(T.topRightCorner<3, 1>(), 1e-12));
  // Stretched out at zero: (a2 + a3, -(d4 + d6), d1 - d5).
  EXPECT_NEAR(p.translation.x(), -0.425 - 0.39225, 1e-12);
  EXPECT_NEAR(p.translation.y(), -(0.10915 + 0.0823), 1e-12);
  EXPECT_NEAR(p.translation.z(), 0.089159 - 0.09465, 1e-12);
}

TEST(ForwardKinematics, MatchesHomogeneousChainAtRandomConfigurations) {
  std::mt19937_64 rng(3);
  const KinematicChain ur5 = KinematicChain::ur5();
  for (int k = 0; k < 50; ++k) {
    const Eigen::VectorXd q = random_q(rng, 6);
    const Pose p = forward_kinematics(ur5, q);
    const Eigen::Matrix4d T = oracle::fk_homogeneous(ur5, q);
    EXPECT_LT((p.rotation - T.topLeftCorner<3, 3>()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((p.translation - T.topRightCorner<3, 1>()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_TRUE(p.is_valid());
  }
}

TEST(ForwardKinematics, BaseRotationRotatesToolAboutBaseAxis) {
  std::mt19937_64 rng(5);
  const KinematicChain ur5 = KinematicChain::ur5();
  const Eigen::VectorXd q = random_q(rng, 6);
  const double theta = 0.7;
  Eigen::VectorXd q2 = q;
  q2[0] += theta;
  const Eigen::Vector3d a = forward_kinematics(ur5, q).translation;
  const Eigen::Vector3d b = forward_kinematics(ur5, q2).translation;
  const Eigen::Vector2d rotated = Eigen::Rotation2Dd(theta) * a.head<2>();
  EXPECT_NEAR((rotated - b.head<2>()).norm(), 0.0, 1e-12);
  EXPECT_NEAR(a.z(), b.z(), 1e-12);
}

TEST(ForwardKinematics, PeriodicInEachJoint) {
  std::mt19937_64 rng(7);
  const KinematicChain ur5 = KinematicChain::ur5();
  const Eigen::VectorXd q = random_q(rng, 6);
  const Pose p = forward_kinematics(ur5, q);
  for (int j = 0; j < 6; ++j) {
    Eigen::VectorXd q2 = q;
    q2[j] += 2 * kPi;
    const Pose p2 = forward_kinematics(ur5, q2);
    EXPECT_LT((p.rotation - p2.rotation).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((p.translation - p2.translation).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(ForwardKinematics, DeterministicAndRejectsWrongLength) {
  const KinematicChain ur5 = KinematicChain::ur5();
  const Eigen::VectorXd q = Eigen::VectorXd::LinSpaced(6, -1.0, 1.0);
  const Pose a = forward_kinematics(ur5, q);
  const Pose b = forward_kinematics(ur5, q);
  EXPECT_EQ(a.rotation, b.rotation);
  EXPECT_EQ(a.translation, b.translation);
  EXPECT_THROW(forward_kinematics(ur5, Eigen::VectorXd::Zero(5)), DimensionMismatch);
  EXPECT_THROW(jacobian(ur5, Eigen::VectorXd::Zero(7)), DimensionMismatch);
}

TEST(Jacobian, ZeroConfigurationColumnsFromAxes) {
  const KinematicChain ur5 = KinematicChain::ur5();
  const Eigen::VectorXd q = Eigen::VectorXd::Zero(6);
  const Jacobian J = jacobian(ur5, q);
  const Eigen::Vector3d tool = oracle::fk_homogeneous(ur5, q).topRightCorner<3, 1>();
  Eigen::Matrix4d T = Eigen::Matrix4d::Identity();
  for (int j = 0; j < 6; ++j) {
    const Eigen::Vector3d axis = T.block<3, 1>(0, 2);
    const Eigen::Vector3d origin = T.block<3, 1>(0, 3);
    const Eigen::Vector3d lin = axis.cross(tool - origin);
    EXPECT_LT((J.block<3, 1>(0, j) - lin).norm(), 1e-12) << "column " << j;
    EXPECT_LT((J.block<3, 1>(3, j) - axis).norm(), 1e-12) << "column " << j;
    const DHLink& l = ur5.links()[j];
    T = T * oracle::dh_matrix(l.a, l.alpha, l.d, l.theta_offset);
  }
}

TEST(Jacobian, MatchesCentralDifferences) {
  std::mt19937_64 rng(11);
  const KinematicChain ur5 = KinematicChain::ur5();
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Eigen::VectorXd q = random_q(rng, 6);
    worst = std::max(worst, (jacobian(ur5, q) - oracle::fd_jacobian(ur5, q)).cwiseAbs().maxCoeff());
  }
  EXPECT_LE(worst, 1e-5);
}

TEST(Jacobian, BaseColumnZIsZeroAndVanishesOnAxis) {
  // Base rotation never changes tool height.
  std::mt19937_64 rng(13);
  const KinematicChain ur5 = KinematicChain::ur5();
  for (int k = 0; k < 10; ++k) EXPECT_NEAR(jacobian(ur5, random_q(rng, 6))(2, 0), 0.0, 1e-12);
  // A planar two-link arm folded back onto its base axis: base column translational part is zero.
  const KinematicChain folded({DHLink{0.4, 0.0, 0.0, 0.0}, DHLink{0.4, 0.0, 0.0, 0.0}});
  const Eigen::VectorXd q = (Eigen::VectorXd(2) << 0.3, kPi).finished();
  EXPECT_LT(forward_kinematics(folded, q).translation.norm(), 1e-12);
  EXPECT_LT((jacobian(folded, q).block<3, 1>(0, 0).norm()), 1e-12);
}

TEST(Jacobian, CheckPointJacobianMatchesDifferences) {
  std::mt19937_64 rng(17);
  const KinematicChain ur5 = KinematicChain::ur5();
  const CheckPoint pt{3, Eigen::Vector3d(0.02, -0.05, 0.1)};
  const Eigen::VectorXd q = random_q(rng, 6);
  const auto J = check_point_jacobian(ur5, q, pt);
  for (int j = 0; j < 6; ++j) {
    Eigen::VectorXd qp = q, qm = q;
    qp[j] += 1e-6;
    qm[j] -= 1e-6;
    const Eigen::Vector3d fd =
        (check_point_position(ur5, qp, pt) - check_point_position(ur5, qm, pt)) / 2e-6;
    EXPECT_LT((J.col(j) - fd).norm(), 1e-6);
  }
  // Joints beyond the point's link do not move it.
  EXPECT_LT(J.rightCols(2).norm(), 1e-12);
}

TEST(Rotations, LogExpRoundTripAndRightJacobian) {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    Eigen::Vector3d w(U(rng), U(rng), U(rng));
    w *= 2.5 / std::max(1.0, w.norm());
    EXPECT_LT((so3_log(so3_exp(w)) - w).norm(), 1e-10);
    const Eigen::Vector3d e = 1e-6 * Eigen::Vector3d(U(rng), U(rng), U(rng));
    const Eigen::Vector3d lhs = so3_log(so3_exp(w) * so3_exp(e));
    EXPECT_LT((lhs - (w + so3_right_jacobian_inverse(w) * e)).norm(), 1e-11);
  }
  EXPECT_LT(so3_log(Eigen::Matrix3d::Identity()).norm(), 1e-15);
}

TEST(Rotations, PoseErrorZeroOnlyForCoincidentPoses) {
  const Pose a = Pose::from_quaternion(Eigen::Quaterniond(Eigen::AngleAxisd(0.4, Eigen::Vector3d::UnitX())),
                                       Eigen::Vector3d(0.1, 0.2, 0.3));
  EXPECT_LT(pose_error(a, a).norm(), 1e-15);
  Pose b = a;
  b.translation.x() += 0.01;
  EXPECT_NEAR(pose_error(a, b).head<3>().norm(), 0.01, 1e-15);
  b = a;
  b.rotation = Eigen::AngleAxisd(0.2, Eigen::Vector3d::UnitZ()).toRotationMatrix() * a.rotation;
  EXPECT_NEAR(pose_error(a, b).tail<3>().norm(), 0.2, 1e-12);
}

class InverseKinematics : public ::testing::Test {
 protected:
  KinematicChain ur5 = KinematicChain::ur5();
  MechanicalLimits limits = MechanicalLimits::uniform(6, 2 * kPi, kPi, 10.0);
};

TEST_F(InverseKinematics, FixedPointAtSeed) {
  const Eigen::VectorXd seed = (Eigen::VectorXd(6) << 0.3, -1.2, 1.4, -1.6, -1.5, 0.2).finished();
  const Eigen::VectorXd q = inverse_kinematics(ur5, forward_kinematics(ur5, seed), seed, limits);
  EXPECT_LT((q - seed).cwiseAbs().maxCoeff(), 1e-12);
}

TEST_F(InverseKinematics, RoundTripFromNearbySeeds) {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> N(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Eigen::VectorXd seed = random_q(rng, 6, 2.5);
    Eigen::VectorXd delta(6);
    for (int j = 0; j < 6; ++j) delta[j] = N(rng);
    delta *= 0.05 / delta.norm();
    const Pose target = forward_kinematics(ur5, seed + delta);
    const Eigen::VectorXd q = inverse_kinematics(ur5, target, seed, limits);
    worst = std::max(worst, pose_error(target, forward_kinematics(ur5, q)).norm());
    EXPECT_TRUE(limits.contains(q));
  }
  EXPECT_LE(worst, 1e-6);
}

TEST_F(InverseKinematics, UnreachableTargetThrows) {
  Pose far;
  far.translation = Eigen::Vector3d(2.0, 0.0, 0.5);
  EXPECT_GT(far.translation.norm(), ur5.reach());
  EXPECT_THROW(inverse_kinematics(ur5, far, Eigen::VectorXd::Zero(6), limits), NoConvergence);
}

TEST(KinematicChain, ShippedChainFileMatchesBuiltin) {
  EXPECT_EQ(load_chain(oracle::data_dir() / "ur5.json"), KinematicChain::ur5());
  EXPECT_THROW(KinematicChain(std::vector<DHLink>{}), std::invalid_argument);
}

}  // namespace
}  // namespace gomp
