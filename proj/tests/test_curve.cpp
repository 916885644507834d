#include <gtest/gtest.h>

#include "graff/curve.hpp"
#include "support.hpp"

using namespace graff;

namespace {

const Eigen::Vector3d kV1(1, 2, -5);
const Eigen::Vector3d kV2(1, -3, 5);

}  // namespace

TEST(Line2dProjection, AxisExample) {
  EXPECT_LT((line2d_projection(Eigen::Vector3d(1, 0, 0)) - Eigen::Vector3d(0, 1, 1).asDiagonal().toDenseMatrix())
                .norm(),
            1e-15);
}

TEST(Line2dProjection, LineYEqualsOne) {
  const Eigen::Matrix3d p = line2d_projection(Eigen::Vector3d(0, 1, -1));
  EXPECT_NEAR(p.trace(), 2.0, 1e-15);
  EXPECT_LT((p * Eigen::Vector3d(0, 1, 1)).norm(), 1e-15);
}

TEST(Line2dProjection, Invariants) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Vector3d v = test::box(rng, 5.0);
    const Eigen::Matrix3d p = line2d_projection(v);
    EXPECT_LT((p - p.transpose()).norm(), 1e-15);
    EXPECT_LT((p * p - p).norm(), 1e-10);
    EXPECT_NEAR(p.trace(), 2.0, 1e-12);
    EXPECT_LT((line2d_projection(-v) - p).norm(), 1e-15);
    EXPECT_LT((line2d_projection(3.7 * v) - p).norm(), 1e-14);
    const Eigen::Vector3d w(v(0), v(1), -v(2));
    EXPECT_LT((p - (Eigen::Matrix3d::Identity() - w * w.transpose() / w.squaredNorm())).norm(), 1e-14);
  }
  EXPECT_THROW(line2d_projection(Eigen::Vector3d::Zero()), ZeroVector);
}

TEST(Line2dVelocity, ClosedFormMatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> ut(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector3d v1 = test::box(rng, 5.0), v2 = test::box(rng, 5.0);
    const double t = ut(rng);
    const Eigen::Vector3d v = v1 + t * (v2 - v1);
    if (v.norm() < 0.5) continue;
    const Eigen::Matrix3d fd = line2d_velocity_fd(v1, v2, t);
    const Eigen::Matrix3d cf = line2d_velocity(v, v2 - v1);
    EXPECT_LT((fd - cf).cwiseAbs().maxCoeff(), 1e-5);
  }
}

TEST(CurveLength, ZeroForEqualEndpoints) { EXPECT_EQ(curve_length(kV1, kV1, 100), 0.0); }

TEST(CurveLength, ReferencePair) {
  EXPECT_NEAR(curve_length(kV1, kV2, 1000), 2.7539, 1e-3);
  EXPECT_NEAR(curve_length(kV1, -kV2, 1000), 0.3876, 1e-3);
}

TEST(CurveLength, MethodsAgree) {
  const double fd = curve_length(kV1, kV2, 1000, VelocityMethod::FiniteDifference);
  const double cf = curve_length(kV1, kV2, 1000, VelocityMethod::ClosedForm);
  EXPECT_NEAR(fd, cf, 1e-6);
}

TEST(CurveLength, JointScalingIsExact) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const Eigen::Vector3d v1 = test::box(rng, 5.0), v2 = test::box(rng, 5.0);
    const double a = curve_length(v1, v2, 200, VelocityMethod::ClosedForm);
    EXPECT_NEAR(curve_length(2.5 * v1, 2.5 * v2, 200, VelocityMethod::ClosedForm), a, 1e-10);
  }
}

TEST(CurveLength, SingleEndpointScalingChangesOnlyTheParametrization) {
  const double a = curve_length(kV1, kV2, 20000);
  EXPECT_NEAR(curve_length(kV1, 3.0 * kV2, 20000), a, 1e-3);
  EXPECT_NEAR(curve_length(0.5 * kV1, kV2, 20000), a, 1e-3);
}

TEST(CurveLength, Errors) {
  EXPECT_THROW(curve_length(kV1, kV2, 9), ConfigError);
  EXPECT_THROW(curve_length(Eigen::Vector3d::Zero(), kV2, 100), ZeroVector);
  EXPECT_THROW(curve_length(kV1, -kV1, 100), PathThroughZero);
  EXPECT_THROW(curve_length(kV1, -2.0 * kV1, 100), PathThroughZero);
}

TEST(GeodesicReport, ReferencePair) {
  const auto r = closed_geodesic_report(kV1, kV2, 1000);
  EXPECT_NEAR(r.sum_minus_pi, 0.0, 1e-3);
  const auto fine = closed_geodesic_report(kV1, kV2, 10000);
  EXPECT_NEAR(fine.min_minus_geodesic, 0.0, 1e-4);
}

TEST(GeodesicReport, EqualEndpoints) {
  const Eigen::Vector3d v(2, -1, 3);
  const auto r = closed_geodesic_report(v, v, 100);
  EXPECT_EQ(r.l_plus, 0.0);
  EXPECT_LT(r.geodesic, 1e-7);
  EXPECT_TRUE(std::isnan(r.l_minus));
  EXPECT_EQ(r.min_minus_geodesic, -r.geodesic);
}

TEST(GeodesicReport, CurvesNeverBeatTheGeodesic) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 50; ++i) {
    const Eigen::Vector3d v1 = test::box(rng, 5.0), v2 = test::box(rng, 5.0);
    const auto r = closed_geodesic_report(v1, v2, 10000);
    EXPECT_GE(std::min(r.l_plus, r.l_minus), r.geodesic - 2e-4);
  }
}

TEST(Line2dGeodesic, MatchesPrincipalAngleOfNormals) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const Eigen::Vector3d v1 = test::box(rng, 5.0), v2 = test::box(rng, 5.0);
    const Eigen::Vector3d w1(v1(0), v1(1), -v1(2)), w2(v2(0), v2(1), -v2(2));
    const double c = std::abs(w1.normalized().dot(w2.normalized()));
    EXPECT_NEAR(line2d_geodesic(v1, v2), std::acos(std::min(1.0, c)), 1e-7);
  }
}
