#include <gtest/gtest.h>

#include "graff/refine.hpp"
#include "graff/synthetic.hpp"
#include "support.hpp"

using namespace graff;

namespace {

Scene clean_scene(FeatureKind kind, std::uint64_t seed, std::size_t n = 20) {
  SceneConfig sc;
  sc.feature_kind = kind;
  sc.n_pairs = n;
  sc.rng_seed = seed;
  return generate_scene(sc);
}

std::vector<std::size_t> all_of(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

}  // namespace

TEST(RefineLm, StationaryAtOptimum) {
  for (auto kind : {FeatureKind::LineLine, FeatureKind::LinePlane, FeatureKind::PlanePlane}) {
    const auto s = clean_scene(kind, 1);
    const auto geo = geometry(s.pairs);
    const auto idx = all_of(geo.size());
    const auto rep = refine_lm(geo, idx, s.ground_truth.rotation3(), s.ground_truth.translation3());
    EXPECT_LE(rep.final_cost, rep.initial_cost + 1e-15);
    EXPECT_LT(rep.final_cost, 1e-15);
    EXPECT_LT(rotation_error(rep.rotation, s.ground_truth.rotation3()), 1e-6);
  }
}

TEST(RefineLm, RecoversFromTwoDegreeTwoPercentPerturbation) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    for (auto kind : {FeatureKind::LineLine, FeatureKind::LinePlane, FeatureKind::PlanePlane}) {
      const auto s = clean_scene(kind, 10 + trial);
      const Eigen::Matrix3d r_gt = s.ground_truth.rotation3();
      const Eigen::Vector3d t_gt = s.ground_truth.translation3();
      const Eigen::Matrix3d r0 = so3_exp(test::unit(rng) * deg2rad(2.0)) * r_gt;
      const Eigen::Vector3d t0 = t_gt + test::unit(rng) * 0.02 * t_gt.norm();
      const auto rep = refine_lm(geometry(s.pairs), all_of(s.pairs.size()), r0, t0);
      EXPECT_LT(rotation_error(rep.rotation, r_gt), 0.01) << to_string(kind);
      EXPECT_LT(translation_error(rep.translation, t_gt).value, 0.01) << to_string(kind);
    }
  }
}

TEST(RefineLm, AcceptedCostsStrictlyDecrease) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    SceneConfig sc;
    sc.feature_kind = static_cast<FeatureKind>(trial % 3);
    sc.n_pairs = 15;
    sc.angular_sigma = 0.01;
    sc.noise_sigma = 0.05;
    sc.rng_seed = 100 + trial;
    const auto s = generate_scene(sc);
    const auto rep = refine_lm(geometry(s.pairs), all_of(s.pairs.size()), test::rotation(rng),
                               test::box(rng, 3.0));
    for (std::size_t i = 1; i < rep.accepted_costs.size(); ++i) {
      EXPECT_LT(rep.accepted_costs[i], rep.accepted_costs[i - 1]);
    }
    EXPECT_LE(rep.final_cost, rep.initial_cost);
    EXPECT_EQ(rep.final_cost, rep.accepted_costs.back());
    EXPECT_LE(rep.iterations, 100);
  }
}

TEST(RefineLm, JacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(4);
  for (auto kind : {FeatureKind::LineLine, FeatureKind::LinePlane, FeatureKind::PlanePlane}) {
    SceneConfig sc;
    sc.feature_kind = kind;
    sc.n_pairs = 5;
    sc.angular_sigma = 0.05;
    sc.noise_sigma = 0.1;
    sc.rng_seed = 7;
    const auto s = generate_scene(sc);
    const auto geo = geometry(s.pairs);
    const auto idx = all_of(geo.size());
    const Eigen::Matrix3d r = test::rotation(rng);
    const Eigen::Vector3d t = test::box(rng, 2.0);
    LmOptions opt;
    Eigen::VectorXd res;
    Eigen::MatrixXd jac;
    detail::lm_linearize(geo, idx, r, t, opt, res, jac);
    const double h = 1e-6;
    for (int k = 0; k < 6; ++k) {
      Eigen::Matrix<double, 6, 1> d = Eigen::Matrix<double, 6, 1>::Zero();
      d(k) = h;
      Eigen::VectorXd rp, rm;
      Eigen::MatrixXd unused;
      detail::lm_linearize(geo, idx, so3_exp(d.head<3>()) * r, t + d.tail<3>(), opt, rp, unused);
      detail::lm_linearize(geo, idx, so3_exp(-d.head<3>()) * r, t - d.tail<3>(), opt, rm, unused);
      EXPECT_LT(((rp - rm) / (2 * h) - jac.col(k)).cwiseAbs().maxCoeff(), 1e-6) << to_string(kind) << " " << k;
    }
  }
}

TEST(RefineLm, RotationOnlyLeavesTranslation) {
  const auto s = clean_scene(FeatureKind::LineLine, 5);
  LmOptions opt;
  opt.optimize_translation = false;
  opt.use_g = false;
  const Eigen::Vector3d t0(1, 2, 3);
  const auto rep = refine_lm(geometry(s.pairs), all_of(s.pairs.size()),
                             so3_exp(Eigen::Vector3d(0.02, 0, 0)) * s.ground_truth.rotation3(), t0, opt);
  EXPECT_EQ(rep.translation, t0);
  EXPECT_LT(rotation_error(rep.rotation, s.ground_truth.rotation3()), 1e-6);
}

TEST(RefineLm, WrapperOnFeaturePairs) {
  const auto s = clean_scene(FeatureKind::PlanePlane, 6);
  const auto start = RigidTransform::from(so3_exp(Eigen::Vector3d(0, 0.03, 0)) * s.ground_truth.rotation3(),
                                          s.ground_truth.translation3() + Eigen::Vector3d(0.05, 0, 0));
  const auto out = refine_lm(s.pairs, all_of(s.pairs.size()), start);
  EXPECT_TRUE(out.is_valid());
  EXPECT_LT(total_cost(s.pairs, out).total, 1e-20);
}
