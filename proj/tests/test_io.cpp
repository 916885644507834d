#include <gtest/gtest.h>

#include <filesystem>

#include "graff/io.hpp"
#include "support.hpp"

using namespace graff;

namespace {

std::vector<Feature> features(const std::string& items) {
  return features_from_json(json::parse(R"({"version": 1, "ambient_dim": 3, "items": )" + items + "}"));
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("graff_io_" + name)).string();
}

}  // namespace

TEST(ParseFeatures, LineIsCanonicalized) {
  const auto f = features(R"([{"id": "a", "kind": "line3d", "direction": [2, 0, 0], "anchor": [1, 5, 0]}])");
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f[0].id, "a");
  EXPECT_LT((Eigen::Vector3d(f[0].subspace.basis().col(0)).cwiseAbs() - Eigen::Vector3d::UnitX()).norm(), 1e-15);
  EXPECT_LT((f[0].subspace.displacement() - Eigen::Vector3d(0, 5, 0)).norm(), 1e-15);
}

TEST(ParseFeatures, PlaneIsCanonicalized) {
  const auto f =
      features(R"([{"id": "p", "kind": "plane3d", "basis": [[1, 0, 0], [1, 1, 0]], "anchor": [0, 0, 3]}])");
  const auto& b = f[0].subspace.basis();
  EXPECT_LT((b.transpose() * b - Eigen::Matrix2d::Identity()).norm(), 1e-15);
  EXPECT_LT(std::abs(b.col(0).dot(Eigen::Vector3d::UnitZ())) + std::abs(b.col(1).dot(Eigen::Vector3d::UnitZ())), 1e-15);
  EXPECT_LT((f[0].subspace.displacement() - Eigen::Vector3d(0, 0, 3)).norm(), 1e-15);
}

TEST(ParseFeatures, RankDeficientCarriesId) {
  try {
    features(R"([{"id": "bad7", "kind": "line3d", "direction": [0, 0, 0], "anchor": [0, 0, 0]}])");
    FAIL();
  } catch (const RankDeficient& e) {
    EXPECT_EQ(std::string(e.what()), "bad7");
  }
}

TEST(ParseFeatures, SchemaErrors) {
  EXPECT_THROW(features_from_json(json::parse(R"({"ambient_dim": 3, "items": []})")), SchemaError);
  EXPECT_THROW(features_from_json(json::parse(R"({"version": 2, "ambient_dim": 3, "items": []})")), SchemaError);
  EXPECT_THROW(features_from_json(json::parse(R"({"version": 1, "ambient_dim": 2, "items": []})")), SchemaError);
  EXPECT_THROW(features(R"([{"id": "a", "kind": "circle", "anchor": [0, 0, 0]}])"), SchemaError);
  EXPECT_THROW(features(R"([{"id": "a", "kind": "line3d", "anchor": [0, 0, 0]}])"), SchemaError);
  EXPECT_THROW(features(R"([{"id": "a", "kind": "line3d", "direction": [1, 0], "anchor": [0, 0, 0]}])"),
               SchemaError);
  EXPECT_THROW(features(R"([{"kind": "point3d", "anchor": [0, 0, 0]}])"), SchemaError);
  EXPECT_THROW(parse_json_text("{not json", "x"), SchemaError);
}

TEST(ParseFeatures, MissingFile) {
  EXPECT_THROW(parse_features("/nonexistent/graff/features.json"), FileError);
}

TEST(ParseFeatures, IntegerIdsAccepted) {
  const auto f = features(R"([{"id": 12, "kind": "point3d", "anchor": [1, 2, 3]}])");
  EXPECT_EQ(f[0].id, "12");
  EXPECT_EQ(f[0].subspace.dim(), 0);
}

TEST(ParseFeatures, RoundTrip) {
  std::mt19937_64 rng(1);
  std::vector<Feature> in;
  for (int i = 0; i < 300; ++i) in.push_back({"f" + std::to_string(i), test::subspace(i % 3, rng, 10.0)});
  const auto path = temp_path("roundtrip.json");
  write_features(path, in);
  const auto out = parse_features(path);
  std::filesystem::remove(path);
  ASSERT_EQ(out.size(), in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    EXPECT_EQ(out[i].id, in[i].id);
    ASSERT_EQ(out[i].subspace.dim(), in[i].subspace.dim());
    if (in[i].subspace.dim() > 0) {
      EXPECT_LE((out[i].subspace.basis() - in[i].subspace.basis()).cwiseAbs().maxCoeff(), 1e-12);
    }
    EXPECT_LE((out[i].subspace.displacement() - in[i].subspace.displacement()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Correspondences, RoundTripAndResolve) {
  const IdPairs ids{{"t0", "s1"}, {"t1", "s0"}};
  const auto back = correspondences_from_json(json::parse(to_json_string(correspondences_to_json(ids))));
  EXPECT_EQ(back, ids);
  std::vector<Feature> t{{"t0", AffineSubspace::line(Eigen::Vector3d::UnitX(), Eigen::Vector3d::Zero())},
                         {"t1", AffineSubspace::line(Eigen::Vector3d::UnitY(), Eigen::Vector3d::Zero())}};
  std::vector<Feature> s{{"s0", t[1].subspace}, {"s1", t[0].subspace}};
  const auto pairs = build_pairs(FeatureKind::LineLine, t, s, ids);
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_LT(total_cost(pairs, RigidTransform::identity(3)).total, 1e-30);
  EXPECT_THROW(build_pairs(FeatureKind::LineLine, t, s, {{"t9", "s0"}}), SchemaError);
  EXPECT_THROW(build_pairs(FeatureKind::LinePlane, t, s, ids), InvalidFeaturePair);
  EXPECT_THROW(correspondences_from_json(json::parse(R"({"version": 1, "pairs": [["a"]]})")), SchemaError);
}

TEST(Result, RoundTripKeepsSo3) {
  std::mt19937_64 rng(2);
  ResultFile r;
  r.rotation = test::rotation(rng);
  r.translation = test::box(rng, 3.0);
  r.inlier_ids = {{"a", "b"}};
  r.f_sum = 1e-17;
  r.g_sum = 0.25;
  r.total = r.f_sum + r.g_sum;
  const auto back = result_from_json(json::parse(to_json_string(result_to_json(r))));
  EXPECT_EQ(back.rotation, r.rotation);
  EXPECT_EQ(back.translation, r.translation);
  EXPECT_EQ(back.inlier_ids, r.inlier_ids);
  EXPECT_EQ(back.f_sum, r.f_sum);
  EXPECT_EQ(back.total, r.total);
}

TEST(Result, RejectsNonRotation) {
  ResultFile r;
  r.rotation = Eigen::Vector3d(1, 1, 1).asDiagonal();
  r.rotation(0, 0) = 1.01;
  EXPECT_THROW(result_from_json(json::parse(to_json_string(result_to_json(r)))), SchemaError);
  r.rotation = -Eigen::Matrix3d::Identity();
  EXPECT_THROW(result_from_json(json::parse(to_json_string(result_to_json(r)))), SchemaError);
}

TEST(Format, SeventeenDigitsAndNull) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(1.0), "1");
  EXPECT_EQ(format_double(std::nan("")), "null");
  EXPECT_EQ(to_json_string(json::array({1.5, 2})), "[1.5, 2]\n");
}
