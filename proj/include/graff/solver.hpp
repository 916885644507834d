#pragma once

// End-to-end registration: rotation search, translation search, then a
// joint least-squares polish over the surviving inliers.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>
#include <vector>

#include "graff/config.hpp"
#include "graff/cost.hpp"
#include "graff/refine.hpp"
#include "graff/rotation_search.hpp"
#include "graff/translation_search.hpp"

namespace graff {

struct RegistrationStats {
  std::size_t cubes_expanded = 0;
  std::size_t bound_evaluations = 0;
  std::size_t rotation_cubes_expanded = 0;
  std::size_t translation_cubes_expanded = 0;
  std::size_t lm_calls = 0;
  std::size_t candidate_pairs = 0;
  bool candidates_subsampled = false;
  bool translation_gap_closed = false;
  bool translation_on_boundary = false;
  double wall_time_ms = 0.0;
};

struct RegistrationResult {
  RigidTransform transform = RigidTransform::identity(3);
  /// Indices into the pair list (with correspondences) or into `matches`
  /// (without), of pairs whose rotation residual is within epsilon_r.
  std::vector<std::size_t> inliers;
  /// Costs over the inlier pairs, in inlier order.
  CostBreakdown final_cost;
  /// (target index, source index) for the correspondence-free search.
  std::vector<std::pair<std::size_t, std::size_t>> matches;
  RegistrationStats stats;
};

namespace detail {

inline TranslationCube initial_translation_cube(const std::vector<FeaturePair>& pairs,
                                                const SolverConfig& config) {
  TranslationCube cube;
  cube.center = config.translation_center;
  cube.half_side = config.initial_translation_halfside > 0.0
                       ? config.initial_translation_halfside
                       : default_translation_halfside(pairs);
  return cube;
}

/// Translation search on the rotation inliers followed by the joint polish.
inline RegistrationResult finish_registration(const std::vector<FeaturePair>& pairs,
                                              const Eigen::Matrix3d& rotation,
                                              std::vector<std::size_t> inliers,
                                              const SolverConfig& config,
                                              RegistrationStats stats) {
  if (inliers.empty()) throw EmptyInlierSet("no pair is a rotation inlier");
  const auto geo = geometry(pairs);
  const TranslationCube cube = initial_translation_cube(pairs, config);
  const auto trans = translation_bnb(geo, inliers, rotation, cube, config);
  stats.translation_cubes_expanded = trans.stats.cubes_expanded;
  stats.cubes_expanded += trans.stats.cubes_expanded;
  stats.bound_evaluations += trans.stats.bound_evaluations;
  stats.lm_calls += trans.stats.lm_calls + 1;
  stats.translation_gap_closed = trans.stats.gap_closed;
  stats.translation_on_boundary = trans.stats.on_boundary;

  Eigen::Matrix3d r = rotation;
  Eigen::Vector3d t = trans.translation;
  const auto polished = refine_lm(geo, inliers, r, t);
  auto polished_inliers = rotation_inliers(geo, polished.rotation, config.epsilon_r);
  if (polished_inliers.size() >= inliers.size()) {
    r = polished.rotation;
    t = polished.translation;
    inliers = std::move(polished_inliers);
  }

  RegistrationResult out;
  out.transform = RigidTransform::from(r, t);
  std::vector<PairGeometry> inlier_geo;
  for (std::size_t i : inliers) inlier_geo.push_back(geo[i]);
  out.final_cost = total_cost(inlier_geo, r, t);
  out.inliers = std::move(inliers);
  out.stats = stats;
  return out;
}

}  // namespace detail

/// Registration with known (possibly outlier-contaminated) correspondences.
inline RegistrationResult register_with_correspondences(const std::vector<FeaturePair>& pairs,
                                                        const SolverConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  config.validate();
  if (pairs.empty()) throw EmptyInput("register: no pairs");
  const auto geo = geometry(pairs);
  const auto rot = rotation_bnb(geo, config);

  RegistrationStats stats;
  stats.rotation_cubes_expanded = rot.stats.cubes_expanded;
  stats.cubes_expanded = rot.stats.cubes_expanded;
  stats.bound_evaluations = rot.stats.bound_evaluations;
  stats.lm_calls = rot.stats.lm_calls;
  stats.candidate_pairs = pairs.size();

  auto out = detail::finish_registration(pairs, rot.rotation, rot.inliers, config, stats);
  out.stats.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

/// Registration of two feature sets without correspondences: rotation search
/// over all target/source candidate pairs, greedy matching under the found
/// rotation, then translation search on the matches.
inline RegistrationResult register_without_correspondences(
    const std::vector<AffineSubspace>& targets, const std::vector<AffineSubspace>& sources,
    FeatureKind kind, const SolverConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  config.validate();
  if (targets.empty() || sources.empty()) throw EmptyInput("register: empty feature set");

  // Keep the candidate count tractable by thinning the source set with the
  // seeded generator.
  std::vector<std::size_t> source_ids(sources.size());
  std::iota(source_ids.begin(), source_ids.end(), std::size_t{0});
  RegistrationStats stats;
  if (targets.size() * sources.size() > config.max_candidates) {
    const std::size_t keep = std::max<std::size_t>(1, config.max_candidates / targets.size());
    std::mt19937_64 rng(config.rng_seed);
    std::shuffle(source_ids.begin(), source_ids.end(), rng);
    source_ids.resize(keep);
    std::sort(source_ids.begin(), source_ids.end());
    stats.candidates_subsampled = true;
  }

  std::vector<FeaturePair> candidates;
  candidates.reserve(targets.size() * source_ids.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    for (std::size_t j : source_ids) {
      candidates.push_back(
          make_feature_pair(kind, targets[i], sources[j], i * sources.size() + j));
    }
  }
  stats.candidate_pairs = candidates.size();
  const auto rot = rotation_bnb(geometry(candidates), config);
  stats.rotation_cubes_expanded = rot.stats.cubes_expanded;
  stats.cubes_expanded = rot.stats.cubes_expanded;
  stats.bound_evaluations = rot.stats.bound_evaluations;
  stats.lm_calls = rot.stats.lm_calls;

  std::vector<AffineSubspace> kept_sources;
  for (std::size_t j : source_ids) kept_sources.push_back(sources[j]);
  auto matches = find_correspondences(targets, kept_sources, kind, rot.rotation, config.epsilon_r);
  for (auto& m : matches) m.second = source_ids[m.second];
  if (matches.empty()) throw EmptyInlierSet("no correspondences found under the optimal rotation");

  std::vector<FeaturePair> pairs;
  std::vector<std::size_t> all;
  for (std::size_t k = 0; k < matches.size(); ++k) {
    pairs.push_back(make_feature_pair(kind, targets[matches[k].first], sources[matches[k].second], k));
    all.push_back(k);
  }
  auto out = detail::finish_registration(pairs, rot.rotation, all, config, stats);
  out.matches = std::move(matches);
  out.stats.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace graff
