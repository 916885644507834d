#pragma once

// Globally optimal rotation by inlier-set maximization. The rotation space
// is the π-ball of axis-angle vectors, enclosed in the cube [−π, π]³ and
// searched best-first with octant subdivision.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <future>
#include <queue>
#include <span>
#include <vector>

#include "graff/config.hpp"
#include "graff/cost.hpp"
#include "graff/refine.hpp"

namespace graff {

struct RotationCube {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();  ///< axis-angle, radians
  double half_side = kPi;                            ///< σ_r
  int upper = 0;
  int lower = 0;
  std::uint64_t id = 0;

  Eigen::Matrix3d rotation() const { return so3_exp(center); }
};

namespace detail {

inline constexpr double kSqrt3 = 1.7320508075688772;

/// Largest angle any vector can move between the cube center and a rotation
/// inside the cube.
inline double rotation_uncertainty(double half_side) {
  return std::min(kPi / 2, kSqrt3 * half_side);
}

/// Per-pair uncertainty angle ψ_r at center rotation r0.
inline double pair_uncertainty(const PairGeometry& g, const Eigen::Matrix3d& r0, double half_side) {
  const double psi = rotation_uncertainty(half_side);
  if (g.kind != FeatureKind::LinePlane) return psi;
  // Line direction close to the rotated normal: projection onto the plane is
  // unstable, fall back to the trivial bound.
  const double normal_to_dir = line_angle(r0 * g.source_axis, g.target_axis);
  return normal_to_dir >= kSqrt3 * half_side ? psi : kPi / 2;
}

struct CubeBounds {
  int lower = 0;
  int upper = 0;
};

inline CubeBounds evaluate_rotation_cube(std::span<const PairGeometry> pairs,
                                         const Eigen::Vector3d& center, double half_side,
                                         double eps) {
  const Eigen::Matrix3d r0 = so3_exp(center);
  CubeBounds b;
  for (const auto& g : pairs) {
    const double theta = rotation_angle(g, r0);
    if (theta * theta <= eps) ++b.lower;
    const double relaxed = std::max(0.0, theta - pair_uncertainty(g, r0, half_side));
    if (relaxed * relaxed <= eps) ++b.upper;
  }
  return b;
}

}  // namespace detail

/// Upper bound on the inlier count of any rotation inside the cube.
inline int rotation_upper_bound(const RotationCube& cube, std::span<const PairGeometry> pairs,
                                double eps) {
  return detail::evaluate_rotation_cube(pairs, cube.center, cube.half_side, eps).upper;
}

/// Inlier count at the cube center.
inline int rotation_lower_bound(const RotationCube& cube, std::span<const PairGeometry> pairs,
                                double eps) {
  const Eigen::Matrix3d r0 = cube.rotation();
  int count = 0;
  for (const auto& g : pairs) {
    if (rotation_residual(g, r0) <= eps) ++count;
  }
  return count;
}

/// Indices of pairs whose rotation residual at r is within eps.
inline std::vector<std::size_t> rotation_inliers(std::span<const PairGeometry> pairs,
                                                 const Eigen::Matrix3d& r, double eps) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (rotation_residual(pairs[i], r) <= eps) out.push_back(i);
  }
  return out;
}

struct RotationSearchStats {
  std::size_t cubes_expanded = 0;
  std::size_t bound_evaluations = 0;
  std::size_t lm_calls = 0;
  std::size_t unresolved_leaves = 0;
  std::size_t max_queue_size = 0;
  std::vector<int> popped_upper;  ///< filled when record_trace is set
};

struct RotationSearchResult {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  std::vector<std::size_t> inliers;
  /// Σ of rotation residuals over the inliers (tie-breaker).
  double inlier_residual_sum = 0.0;
  RotationSearchStats stats;
};

namespace detail {

struct RotationIncumbent {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  std::vector<std::size_t> inliers;
  double residual_sum = 0.0;

  bool worse_than(std::size_t count, double sum) const {
    return count > inliers.size() || (count == inliers.size() && sum < residual_sum);
  }
};

inline std::pair<std::vector<std::size_t>, double> score_rotation(
    std::span<const PairGeometry> pairs, const Eigen::Matrix3d& r, double eps) {
  std::vector<std::size_t> inl;
  double sum = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double f = rotation_residual(pairs[i], r);
    if (f <= eps) {
      inl.push_back(i);
      sum += f;
    }
  }
  return {std::move(inl), sum};
}

/// Scores r0 and its least-squares polish over the inliers at r0, keeping
/// whichever beats the incumbent.
inline void try_rotation(std::span<const PairGeometry> pairs, const Eigen::Matrix3d& r0, double eps,
                         RotationIncumbent& best, RotationSearchStats& stats) {
  auto [inl0, sum0] = score_rotation(pairs, r0, eps);
  if (best.worse_than(inl0.size(), sum0)) best = {r0, inl0, sum0};
  if (inl0.empty()) return;

  LmOptions opt;
  opt.optimize_translation = false;
  opt.use_g = false;
  ++stats.lm_calls;
  const auto rep = refine_lm(pairs, inl0, r0, Eigen::Vector3d::Zero(), opt);
  auto [inl1, sum1] = score_rotation(pairs, rep.rotation, eps);
  if (best.worse_than(inl1.size(), sum1)) best = {rep.rotation, std::move(inl1), sum1};
}

struct RotationQueueOrder {
  bool operator()(const RotationCube& a, const RotationCube& b) const {
    if (a.upper != b.upper) return a.upper < b.upper;
    return a.id > b.id;  // earlier cubes first
  }
};

}  // namespace detail

/// Best-first branch and bound maximizing the number of pairs whose
/// rotation residual is within config.epsilon_r. Every candidate pair
/// counts, so the same routine serves known correspondences and the
/// all-pairs candidate set of the correspondence-free search.
inline RotationSearchResult rotation_bnb(std::span<const PairGeometry> pairs,
                                         const SolverConfig& config) {
  config.validate();
  if (pairs.empty()) throw EmptyInput("rotation_bnb: no pairs");
  const double eps = config.epsilon_r;

  RotationSearchResult out;
  auto& stats = out.stats;
  detail::RotationIncumbent best;
  best.inliers.clear();
  best.residual_sum = 0.0;
  detail::try_rotation(pairs, Eigen::Matrix3d::Identity(), eps, best, stats);

  std::priority_queue<RotationCube, std::vector<RotationCube>, detail::RotationQueueOrder> queue;
  std::uint64_t next_id = 0;
  RotationCube root;
  root.center.setZero();
  root.half_side = kPi;
  root.upper = static_cast<int>(pairs.size());
  root.lower = 0;
  root.id = next_id++;
  queue.push(root);

  const bool parallel = config.threads > 1 && pairs.size() >= 64;

  while (!queue.empty()) {
    const RotationCube parent = queue.top();
    queue.pop();
    if (config.record_trace) stats.popped_upper.push_back(parent.upper);
    if (parent.upper <= static_cast<int>(best.inliers.size())) break;
    ++stats.cubes_expanded;

    const double half = parent.half_side / 2;
    if (half < config.min_rotation_halfside) {
      ++stats.unresolved_leaves;
      continue;
    }

    std::array<RotationCube, 8> children;
    std::array<bool, 8> inside{};
    for (int j = 0; j < 8; ++j) {
      RotationCube& c = children[j];
      c.half_side = half;
      c.center = parent.center + Eigen::Vector3d((j & 1) ? half : -half, (j & 2) ? half : -half,
                                                 (j & 4) ? half : -half);
      // Entirely outside the π-ball: rotations already covered elsewhere.
      inside[j] = c.center.norm() - detail::kSqrt3 * half <= kPi;
      c.id = next_id++;
    }

    std::array<detail::CubeBounds, 8> bounds;
    if (parallel) {
      std::array<std::future<detail::CubeBounds>, 8> futs;
      for (int j = 0; j < 8; ++j) {
        if (!inside[j]) continue;
        futs[j] = std::async(std::launch::async, [&, j] {
          return detail::evaluate_rotation_cube(pairs, children[j].center, half, eps);
        });
      }
      for (int j = 0; j < 8; ++j) {
        if (inside[j]) bounds[j] = futs[j].get();
      }
    } else {
      for (int j = 0; j < 8; ++j) {
        if (inside[j]) bounds[j] = detail::evaluate_rotation_cube(pairs, children[j].center, half, eps);
      }
    }

    for (int j = 0; j < 8; ++j) {
      if (!inside[j]) continue;
      RotationCube& c = children[j];
      ++stats.bound_evaluations;
      c.lower = bounds[j].lower;
      // A child can never hold more inliers than its parent allowed.
      c.upper = std::min(bounds[j].upper, parent.upper);
      if (c.lower > 0 && static_cast<int>(best.inliers.size()) < 2 * c.lower) {
        detail::try_rotation(pairs, c.rotation(), eps, best, stats);
      }
      if (c.upper > static_cast<int>(best.inliers.size())) queue.push(c);
    }
    stats.max_queue_size = std::max(stats.max_queue_size, queue.size());
    if (queue.size() > config.max_queue) {
      throw QueueOverflow("rotation queue exceeded " + std::to_string(config.max_queue) +
                          " cubes; epsilon_r may be too large");
    }
  }

  out.rotation = best.rotation;
  out.inliers = std::move(best.inliers);
  out.inlier_residual_sum = best.residual_sum;
  return out;
}

/// Greedy one-to-one matching on the rotation residual under r: candidates
/// are visited in ascending residual order (ties by target, then source
/// index) and accepted while both ends are unused and the residual is within eps.
inline std::vector<std::pair<std::size_t, std::size_t>> find_correspondences(
    const std::vector<AffineSubspace>& targets, const std::vector<AffineSubspace>& sources,
    FeatureKind kind, const Eigen::Matrix3d& r, double eps) {
  struct Candidate {
    double residual;
    std::size_t target;
    std::size_t source;
  };
  std::vector<Candidate> cands;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    for (std::size_t j = 0; j < sources.size(); ++j) {
      const auto g = geometry(make_feature_pair(kind, targets[i], sources[j]));
      const double f = rotation_residual(g, r);
      if (f <= eps) cands.push_back({f, i, j});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.residual != b.residual) return a.residual < b.residual;
    if (a.target != b.target) return a.target < b.target;
    return a.source < b.source;
  });
  std::vector<bool> used_t(targets.size(), false), used_s(sources.size(), false);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& c : cands) {
    if (used_t[c.target] || used_s[c.source]) continue;
    used_t[c.target] = used_s[c.source] = true;
    out.emplace_back(c.target, c.source);
  }
  return out;
}

}  // namespace graff
