#pragma once

// Translation by branch and bound on Σ gᵢ(R*, t) with the rotation fixed.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <span>
#include <vector>

#include "graff/config.hpp"
#include "graff/cost.hpp"
#include "graff/refine.hpp"

namespace graff {

struct TranslationCube {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double half_side = 1.0;
  double lower = 0.0;
  double upper = 0.0;
  std::uint64_t id = 0;

  Eigen::Vector3d vertex(int k) const {
    return center + half_side * Eigen::Vector3d((k & 1) ? 1 : -1, (k & 2) ? 1 : -1,
                                                (k & 4) ? 1 : -1);
  }

  std::array<Eigen::Vector3d, 8> vertices() const {
    std::array<Eigen::Vector3d, 8> v;
    for (int k = 0; k < 8; ++k) v[k] = vertex(k);
    return v;
  }

  bool contains(const Eigen::Vector3d& t, double slack = 0.0) const {
    return ((t - center).cwiseAbs().array() <= half_side + slack).all();
  }

  Eigen::Vector3d clamp(const Eigen::Vector3d& t) const {
    return t.array().max(center.array() - half_side).min(center.array() + half_side).matrix();
  }
};

namespace detail {

/// The part of a pair that stays fixed while t varies, for a fixed rotation.
struct TranslationTerm {
  Eigen::Matrix<double, 3, 2> rotated_basis = Eigen::Matrix<double, 3, 2>::Zero();
  int cols = 1;
  Eigen::Vector3d rotated_disp = Eigen::Vector3d::Zero();
  Eigen::Vector4d target_tilde = Eigen::Vector4d::UnitW();
  /// Projection of the target onto the linear part of the embedded source.
  Eigen::Vector4d linear_proj = Eigen::Vector4d::Zero();

  /// Displacement of the transformed source: Rb₀ + (I − UUᵀ)t.
  Eigen::Vector3d moved_disp(const Eigen::Vector3d& t) const {
    Eigen::Vector3d d = rotated_disp + t;
    for (int j = 0; j < cols; ++j) d -= rotated_basis.col(j) * rotated_basis.col(j).dot(t);
    return d;
  }

  /// (c̃·ỹ)ỹ, the translation-dependent share of P c̃.
  Eigen::Vector4d moving_proj(const Eigen::Vector3d& t) const {
    const Eigen::Vector3d d = moved_disp(t);
    Eigen::Vector4d y;
    y << d, 1.0;
    y /= std::sqrt(1.0 + d.squaredNorm());
    return y * y.dot(target_tilde);
  }

  double residual_norm(const Eigen::Vector3d& t) const {
    return (linear_proj + moving_proj(t) - target_tilde).norm();
  }
};

inline TranslationTerm make_translation_term(const PairGeometry& g, const Eigen::Matrix3d& r) {
  TranslationTerm term;
  term.cols = g.source_cols;
  term.rotated_disp = r * g.source_disp;
  term.target_tilde = g.target_tilde;
  for (int j = 0; j < g.source_cols; ++j) {
    term.rotated_basis.col(j) = r * g.source_basis.col(j);
    Eigen::Vector4d ub;
    ub << term.rotated_basis.col(j), 0.0;
    term.linear_proj += ub * ub.dot(g.target_tilde);
  }
  return term;
}

/// Points of the cube at which the projected displacement is probed.
inline std::vector<Eigen::Vector3d> probe_points(const TranslationCube& cube,
                                                 TranslationBoundMode mode) {
  std::vector<Eigen::Vector3d> pts;
  for (int k = 0; k < 8; ++k) pts.push_back(cube.vertex(k));
  if (mode == TranslationBoundMode::Safeguarded) {
    // Edge midpoints: pairs of vertices differing in exactly one bit.
    for (int k = 0; k < 8; ++k) {
      for (int bit = 1; bit < 8; bit <<= 1) {
        if (!(k & bit)) pts.push_back(0.5 * (cube.vertex(k) + cube.vertex(k | bit)));
      }
    }
    pts.push_back(cube.center);
  }
  return pts;
}

inline constexpr double kSafeguardInflation = 1.05;

}  // namespace detail

struct TranslationBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// Lower and upper bound of min_{t∈cube} Σ gᵢ(R, t). The upper bound is the
/// cost at the center; the lower bound subtracts, per pair, the largest
/// probed change of the projected displacement from the center residual norm.
inline TranslationBounds translation_bounds(const TranslationCube& cube,
                                            std::span<const detail::TranslationTerm> terms,
                                            TranslationBoundMode mode) {
  const auto probes = detail::probe_points(cube, mode);
  const double inflate = mode == TranslationBoundMode::Safeguarded ? detail::kSafeguardInflation : 1.0;
  TranslationBounds b;
  for (const auto& term : terms) {
    const Eigen::Vector4d h0 = term.moving_proj(cube.center);
    const double r0 = (term.linear_proj + h0 - term.target_tilde).norm();
    double psi = 0.0;
    for (const auto& p : probes) psi = std::max(psi, (h0 - term.moving_proj(p)).norm());
    psi *= inflate;
    b.upper += r0 * r0;
    const double rel = std::max(0.0, r0 - psi);
    b.lower += rel * rel;
  }
  return b;
}

inline TranslationBounds translation_bounds(const TranslationCube& cube,
                                            std::span<const PairGeometry> pairs,
                                            const Eigen::Matrix3d& r,
                                            TranslationBoundMode mode) {
  std::vector<detail::TranslationTerm> terms;
  terms.reserve(pairs.size());
  for (const auto& g : pairs) terms.push_back(detail::make_translation_term(g, r));
  return translation_bounds(cube, terms, mode);
}

struct TranslationSearchStats {
  std::size_t cubes_expanded = 0;
  std::size_t bound_evaluations = 0;
  std::size_t lm_calls = 0;
  std::size_t max_queue_size = 0;
  bool gap_closed = false;
  /// Incumbent cost minus the smallest outstanding lower bound at exit.
  double final_gap = 0.0;
  /// The minimizer sits on the face of the initial cube.
  bool on_boundary = false;
  std::vector<double> popped_lower;  ///< filled when record_trace is set
};

struct TranslationSearchResult {
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  double cost = 0.0;
  TranslationCube initial_cube;
  TranslationSearchStats stats;
};

namespace detail {

struct TranslationQueueOrder {
  bool operator()(const TranslationCube& a, const TranslationCube& b) const {
    if (a.lower != b.lower) return a.lower > b.lower;
    return a.id > b.id;
  }
};

inline double translation_cost(std::span<const TranslationTerm> terms, const Eigen::Vector3d& t) {
  double s = 0.0;
  for (const auto& term : terms) {
    const double r = term.residual_norm(t);
    s += r * r;
  }
  return s;
}

/// Damped Gauss-Newton in t with every trial point projected back onto the cube.
inline Eigen::Vector3d box_refine(std::span<const PairGeometry> pairs, std::span<const std::size_t> subset,
                                  const Eigen::Matrix3d& r, const Eigen::Vector3d& start,
                                  const TranslationCube& cube, const LmOptions& opt) {
  Eigen::Vector3d t = cube.clamp(start);
  double cost = lm_objective(pairs, subset, r, t, opt);
  double lambda = 1e-4;
  Eigen::VectorXd res;
  Eigen::MatrixXd jac;
  for (int it = 0; it < opt.max_iterations; ++it) {
    lm_linearize(pairs, subset, r, t, opt, res, jac);
    const Eigen::MatrixXd j = jac.rightCols(3);
    const Eigen::Vector3d grad = j.transpose() * res;
    if ((cube.clamp(t - grad) - t).norm() < opt.gradient_tol) break;
    const Eigen::Matrix3d h = j.transpose() * j;
    // Coordinates pinned on a face with the gradient pointing outward stay fixed.
    Eigen::Vector3d free = Eigen::Vector3d::Ones();
    const double slack = 1e-12 * std::max(1.0, cube.half_side);
    for (int k = 0; k < 3; ++k) {
      const double off = t(k) - cube.center(k);
      if ((off <= -cube.half_side + slack && grad(k) > 0) || (off >= cube.half_side - slack && grad(k) < 0)) {
        free(k) = 0.0;
      }
    }
    const Eigen::Matrix3d mask = free.asDiagonal();
    bool accepted = false;
    for (int tries = 0; tries < 12 && !accepted; ++tries) {
      Eigen::Matrix3d damped = mask * h * mask;
      damped.diagonal().array() += lambda * (h.diagonal().array() + 1.0);
      const Eigen::Vector3d cand = cube.clamp(t - damped.ldlt().solve(mask * grad));
      const double c = lm_objective(pairs, subset, r, cand, opt);
      if (c < cost) {
        accepted = (t - cand).norm() >= opt.step_tol;
        t = cand;
        cost = c;
        lambda = std::max(lambda / 10, 1e-12);
        if (!accepted) return t;
      } else {
        lambda *= 10;
      }
    }
    if (!accepted) break;
  }
  return t;
}

}  // namespace detail

/// Best-first search over `initial` for the minimizer of Σ_{i∈subset} gᵢ(r, t).
/// Stops when the incumbent is within config.epsilon_t of the smallest
/// outstanding lower bound. The returned translation always lies in `initial`.
inline TranslationSearchResult translation_bnb(std::span<const PairGeometry> pairs,
                                               std::span<const std::size_t> subset,
                                               const Eigen::Matrix3d& r,
                                               const TranslationCube& initial,
                                               const SolverConfig& config) {
  config.validate();
  if (subset.empty()) throw EmptyInlierSet("translation_bnb: empty inlier set");
  if (!(initial.half_side > 0.0)) throw ConfigError("translation cube half side must be > 0");

  std::vector<PairGeometry> active;
  std::vector<detail::TranslationTerm> terms;
  for (std::size_t i : subset) {
    active.push_back(pairs[i]);
    terms.push_back(detail::make_translation_term(pairs[i], r));
  }
  std::vector<std::size_t> all(active.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;

  TranslationSearchResult out;
  out.initial_cube = initial;
  auto& stats = out.stats;

  LmOptions lm;
  lm.optimize_rotation = false;
  lm.use_f = false;

  double best_cost = std::numeric_limits<double>::infinity();
  Eigen::Vector3d best_t = initial.center;

  auto polish = [&](const Eigen::Vector3d& start) {
    ++stats.lm_calls;
    const auto rep = refine_lm(active, all, r, start, lm);
    Eigen::Vector3d t = rep.translation;
    if (!initial.contains(t)) t = detail::box_refine(active, all, r, initial.clamp(t), initial, lm);
    const double c = detail::translation_cost(terms, t);
    if (c < best_cost) {
      best_cost = c;
      best_t = t;
    }
  };

  std::priority_queue<TranslationCube, std::vector<TranslationCube>, detail::TranslationQueueOrder>
      queue;
  std::uint64_t next_id = 0;
  TranslationCube root = initial;
  {
    const auto b = translation_bounds(root, terms, config.translation_bound);
    ++stats.bound_evaluations;
    root.lower = b.lower;
    root.upper = b.upper;
    root.id = next_id++;
    best_cost = b.upper;
    best_t = root.center;
    polish(root.center);
  }
  queue.push(root);

  while (true) {
    if (queue.empty()) {
      stats.gap_closed = true;
      break;
    }
    const TranslationCube parent = queue.top();
    queue.pop();
    if (config.record_trace) stats.popped_lower.push_back(parent.lower);
    if (best_cost - parent.lower < config.epsilon_t) {
      stats.gap_closed = true;
      stats.final_gap = std::max(0.0, best_cost - parent.lower);
      break;
    }
    if (stats.cubes_expanded >= config.max_translation_expansions) {
      stats.final_gap = best_cost - parent.lower;
      break;
    }
    ++stats.cubes_expanded;

    const double half = parent.half_side / 2;
    for (int j = 0; j < 8; ++j) {
      TranslationCube c;
      c.half_side = half;
      c.center = parent.center + Eigen::Vector3d((j & 1) ? half : -half, (j & 2) ? half : -half,
                                                 (j & 4) ? half : -half);
      c.id = next_id++;
      const auto b = translation_bounds(c, terms, config.translation_bound);
      ++stats.bound_evaluations;
      c.upper = b.upper;
      c.lower = std::max(b.lower, parent.lower);
      if (c.upper < best_cost) {
        best_cost = c.upper;
        best_t = c.center;
        polish(c.center);
      }
      if (c.lower < best_cost) queue.push(c);
    }
    stats.max_queue_size = std::max(stats.max_queue_size, queue.size());
    if (queue.size() > config.max_queue) {
      stats.final_gap = best_cost - queue.top().lower;
      break;
    }
  }

  out.translation = best_t;
  out.cost = best_cost;
  const double slack = 1e-9 * std::max(1.0, initial.half_side);
  stats.on_boundary =
      ((best_t - initial.center).cwiseAbs().array() >= initial.half_side - slack).any();
  return out;
}

/// Half side of the default translation cube, centered at the origin: the
/// larger of the target bounding-box diagonal and twice the summed largest
/// target and source displacement norms (at least 1).
inline double default_translation_halfside(const std::vector<FeaturePair>& pairs) {
  if (pairs.empty()) return 1.0;
  Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d hi = -lo;
  double max_target = 0.0;
  double max_source = 0.0;
  for (const auto& p : pairs) {
    const Eigen::Vector3d d = p.target.displacement();
    lo = lo.cwiseMin(d);
    hi = hi.cwiseMax(d);
    max_target = std::max(max_target, d.norm());
    max_source = std::max(max_source, p.source.displacement().norm());
  }
  return std::max({1.0, (hi - lo).norm(), 2.0 * (max_target + max_source)});
}

}  // namespace graff
