#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>

#include "graff/errors.hpp"

namespace graff {

/// How the translation search bounds the motion of the projected target
/// displacement inside a cube.
enum class TranslationBoundMode {
  /// Maximum over the 8 cube vertices only.
  Vertices,
  /// Maximum over vertices, the 12 edge midpoints and the center, inflated by 5%.
  Safeguarded,
};

struct SolverConfig {
  /// Rotation inlier threshold on the squared angle residual, radians².
  double epsilon_r = 0.015;
  /// Translation search stops once incumbent − lowest lower bound < epsilon_t.
  double epsilon_t = 1e-6;
  /// Half side of the initial translation cube. Non-positive: derived from the data.
  double initial_translation_halfside = 0.0;
  Eigen::Vector3d translation_center = Eigen::Vector3d::Zero();
  std::size_t max_queue = 4'000'000;
  std::uint64_t rng_seed = 0;
  int threads = 1;
  TranslationBoundMode translation_bound = TranslationBoundMode::Safeguarded;
  /// Rotation cubes smaller than this are not split further.
  double min_rotation_halfside = 1e-7;
  std::size_t max_translation_expansions = 20'000;
  /// Candidate pairs scored by the correspondence-free search.
  std::size_t max_candidates = 1'000'000;
  /// Keep the popped bound sequences in the stats (tests only).
  bool record_trace = false;

  void validate() const {
    if (!(epsilon_r > 0.0)) throw ConfigError("epsilon_r must be > 0");
    if (!(epsilon_t > 0.0)) throw ConfigError("epsilon_t must be > 0");
    if (max_queue == 0) throw ConfigError("max_queue must be > 0");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    if (!(min_rotation_halfside > 0.0)) throw ConfigError("min_rotation_halfside must be > 0");
    if (max_candidates == 0) throw ConfigError("max_candidates must be > 0");
  }
};

}  // namespace graff
