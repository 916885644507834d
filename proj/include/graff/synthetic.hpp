#pragma once

// Synthetic scenes with known ground truth, the line-to-plane camera
// protocol, pose error metrics and the outlier-ratio benchmark.

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "graff/config.hpp"
#include "graff/cost.hpp"
#include "graff/errors.hpp"
#include "graff/manifold.hpp"
#include "graff/solver.hpp"

namespace graff {

struct CameraModel {
  double focal = 800.0;
  Eigen::Vector2d principal_point{320.0, 240.0};
  int width = 640;
  int height = 480;
};

struct SceneConfig {
  std::size_t n_pairs = 100;
  FeatureKind feature_kind = FeatureKind::LineLine;
  /// Gaussian σ on anchor positions, scene units.
  double noise_sigma = 0.0;
  /// σ of the tilt applied to directions and normals, radians.
  double angular_sigma = 0.0;
  double outlier_ratio = 0.0;
  /// Features are scattered in [−scene_halfside, scene_halfside]³.
  double scene_halfside = 5.0;
  /// Ground-truth translation is uniform in [−translation_halfside, translation_halfside]³.
  double translation_halfside = 2.0;
  std::uint64_t rng_seed = 0;

  /// Line-to-plane scenes use the camera protocol: image segments
  /// back-projected at random depth, planes in the camera frame.
  bool camera_protocol = true;
  CameraModel camera;
  double pixel_sigma = 0.0;
  double min_depth = 2.0;
  double max_depth = 10.0;

  void validate() const {
    if (n_pairs < 1) throw ConfigError("n_pairs must be >= 1");
    if (!(outlier_ratio >= 0.0 && outlier_ratio < 1.0)) {
      throw ConfigError("outlier_ratio must be in [0, 1)");
    }
    if (noise_sigma < 0.0 || angular_sigma < 0.0 || pixel_sigma < 0.0) {
      throw ConfigError("noise levels must be >= 0");
    }
    if (!(camera.focal > 0.0)) throw ConfigError("focal must be > 0");
    if (!(min_depth > 0.0 && max_depth >= min_depth)) throw ConfigError("invalid depth range");
  }
};

struct Scene {
  std::vector<FeaturePair> pairs;
  RigidTransform ground_truth = RigidTransform::identity(3);
  std::vector<bool> inlier_mask;
};

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Eigen::Quaterniond q(n01(rng), n01(rng), n01(rng), n01(rng));
  q.normalize();
  return q.toRotationMatrix();
}

inline Eigen::Vector3d random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Eigen::Vector3d v;
  do {
    v = Eigen::Vector3d(n01(rng), n01(rng), n01(rng));
  } while (v.norm() < 1e-6);
  return v.normalized();
}

inline Eigen::Vector3d random_in_box(std::mt19937_64& rng, double half) {
  std::uniform_real_distribution<double> u(-half, half);
  const double x = u(rng), y = u(rng), z = u(rng);
  return {x, y, z};
}

/// Rotates `axis` by |N(0, σ)| about a random perpendicular direction.
inline Eigen::Vector3d tilt(const Eigen::Vector3d& axis, double sigma, std::mt19937_64& rng) {
  if (sigma <= 0.0) return axis;
  std::normal_distribution<double> n(0.0, sigma);
  const double angle = std::abs(n(rng));
  Eigen::Vector3d perp = random_unit(rng);
  perp -= axis * axis.dot(perp) / axis.squaredNorm();
  if (perp.norm() < 1e-9) return axis;
  return so3_exp(perp.normalized() * angle) * axis;
}

/// Plane through the camera center containing the viewing rays of both
/// pixel endpoints.
inline AffineSubspace backproject_line(const CameraModel& cam, const Eigen::Vector2d& p1,
                                       const Eigen::Vector2d& p2) {
  if ((p1 - p2).norm() < 1.0) throw DegenerateSegment("segment endpoints closer than 1 pixel");
  auto ray = [&](const Eigen::Vector2d& p) {
    return Eigen::Vector3d((p.x() - cam.principal_point.x()) / cam.focal,
                           (p.y() - cam.principal_point.y()) / cam.focal, 1.0);
  };
  return AffineSubspace::plane(ray(p1), ray(p2), Eigen::Vector3d::Zero());
}

namespace detail {

inline AffineSubspace random_feature(int k, double half, std::mt19937_64& rng) {
  const Eigen::Vector3d anchor = random_in_box(rng, half);
  const Eigen::Vector3d d = random_unit(rng);
  if (k == 1) return AffineSubspace::line(d, anchor);
  Eigen::Vector3d e = random_unit(rng);
  while (d.cross(e).norm() < 0.1) e = random_unit(rng);
  return AffineSubspace::plane(d, e, anchor);
}

inline AffineSubspace perturb(const AffineSubspace& s, double angular, double positional,
                              std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, positional > 0.0 ? positional : 1.0);
  Eigen::Vector3d anchor = s.displacement();
  if (positional > 0.0) anchor += Eigen::Vector3d(n(rng), n(rng), n(rng));
  if (s.dim() == 1) return AffineSubspace::line(tilt(s.basis().col(0), angular, rng), anchor);
  const Eigen::Vector3d u = s.basis().col(0), v = s.basis().col(1);
  const Eigen::Vector3d normal = u.cross(v);
  const Eigen::Vector3d tilted = tilt(normal, angular, rng);
  // Carry the basis along with the normal.
  const Eigen::Matrix3d r = Eigen::Quaterniond::FromTwoVectors(normal, tilted).toRotationMatrix();
  return AffineSubspace::plane(r * u, r * v, anchor);
}

inline std::vector<bool> outlier_positions(std::size_t n, double ratio, std::mt19937_64& rng) {
  const auto n_out = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<bool> inlier(n, true);
  for (std::size_t i = 0; i < n_out; ++i) inlier[idx[i]] = false;
  return inlier;
}

inline Eigen::Vector2d random_pixel(const CameraModel& cam, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ux(0.0, cam.width), uy(0.0, cam.height);
  const double x = ux(rng), y = uy(rng);
  return {x, y};
}

inline std::pair<Eigen::Vector2d, Eigen::Vector2d> random_segment(const CameraModel& cam,
                                                                  std::mt19937_64& rng) {
  while (true) {
    const Eigen::Vector2d a = random_pixel(cam, rng);
    const Eigen::Vector2d b = random_pixel(cam, rng);
    if ((a - b).norm() >= 20.0) return {a, b};
  }
}

inline Scene generate_camera_scene(const SceneConfig& cfg, std::mt19937_64& rng) {
  Scene scene;
  const Eigen::Matrix3d r = random_rotation(rng);
  const Eigen::Vector3d t = random_in_box(rng, cfg.translation_halfside);
  scene.ground_truth = RigidTransform::from(r, t);
  scene.inlier_mask = outlier_positions(cfg.n_pairs, cfg.outlier_ratio, rng);
  const auto& cam = cfg.camera;
  std::uniform_real_distribution<double> depth(cfg.min_depth, cfg.max_depth);
  std::normal_distribution<double> px(0.0, cfg.pixel_sigma > 0.0 ? cfg.pixel_sigma : 1.0);

  for (std::size_t i = 0; i < cfg.n_pairs; ++i) {
    const auto [p1, p2] = random_segment(cam, rng);
    auto point = [&](const Eigen::Vector2d& p, double z) {
      return Eigen::Vector3d(z * (p.x() - cam.principal_point.x()) / cam.focal,
                             z * (p.y() - cam.principal_point.y()) / cam.focal, z);
    };
    const double z1 = depth(rng), z2 = depth(rng);
    const Eigen::Vector3d x1 = r * point(p1, z1) + t;
    const Eigen::Vector3d x2 = r * point(p2, z2) + t;
    AffineSubspace target = AffineSubspace::line(x2 - x1, x1);

    AffineSubspace source;
    if (scene.inlier_mask[i]) {
      Eigen::Vector2d q1 = p1, q2 = p2;
      if (cfg.pixel_sigma > 0.0) {
        do {
          q1 = p1 + Eigen::Vector2d(px(rng), px(rng));
          q2 = p2 + Eigen::Vector2d(px(rng), px(rng));
        } while ((q1 - q2).norm() < 1.0);
      }
      source = backproject_line(cam, q1, q2);
    } else {
      const auto [o1, o2] = random_segment(cam, rng);
      source = backproject_line(cam, o1, o2);
    }
    scene.pairs.push_back(make_feature_pair(FeatureKind::LinePlane, std::move(target),
                                            std::move(source), i));
  }
  return scene;
}

}  // namespace detail

/// Targets live in the world frame, sources are the perturbed targets moved
/// by the inverse ground truth, so T_gt·source ≈ target for every inlier.
/// Outliers replace the source with a fresh random feature.
inline Scene generate_scene(const SceneConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.rng_seed);
  if (cfg.feature_kind == FeatureKind::LinePlane && cfg.camera_protocol) {
    return detail::generate_camera_scene(cfg, rng);
  }

  Scene scene;
  const Eigen::Matrix3d r = random_rotation(rng);
  const Eigen::Vector3d t = random_in_box(rng, cfg.translation_halfside);
  scene.ground_truth = RigidTransform::from(r, t);
  const RigidTransform inv = scene.ground_truth.inverse();
  scene.inlier_mask = detail::outlier_positions(cfg.n_pairs, cfg.outlier_ratio, rng);
  const auto [kt, ks] = kind_dims(cfg.feature_kind);

  for (std::size_t i = 0; i < cfg.n_pairs; ++i) {
    AffineSubspace target = detail::random_feature(kt, cfg.scene_halfside, rng);
    AffineSubspace source;
    if (scene.inlier_mask[i]) {
      AffineSubspace moved = detail::perturb(target, cfg.angular_sigma, cfg.noise_sigma, rng);
      if (ks == 2 && kt == 1) {
        // Widen the line into a plane containing it.
        const Eigen::Vector3d d = moved.basis().col(0);
        Eigen::Vector3d e = random_unit(rng);
        while (d.cross(e).norm() < 0.1) e = random_unit(rng);
        moved = AffineSubspace::plane(d, e, moved.displacement());
      }
      source = apply_transform(inv, moved);
    } else {
      source = detail::random_feature(ks, cfg.scene_halfside, rng);
    }
    scene.pairs.push_back(
        make_feature_pair(cfg.feature_kind, std::move(target), std::move(source), i));
  }
  return scene;
}

/// Angle of R̂ᵀR_gt in degrees.
inline double rotation_error(const Eigen::Matrix3d& r_hat, const Eigen::Matrix3d& r_gt) {
  // Same angle as arccos((tr − 1)/2), without its loss of precision near 0° and 180°.
  const Eigen::Matrix3d d = r_hat.transpose() * r_gt;
  const Eigen::Vector3d axis(d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1));
  return rad2deg(std::atan2(0.5 * axis.norm(), 0.5 * (d.trace() - 1.0)));
}

struct TranslationError {
  double value = 0.0;
  /// ‖t_gt‖ = 0: value is the absolute norm ‖t̂‖ instead of a percentage.
  bool absolute = false;
};

inline TranslationError translation_error(const Eigen::Vector3d& t_hat, const Eigen::Vector3d& t_gt) {
  const double gt = t_gt.norm();
  if (gt == 0.0) return {t_hat.norm(), true};
  return {100.0 * (t_hat - t_gt).norm() / gt, false};
}

// ---------------------------------------------------------------------------
// Correspondence-free scenes

struct LineMapScene {
  std::vector<AffineSubspace> map;
  std::vector<AffineSubspace> query;
  /// query index → map index
  std::vector<std::size_t> truth;
  RigidTransform ground_truth = RigidTransform::identity(3);
};

inline std::vector<AffineSubspace> generate_line_map(std::size_t n, double halfside,
                                                     std::mt19937_64& rng) {
  std::vector<AffineSubspace> map;
  map.reserve(n);
  for (std::size_t i = 0; i < n; ++i) map.push_back(detail::random_feature(1, halfside, rng));
  return map;
}

/// A random subset of the map, perturbed, moved by the inverse ground truth
/// and shuffled.
inline LineMapScene generate_line_map_scene(std::size_t map_size, std::size_t query_size,
                                            double angular_sigma, double noise_sigma,
                                            double halfside, double translation_halfside,
                                            std::uint64_t seed) {
  if (query_size > map_size || query_size == 0) throw ConfigError("need 0 < query size <= map size");
  std::mt19937_64 rng(seed);
  LineMapScene s;
  s.map = generate_line_map(map_size, halfside, rng);
  s.ground_truth = RigidTransform::from(random_rotation(rng), random_in_box(rng, translation_halfside));
  const RigidTransform inv = s.ground_truth.inverse();
  std::vector<std::size_t> idx(map_size);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(query_size);
  for (std::size_t m : idx) {
    s.query.push_back(apply_transform(inv, detail::perturb(s.map[m], angular_sigma, noise_sigma, rng)));
    s.truth.push_back(m);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Benchmark

struct BenchConfig {
  SceneConfig scene;
  SolverConfig solver;
  std::vector<double> ratios{0.0, 0.4, 0.8};
  int repeats = 5;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct BenchRow {
  double ratio = 0.0;
  int repeat = 0;
  double rot_err_deg = 0.0;
  double trans_err_pct = 0.0;
  std::size_t inliers_found = 0;
  double wall_ms = 0.0;
  /// Every ground-truth inlier is among the found inliers.
  bool all_inliers_recovered = false;
  /// Solver threw (e.g. no inliers); errors are then NaN.
  bool failed = false;
};

struct BenchSummary {
  double ratio = 0.0;
  double median_rot_err_deg = 0.0;
  double median_trans_err_pct = 0.0;
  double recovered_fraction = 0.0;
  double median_wall_ms = 0.0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::vector<BenchSummary> summary;
};

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end(), [](double a, double b) {
    // NaN sorts last.
    if (std::isnan(a)) return false;
    if (std::isnan(b)) return true;
    return a < b;
  });
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

/// Seed of one benchmark run, derived from the base seed only.
inline std::uint64_t run_seed(std::uint64_t base, std::size_t ratio_index, int repeat) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(ratio_index), static_cast<std::uint32_t>(repeat)};
  std::uint32_t parts[2];
  seq.generate(parts, parts + 2);
  return (static_cast<std::uint64_t>(parts[0]) << 32) | parts[1];
}

inline BenchRow run_single(const BenchConfig& cfg, std::size_t ratio_index, int repeat) {
  SceneConfig sc = cfg.scene;
  sc.outlier_ratio = cfg.ratios[ratio_index];
  sc.rng_seed = run_seed(cfg.seed, ratio_index, repeat);
  const Scene scene = generate_scene(sc);

  BenchRow row;
  row.ratio = sc.outlier_ratio;
  row.repeat = repeat;
  const auto start = std::chrono::steady_clock::now();
  try {
    SolverConfig solver = cfg.solver;
    solver.rng_seed = sc.rng_seed;
    const auto res = register_with_correspondences(scene.pairs, solver);
    row.rot_err_deg = rotation_error(res.transform.rotation3(), scene.ground_truth.rotation3());
    row.trans_err_pct =
        translation_error(res.transform.translation3(), scene.ground_truth.translation3()).value;
    row.inliers_found = res.inliers.size();
    std::vector<bool> found(scene.pairs.size(), false);
    for (std::size_t i : res.inliers) found[i] = true;
    row.all_inliers_recovered = true;
    for (std::size_t i = 0; i < found.size(); ++i) {
      if (scene.inlier_mask[i] && !found[i]) row.all_inliers_recovered = false;
    }
  } catch (const Error&) {
    row.failed = true;
    row.rot_err_deg = row.trans_err_pct = std::numeric_limits<double>::quiet_NaN();
  }
  row.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return row;
}

/// Runs `repeats` scenes per outlier ratio. Rows come out ordered by ratio,
/// then repeat, whatever the thread count.
inline BenchReport run_benchmark(const BenchConfig& cfg) {
  cfg.scene.validate();
  cfg.solver.validate();
  if (cfg.repeats < 1) throw ConfigError("repeats must be >= 1");
  if (cfg.ratios.empty()) throw ConfigError("need at least one outlier ratio");
  if (cfg.threads < 1) throw ConfigError("threads must be >= 1");
  for (double r : cfg.ratios) {
    if (!(r >= 0.0 && r < 1.0)) throw ConfigError("outlier ratios must be in [0, 1)");
  }

  const std::size_t total = cfg.ratios.size() * static_cast<std::size_t>(cfg.repeats);
  BenchReport report;
  report.rows.resize(total);
  auto job = [&](std::size_t k) {
    report.rows[k] = run_single(cfg, k / cfg.repeats, static_cast<int>(k % cfg.repeats));
  };
  if (cfg.threads == 1) {
    for (std::size_t k = 0; k < total; ++k) job(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::future<void>> workers;
    for (int w = 0; w < cfg.threads; ++w) {
      workers.push_back(std::async(std::launch::async, [&] {
        for (std::size_t k = next++; k < total; k = next++) job(k);
      }));
    }
    for (auto& f : workers) f.get();
  }

  for (std::size_t ri = 0; ri < cfg.ratios.size(); ++ri) {
    std::vector<double> rot, trans, wall;
    std::size_t recovered = 0;
    for (int rep = 0; rep < cfg.repeats; ++rep) {
      const auto& row = report.rows[ri * cfg.repeats + rep];
      rot.push_back(row.rot_err_deg);
      trans.push_back(row.trans_err_pct);
      wall.push_back(row.wall_ms);
      if (row.all_inliers_recovered) ++recovered;
    }
    report.summary.push_back({cfg.ratios[ri], median(rot), median(trans),
                              static_cast<double>(recovered) / cfg.repeats, median(wall)});
  }
  return report;
}

}  // namespace graff
