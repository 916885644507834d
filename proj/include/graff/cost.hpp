#pragma once

// Residuals for registering paired 3D lines and planes. The rotation-only
// part f and the rotation+translation part g of each pair are exposed
// separately so that the inlier search and the least-squares refiner read
// the same numbers.

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "graff/errors.hpp"
#include "graff/manifold.hpp"

namespace graff {

enum class FeatureKind { LineLine, LinePlane, PlanePlane };

inline const char* to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::LineLine: return "l2l";
    case FeatureKind::LinePlane: return "l2p";
    case FeatureKind::PlanePlane: return "p2p";
  }
  return "?";
}

inline FeatureKind parse_feature_kind(const std::string& s) {
  if (s == "l2l") return FeatureKind::LineLine;
  if (s == "l2p") return FeatureKind::LinePlane;
  if (s == "p2p") return FeatureKind::PlanePlane;
  throw ConfigError("unknown feature kind '" + s + "' (expected l2l, l2p or p2p)");
}

/// Subspace dimensions (target, source) implied by a kind.
inline std::pair<int, int> kind_dims(FeatureKind k) {
  switch (k) {
    case FeatureKind::LineLine: return {1, 1};
    case FeatureKind::LinePlane: return {1, 2};
    case FeatureKind::PlanePlane: return {2, 2};
  }
  return {0, 0};
}

/// One target/source correspondence. The source is the feature that gets
/// moved by the transform.
struct FeaturePair {
  FeatureKind kind = FeatureKind::LineLine;
  AffineSubspace target;
  AffineSubspace source;
  std::size_t index = 0;
};

inline FeaturePair make_feature_pair(FeatureKind kind, AffineSubspace target, AffineSubspace source,
                             std::size_t index = 0) {
  const auto [kt, ks] = kind_dims(kind);
  if (target.ambient_dim() != 3 || source.ambient_dim() != 3) {
    throw MixedAmbientDims("feature pairs live in R^3");
  }
  if (target.dim() != kt || source.dim() != ks) {
    throw InvalidFeaturePair(std::string("kind ") + to_string(kind) + " needs dims (" +
                             std::to_string(kt) + "," + std::to_string(ks) + "), got (" +
                             std::to_string(target.dim()) + "," + std::to_string(source.dim()) +
                             ")");
  }
  return {kind, std::move(target), std::move(source), index};
}

/// Unit normal of a 3D plane: normalized cross product of its basis columns.
inline Eigen::Vector3d plane_normal(const AffineSubspace& plane) {
  const Eigen::Vector3d u = plane.basis().col(0);
  const Eigen::Vector3d v = plane.basis().col(1);
  return u.cross(v).normalized();
}

/// Fixed-size copy of a pair, laid out for the inner loops of the solvers.
struct PairGeometry {
  FeatureKind kind = FeatureKind::LineLine;
  /// Direction (lines) or normal (PlanePlane) of the target.
  Eigen::Vector3d target_axis = Eigen::Vector3d::Zero();
  /// Direction (LineLine) or normal (planes) of the source.
  Eigen::Vector3d source_axis = Eigen::Vector3d::Zero();
  /// Orthonormal basis columns of the source; only the first `source_cols` are used.
  Eigen::Matrix<double, 3, 2> source_basis = Eigen::Matrix<double, 3, 2>::Zero();
  int source_cols = 1;
  Eigen::Vector3d source_disp = Eigen::Vector3d::Zero();
  /// Target displacement lifted onto the unit sphere of R⁴.
  Eigen::Vector4d target_tilde = Eigen::Vector4d::UnitW();
};

inline PairGeometry geometry(const FeaturePair& p) {
  PairGeometry g;
  g.kind = p.kind;
  g.source_cols = p.source.dim();
  g.source_basis.leftCols(g.source_cols) = p.source.basis();
  g.source_disp = p.source.displacement();
  g.target_tilde = tilde(p.target.displacement());
  switch (p.kind) {
    case FeatureKind::LineLine:
      g.target_axis = p.target.basis().col(0);
      g.source_axis = p.source.basis().col(0);
      break;
    case FeatureKind::LinePlane:
      g.target_axis = p.target.basis().col(0);
      g.source_axis = plane_normal(p.source);
      break;
    case FeatureKind::PlanePlane:
      g.target_axis = plane_normal(p.target);
      g.source_axis = plane_normal(p.source);
      break;
  }
  return g;
}

inline std::vector<PairGeometry> geometry(const std::vector<FeaturePair>& pairs) {
  std::vector<PairGeometry> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(geometry(p));
  return out;
}

/// Residual vectors of one pair under (R, t).
///
/// f: target basis vector minus its projection onto the rotated source
/// (for PlanePlane the normals stand in for the bases). g: tilde target
/// displacement minus its projection onto the embedded transformed source.
/// Templated on the scalar so the refiner can differentiate it.
template <typename T>
void pair_residuals(const PairGeometry& g, const Eigen::Matrix<T, 3, 3>& r,
                    const Eigen::Matrix<T, 3, 1>& t, Eigen::Matrix<T, 3, 1>* f_res,
                    Eigen::Matrix<T, 4, 1>* g_res) {
  using V3 = Eigen::Matrix<T, 3, 1>;
  using V4 = Eigen::Matrix<T, 4, 1>;
  V3 u[2];
  for (int j = 0; j < g.source_cols; ++j) u[j] = r * g.source_basis.col(j).template cast<T>();

  if (f_res) {
    const V3 a = g.target_axis.template cast<T>();
    if (g.kind == FeatureKind::LinePlane) {
      *f_res = u[0] * u[0].dot(a) + u[1] * u[1].dot(a) - a;
    } else {
      const V3 q = r * g.source_axis.template cast<T>();
      *f_res = q * q.dot(a) - a;
    }
  }

  if (g_res) {
    V3 disp = r * g.source_disp.template cast<T>() + t;
    for (int j = 0; j < g.source_cols; ++j) disp -= u[j] * u[j].dot(t);
    using std::sqrt;
    const T scale = T(1) / sqrt(T(1) + disp.squaredNorm());
    V4 w;
    w << disp * scale, scale;
    const V4 c = g.target_tilde.template cast<T>();
    V4 proj = w * w.dot(c);
    for (int j = 0; j < g.source_cols; ++j) {
      V4 ub;
      ub << u[j], T(0);
      proj += ub * ub.dot(c);
    }
    *g_res = proj - c;
  }
}

/// Angle (radians) behind the rotation residual; see rotation_residual.
inline double rotation_angle(const PairGeometry& g, const Eigen::Matrix3d& r) {
  switch (g.kind) {
    case FeatureKind::LineLine:
    case FeatureKind::PlanePlane:
      return line_angle(r * g.source_axis, g.target_axis);
    case FeatureKind::LinePlane: {
      const Eigen::Vector3d u0 = r * g.source_basis.col(0);
      const Eigen::Vector3d u1 = r * g.source_basis.col(1);
      const Eigen::Vector3d& d = g.target_axis;
      const Eigen::Vector3d p = u0 * u0.dot(d) + u1 * u1.dot(d);
      const double pn = p.norm();
      if (pn < 1e-12) return kPi / 2;
      return std::atan2((d - p).norm(), pn);
    }
  }
  return 0.0;
}

/// Squared geodesic angle driving the inlier test: line-line angle,
/// line-plane angle, or normal-normal angle. In radians².
inline double rotation_residual(const PairGeometry& g, const Eigen::Matrix3d& r) {
  const double a = rotation_angle(g, r);
  return a * a;
}

inline double rotation_residual(const FeaturePair& p, const Eigen::Matrix3d& r) {
  return rotation_residual(geometry(p), r);
}

inline double translation_residual(const PairGeometry& g, const Eigen::Matrix3d& r,
                                   const Eigen::Vector3d& t) {
  Eigen::Vector4d res;
  pair_residuals<double>(g, r, t, nullptr, &res);
  return res.squaredNorm();
}

/// ‖P c̃ − c̃‖² with c̃ the target's tilde displacement and P the projector
/// onto the embedded transformed source.
inline double translation_residual(const FeaturePair& p, const RigidTransform& tr) {
  return translation_residual(geometry(p), tr.rotation3(), tr.translation3());
}

struct CostBreakdown {
  std::vector<double> f_terms;
  std::vector<double> g_terms;
  double total = 0.0;

  double f_sum() const {
    double s = 0.0;
    for (double v : f_terms) s += v;
    return s;
  }
  double g_sum() const {
    double s = 0.0;
    for (double v : g_terms) s += v;
    return s;
  }
};

inline CostBreakdown total_cost(const std::vector<PairGeometry>& pairs, const Eigen::Matrix3d& r,
                                const Eigen::Vector3d& t) {
  CostBreakdown out;
  out.f_terms.reserve(pairs.size());
  out.g_terms.reserve(pairs.size());
  for (const auto& g : pairs) {
    Eigen::Vector3d fr;
    Eigen::Vector4d gr;
    pair_residuals<double>(g, r, t, &fr, &gr);
    out.f_terms.push_back(fr.squaredNorm());
    out.g_terms.push_back(gr.squaredNorm());
  }
  out.total = out.f_sum() + out.g_sum();
  return out;
}

/// Sum over pairs of the basis-spanning residuals. For PlanePlane the f
/// part compares normals instead of summing two basis-column terms.
inline CostBreakdown total_cost(const std::vector<FeaturePair>& pairs, const RigidTransform& tr) {
  if (tr.dim() != 3) throw MixedAmbientDims("total_cost: transform must act on R^3");
  for (const auto& p : pairs) {
    if (p.target.ambient_dim() != 3 || p.source.ambient_dim() != 3) {
      throw MixedAmbientDims("total_cost: pair " + std::to_string(p.index) + " is not in R^3");
    }
  }
  return total_cost(geometry(pairs), tr.rotation3(), tr.translation3());
}

/// Generic residual pair (f, g) for target ∈ Graff(k,n), source ∈ Graff(l,n),
/// k ≤ l: f = Σⱼ‖P_{R·B} aⱼ − aⱼ‖², g = ‖P_{z(T·source)} c̃ − c̃‖².
inline std::pair<double, double> affine_residuals(const AffineSubspace& target,
                                                  const AffineSubspace& source,
                                                  const RigidTransform& tr) {
  if (target.ambient_dim() != source.ambient_dim()) {
    throw MixedAmbientDims("affine_residuals: ambient dimensions differ");
  }
  if (target.dim() > source.dim()) {
    throw DimensionMismatch("affine_residuals: target dimension exceeds source dimension");
  }
  const AffineSubspace moved = apply_transform(tr, source);
  const Matrix p_lin = projection_matrix(moved.basis());
  double f = 0.0;
  for (Eigen::Index j = 0; j < target.basis().cols(); ++j) {
    const Vector a = target.basis().col(j);
    f += (p_lin * a - a).squaredNorm();
  }
  const Matrix y = embed(moved).matrix;
  const Vector c = tilde(target.displacement());
  const double g = (y * (y.transpose() * c) - c).squaredNorm();
  return {f, g};
}

}  // namespace graff
