#pragma once

// Affine subspaces of R^n as points of a higher-dimensional Grassmannian,
// the geodesic (principal-angle) metric between them, and the rigid-motion
// action that moves them around.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "graff/errors.hpp"

namespace graff {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace detail {

inline void require_same_rows(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) {
    throw DimensionMismatch(std::string(what) + ": " + std::to_string(a) + " vs " +
                            std::to_string(b) + " rows");
  }
}

/// Largest deviation of QᵀQ from the identity.
inline double orthonormality_drift(const Matrix& q) {
  if (q.cols() == 0) return 0.0;
  return (q.transpose() * q - Matrix::Identity(q.cols(), q.cols())).cwiseAbs().maxCoeff();
}

/// One modified Gram-Schmidt sweep, in place. Column order and the direction
/// of the first column are preserved.
inline void gram_schmidt_pass(Matrix& q) {
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    for (Eigen::Index i = 0; i < j; ++i) {
      q.col(j) -= q.col(i).dot(q.col(j)) * q.col(i);
    }
    q.col(j).normalize();
  }
}

}  // namespace detail

/// Orthonormal basis spanning the same subspace as the columns of `raw_basis`.
///
/// Columns are first scaled to unit length; the result is rejected when the
/// smallest singular value of the scaled matrix is at or below 1e-8.
inline Matrix orthonormalize(const Matrix& raw_basis) {
  Matrix q = raw_basis;
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    const double len = q.col(j).norm();
    if (!(len > 0.0) || !std::isfinite(len)) {
      throw RankDeficient("column " + std::to_string(j) + " has zero or non-finite length");
    }
    q.col(j) /= len;
  }
  if (q.cols() > q.rows()) {
    throw RankDeficient("more basis columns than ambient dimensions");
  }
  if (q.cols() > 0) {
    Eigen::JacobiSVD<Matrix> svd(q);
    const double smallest = svd.singularValues()(q.cols() - 1);
    if (!(smallest > 1e-8)) {
      throw RankDeficient("basis has numerical rank below " + std::to_string(q.cols()));
    }
  }
  // Twice is enough for full working precision.
  detail::gram_schmidt_pass(q);
  detail::gram_schmidt_pass(q);
  return q;
}

/// c₀ = (I − AAᵀ)c: the unique displacement orthogonal to span(A).
inline Vector canonical_displacement(const Matrix& basis, const Vector& anchor) {
  detail::require_same_rows(basis.rows(), anchor.size(), "canonical_displacement");
  if (basis.cols() == 0) return anchor;
  return anchor - basis * (basis.transpose() * anchor);
}

/// P = UUᵀ.
inline Matrix projection_matrix(const Matrix& basis) { return basis * basis.transpose(); }

/// A k-dimensional affine subspace of Rⁿ stored as an orthonormal basis of
/// its linear part plus the displacement orthogonal to it. k = 0 is a point.
class AffineSubspace {
 public:
  AffineSubspace() = default;

  /// Accepts any spanning set and any anchor point on the subspace.
  static AffineSubspace from_anchor(const Matrix& raw_basis, const Vector& anchor) {
    detail::require_same_rows(raw_basis.rows(), anchor.size(), "AffineSubspace");
    if (anchor.size() == 0) throw DimensionMismatch("AffineSubspace: empty ambient space");
    if (raw_basis.cols() >= raw_basis.rows()) {
      throw DimensionMismatch("AffineSubspace: need k < n");
    }
    Matrix basis = orthonormalize(raw_basis);
    Vector disp = canonical_displacement(basis, anchor);
    return AffineSubspace(std::move(basis), std::move(disp));
  }

  static AffineSubspace line(const Eigen::Vector3d& direction, const Eigen::Vector3d& anchor) {
    return from_anchor(Matrix(direction), Vector(anchor));
  }

  static AffineSubspace plane(const Eigen::Vector3d& u, const Eigen::Vector3d& v,
                              const Eigen::Vector3d& anchor) {
    Matrix b(3, 2);
    b << u, v;
    return from_anchor(b, Vector(anchor));
  }

  static AffineSubspace point(const Vector& x) { return from_anchor(Matrix(x.size(), 0), x); }

  /// Skips re-orthonormalization; the caller guarantees both invariants.
  static AffineSubspace from_canonical(Matrix basis, Vector displacement) {
    return AffineSubspace(std::move(basis), std::move(displacement));
  }

  int ambient_dim() const { return static_cast<int>(displacement_.size()); }
  int dim() const { return static_cast<int>(basis_.cols()); }
  const Matrix& basis() const { return basis_; }
  const Vector& displacement() const { return displacement_; }

 private:
  AffineSubspace(Matrix basis, Vector displacement)
      : basis_(std::move(basis)), displacement_(std::move(displacement)) {}

  Matrix basis_;
  Vector displacement_;
};

/// The (n+1)×(k+1) orthonormal matrix [A b₀/s; 0 1/s], s = √(1+‖b₀‖²).
struct EmbeddedBasis {
  Matrix matrix;
};

/// Appends 1 and normalizes: x ↦ (x, 1)/√(1+‖x‖²).
inline Vector tilde(const Vector& x) {
  Vector y(x.size() + 1);
  y << x, 1.0;
  return y / std::sqrt(1.0 + x.squaredNorm());
}

/// Appends 0: x ↦ (x, 0).
inline Vector bar(const Vector& x) {
  Vector y(x.size() + 1);
  y << x, 0.0;
  return y;
}

inline EmbeddedBasis embed(const AffineSubspace& s) {
  const auto n = s.ambient_dim();
  const auto k = s.dim();
  Matrix y = Matrix::Zero(n + 1, k + 1);
  y.topLeftCorner(n, k) = s.basis();
  y.col(k) = tilde(s.displacement());
  return {std::move(y)};
}

/// Principal angles between span(ya) and span(yb), ascending, in radians:
/// θᵢ = arccos σᵢ(yaᵀyb). Requires cols(ya) ≤ cols(yb).
inline std::vector<double> principal_angles(const Matrix& ya, const Matrix& yb) {
  detail::require_same_rows(ya.rows(), yb.rows(), "principal_angles");
  if (ya.cols() > yb.cols()) {
    throw DimensionMismatch("principal_angles: first argument must have the smaller dimension");
  }
  std::vector<double> angles;
  if (ya.cols() == 0) return angles;
  const Matrix m = ya.transpose() * yb;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& cosines = svd.singularValues();  // descending
  // arccos loses half the digits near 0; small angles come from the sines,
  // the singular values of the part of ya outside span(yb), instead.
  const Matrix residual = ya - yb * m.transpose();
  Eigen::JacobiSVD<Matrix> svd_sin(residual);
  const auto& sines = svd_sin.singularValues();  // descending
  const Eigen::Index k = ya.cols();
  angles.reserve(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) {
    const double c = i < cosines.size() ? std::clamp(cosines(i), 0.0, 1.0) : 0.0;
    if (c * c >= 0.5) {
      const double s = std::clamp(sines(k - 1 - i), 0.0, 1.0);
      angles.push_back(std::asin(s));
    } else {
      angles.push_back(std::acos(c));
    }
  }
  return angles;
}

inline std::vector<double> principal_angles(const EmbeddedBasis& a, const EmbeddedBasis& b) {
  return principal_angles(a.matrix, b.matrix);
}

/// Root-sum-square of the principal angles.
inline double grassmann_distance(const Matrix& ya, const Matrix& yb) {
  double sum = 0.0;
  for (double theta : principal_angles(ya, yb)) sum += theta * theta;
  return std::sqrt(sum);
}

inline double grassmann_distance(const EmbeddedBasis& a, const EmbeddedBasis& b) {
  return grassmann_distance(a.matrix, b.matrix);
}

/// Acute angle between the lines spanned by two nonzero vectors. Uses atan2
/// so that tiny angles keep full relative precision.
template <typename DerivedA, typename DerivedB>
double line_angle(const Eigen::MatrixBase<DerivedA>& u, const Eigen::MatrixBase<DerivedB>& v) {
  const double uu = u.squaredNorm();
  const double uv = u.dot(v);
  const double sin_part = (v - (uv / uu) * u).norm();
  const double cos_part = std::abs(uv) / std::sqrt(uu);
  return std::atan2(sin_part, cos_part);
}

// ---------------------------------------------------------------------------
// Rigid motions

/// Element of SE(n): x ↦ Rx + t.
struct RigidTransform {
  Matrix rotation;
  Vector translation;

  static RigidTransform identity(int n) {
    return {Matrix::Identity(n, n), Vector::Zero(n)};
  }

  static RigidTransform from(const Eigen::Matrix3d& r, const Eigen::Vector3d& t) {
    return {Matrix(r), Vector(t)};
  }

  int dim() const { return static_cast<int>(translation.size()); }

  Eigen::Matrix3d rotation3() const { return rotation; }
  Eigen::Vector3d translation3() const { return translation; }

  RigidTransform inverse() const {
    Matrix rt = rotation.transpose();
    Vector t = -(rt * translation);
    return {std::move(rt), std::move(t)};
  }

  /// Checks RᵀR = I and det R = +1.
  bool is_valid(double tol = 1e-9) const {
    if (rotation.rows() != rotation.cols() || rotation.rows() != translation.size()) return false;
    const auto n = rotation.rows();
    const double drift =
        (rotation.transpose() * rotation - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
    return drift <= tol && std::abs(rotation.determinant() - 1.0) <= tol;
  }
};

/// (T₁∘T₂)·x = T₁·(T₂·x).
inline RigidTransform compose(const RigidTransform& t1, const RigidTransform& t2) {
  return {t1.rotation * t2.rotation, t1.rotation * t2.translation + t1.translation};
}

inline Vector apply_transform_point(const RigidTransform& t, const Vector& x) {
  detail::require_same_rows(t.translation.size(), x.size(), "apply_transform_point");
  return t.rotation * x + t.translation;
}

/// T·(A + b₀) = R·A + (Rb₀ + R(I − AAᵀ)Rᵀt).
inline AffineSubspace apply_transform(const RigidTransform& t, const AffineSubspace& s) {
  detail::require_same_rows(t.translation.size(), s.displacement().size(), "apply_transform");
  detail::require_same_rows(t.rotation.rows(), s.basis().rows(), "apply_transform");
  const Matrix& a = s.basis();
  Matrix basis = t.rotation * a;
  if (detail::orthonormality_drift(basis) > 1e-12) detail::gram_schmidt_pass(basis);
  const Vector rt_t = t.rotation.transpose() * t.translation;
  const Vector perp = a.cols() == 0 ? rt_t : Vector(rt_t - a * (a.transpose() * rt_t));
  Vector disp = t.rotation * s.displacement() + t.rotation * perp;
  return AffineSubspace::from_canonical(std::move(basis), std::move(disp));
}

/// ‖(I − AAᵀ)(x − b₀)‖ ≤ tol.
inline bool contains_point(const AffineSubspace& s, const Vector& x, double tol) {
  detail::require_same_rows(s.displacement().size(), x.size(), "contains_point");
  const Vector rel = x - s.displacement();
  const Vector off = s.dim() == 0 ? rel : Vector(rel - s.basis() * (s.basis().transpose() * rel));
  return off.norm() <= tol;
}

// ---------------------------------------------------------------------------
// SO(3) helpers

inline Eigen::Matrix3d hat(const Eigen::Vector3d& w) {
  Eigen::Matrix3d m;
  m << 0.0, -w.z(), w.y(), w.z(), 0.0, -w.x(), -w.y(), w.x(), 0.0;
  return m;
}

/// Rodrigues' formula.
inline Eigen::Matrix3d so3_exp(const Eigen::Vector3d& w) {
  const double angle = w.norm();
  if (angle < 1e-12) return Eigen::Matrix3d::Identity() + hat(w);
  return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

inline Eigen::Vector3d so3_log(const Eigen::Matrix3d& r) {
  const Eigen::AngleAxisd aa(r);
  return aa.angle() * aa.axis();
}

inline Eigen::Matrix3d rot_x(double rad) {
  return Eigen::AngleAxisd(rad, Eigen::Vector3d::UnitX()).toRotationMatrix();
}
inline Eigen::Matrix3d rot_y(double rad) {
  return Eigen::AngleAxisd(rad, Eigen::Vector3d::UnitY()).toRotationMatrix();
}
inline Eigen::Matrix3d rot_z(double rad) {
  return Eigen::AngleAxisd(rad, Eigen::Vector3d::UnitZ()).toRotationMatrix();
}

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

}  // namespace graff
