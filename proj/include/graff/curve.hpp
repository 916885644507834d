#pragma once

// Lengths of straight parameter-space paths between 2D lines ax + by + c = 0
// once mapped onto Gr(2, 3) through their projection matrices.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>

#include "graff/errors.hpp"
#include "graff/manifold.hpp"

namespace graff {

struct Line2DParams {
  Eigen::Vector3d v = Eigen::Vector3d::Zero();  ///< (a, b, c)
};

/// Projection matrix of the embedded line; equals I − wwᵀ/‖w‖² with w = (a, b, −c).
inline Eigen::Matrix3d line2d_projection(const Eigen::Vector3d& v) {
  const double a = v(0), b = v(1), c = v(2);
  const double s = a * a + b * b + c * c;
  if (!(std::sqrt(s) > 0.0)) throw ZeroVector("line parameters must not all be zero");
  Eigen::Matrix3d p;
  p << b * b + c * c, -a * b, a * c,
       -a * b, c * c + a * a, b * c,
       a * c, b * c, a * a + b * b;
  return p / s;
}

inline Eigen::Matrix3d line2d_projection(const Line2DParams& l) { return line2d_projection(l.v); }

/// dφ/dt along v(t) with v̇ = dv, from the entrywise partial derivatives.
inline Eigen::Matrix3d line2d_velocity(const Eigen::Vector3d& v, const Eigen::Vector3d& dv) {
  const double a = v(0), b = v(1), c = v(2);
  const double s = a * a + b * b + c * c;
  if (!(std::sqrt(s) > 0.0)) throw ZeroVector("line parameters must not all be zero");
  const double k = 1.0 / (s * s);
  const Eigen::Vector3d d11(-2 * a * (b * b + c * c), 2 * a * a * b, 2 * a * a * c);
  const Eigen::Vector3d d12(-b * (b * b + c * c - a * a), -a * (a * a + c * c - b * b), 2 * a * b * c);
  const Eigen::Vector3d d13(c * (b * b + c * c - a * a), -2 * a * b * c, a * (a * a + b * b - c * c));
  const Eigen::Vector3d d22(2 * a * b * b, -2 * b * (a * a + c * c), 2 * b * b * c);
  const Eigen::Vector3d d23(-2 * a * b * c, c * (a * a + c * c - b * b), b * (a * a + b * b - c * c));
  const Eigen::Vector3d d33(2 * a * c * c, 2 * b * c * c, -2 * c * (a * a + b * b));
  Eigen::Matrix3d m;
  m(0, 0) = d11.dot(dv);
  m(0, 1) = m(1, 0) = d12.dot(dv);
  m(0, 2) = m(2, 0) = d13.dot(dv);
  m(1, 1) = d22.dot(dv);
  m(1, 2) = m(2, 1) = d23.dot(dv);
  m(2, 2) = d33.dot(dv);
  return k * m;
}

/// Central-difference velocity of t ↦ φ(v1 + t(v2 − v1)).
inline Eigen::Matrix3d line2d_velocity_fd(const Eigen::Vector3d& v1, const Eigen::Vector3d& v2,
                                          double t, double h = 1e-6) {
  const Eigen::Vector3d dv = v2 - v1;
  return (line2d_projection(v1 + (t + h) * dv) - line2d_projection(v1 + (t - h) * dv)) / (2 * h);
}

enum class VelocityMethod { FiniteDifference, ClosedForm };

/// Left Riemann sum of √(½ tr φ̇²) over N uniform samples of t ∈ [0, 1].
inline double curve_length(const Eigen::Vector3d& v1, const Eigen::Vector3d& v2, int n,
                           VelocityMethod method = VelocityMethod::FiniteDifference) {
  if (n < 10) throw ConfigError("curve_length needs at least 10 samples");
  if (!(v1.norm() > 0.0) || !(v2.norm() > 0.0)) throw ZeroVector("endpoint parameters must be nonzero");
  const Eigen::Vector3d dv = v2 - v1;
  // Closest approach of the segment to the origin.
  const double denom = dv.squaredNorm();
  const double t_min = denom > 0.0 ? std::clamp(-v1.dot(dv) / denom, 0.0, 1.0) : 0.0;
  if ((v1 + t_min * dv).norm() < 1e-9) throw PathThroughZero("parameter path passes through zero");

  const double dt = 1.0 / n;
  double length = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t = i * dt;
    const Eigen::Vector3d v = v1 + t * dv;
    if (v.norm() < 1e-9) throw PathThroughZero("parameter path passes through zero");
    const Eigen::Matrix3d vel = method == VelocityMethod::FiniteDifference
                                    ? line2d_velocity_fd(v1, v2, t)
                                    : line2d_velocity(v, dv);
    length += std::sqrt(std::max(0.0, 0.5 * (vel * vel).trace())) * dt;
  }
  return length;
}

/// Geodesic distance on Gr(2, 3) between the embedded lines.
inline double line2d_geodesic(const Eigen::Vector3d& v1, const Eigen::Vector3d& v2) {
  auto span_of = [](const Eigen::Vector3d& v) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(line2d_projection(v));
    return Matrix(es.eigenvectors().rightCols<2>());
  };
  return grassmann_distance(span_of(v1), span_of(v2));
}

struct GeodesicReport {
  double l_plus = 0.0;   ///< path v1 → v2
  double l_minus = 0.0;  ///< path v1 → −v2; NaN when that path crosses zero
  double geodesic = 0.0;
  double sum_minus_pi = 0.0;
  double min_minus_geodesic = 0.0;
};

inline GeodesicReport closed_geodesic_report(const Eigen::Vector3d& v1, const Eigen::Vector3d& v2,
                                             int n) {
  GeodesicReport r;
  r.l_plus = curve_length(v1, v2, n);
  // v2 ∥ v1: the sign-flipped path crosses the origin and has no length.
  try {
    r.l_minus = curve_length(v1, -v2, n);
  } catch (const PathThroughZero&) {
    r.l_minus = std::numeric_limits<double>::quiet_NaN();
  }
  r.geodesic = line2d_geodesic(v1, v2);
  r.sum_minus_pi = r.l_plus + r.l_minus - kPi;
  r.min_minus_geodesic = std::fmin(r.l_plus, r.l_minus) - r.geodesic;
  return r;
}

}  // namespace graff
