#pragma once

#include <Eigen/Dense>

#include <random>

#include "graff/manifold.hpp"

namespace graff::test {

inline Eigen::Vector3d unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Vector3d v(n(rng), n(rng), n(rng));
  return v.normalized();
}

inline Eigen::Matrix3d rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  return q.normalized().toRotationMatrix();
}

inline Eigen::Vector3d box(std::mt19937_64& rng, double half) {
  std::uniform_real_distribution<double> u(-half, half);
  Eigen::Vector3d v;
  for (int i = 0; i < 3; ++i) v(i) = u(rng);
  return v;
}

inline RigidTransform transform(std::mt19937_64& rng, double half = 3.0) {
  return RigidTransform::from(rotation(rng), box(rng, half));
}

/// Random line (k = 1) or plane (k = 2) in R³.
inline AffineSubspace subspace(int k, std::mt19937_64& rng, double half = 3.0) {
  if (k == 1) return AffineSubspace::line(unit(rng), box(rng, half));
  if (k == 2) return AffineSubspace::plane(unit(rng), unit(rng), box(rng, half));
  return AffineSubspace::point(Vector(box(rng, half)));
}

/// Random point lying on s.
inline Eigen::Vector3d point_on(const AffineSubspace& s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  Eigen::Vector3d x = s.displacement();
  for (int j = 0; j < s.dim(); ++j) x += u(rng) * Eigen::Vector3d(s.basis().col(j));
  return x;
}

}  // namespace graff::test
