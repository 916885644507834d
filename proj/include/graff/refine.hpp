#pragma once

// Levenberg-Marquardt refinement of a rigid transform over the pair
// residuals. Rotation is updated on the left through the exponential map,
// translation additively. Jacobians come from forward-mode autodiff of
// pair_residuals.

#include <Eigen/Dense>
#include <unsupported/Eigen/AutoDiff>

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "graff/cost.hpp"

namespace graff {

struct LmOptions {
  bool optimize_rotation = true;
  bool optimize_translation = true;
  /// Which residual blocks enter the objective.
  bool use_f = true;
  bool use_g = true;
  int max_iterations = 100;
  double gradient_tol = 1e-10;
  double step_tol = 1e-12;
};

struct LmReport {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;
  /// Objective after each accepted step, starting with the initial cost.
  std::vector<double> accepted_costs;
  std::string termination;
};

namespace detail {

using Jet6 = Eigen::AutoDiffScalar<Eigen::Matrix<double, 6, 1>>;

inline double lm_objective(std::span<const PairGeometry> pairs,
                           std::span<const std::size_t> subset, const Eigen::Matrix3d& r,
                           const Eigen::Vector3d& t, const LmOptions& opt) {
  double cost = 0.0;
  Eigen::Vector3d fr;
  Eigen::Vector4d gr;
  for (std::size_t i : subset) {
    pair_residuals<double>(pairs[i], r, t, opt.use_f ? &fr : nullptr, opt.use_g ? &gr : nullptr);
    if (opt.use_f) cost += fr.squaredNorm();
    if (opt.use_g) cost += gr.squaredNorm();
  }
  return cost;
}

/// Residual vector and its Jacobian w.r.t. (ω, δt) at ω = 0, δt = 0.
inline void lm_linearize(std::span<const PairGeometry> pairs, std::span<const std::size_t> subset,
                         const Eigen::Matrix3d& r0, const Eigen::Vector3d& t0,
                         const LmOptions& opt, Eigen::VectorXd& res, Eigen::MatrixXd& jac) {
  const int per_pair = (opt.use_f ? 3 : 0) + (opt.use_g ? 4 : 0);
  res.resize(static_cast<Eigen::Index>(subset.size()) * per_pair);
  jac.resize(res.size(), 6);

  Eigen::Matrix<Jet6, 3, 1> w, dt;
  for (int k = 0; k < 3; ++k) {
    w(k) = Jet6(0.0, 6, k);
    dt(k) = Jet6(0.0, 6, 3 + k);
  }
  Eigen::Matrix<Jet6, 3, 3> wx;
  wx << Jet6(0.0), -w(2), w(1), w(2), Jet6(0.0), -w(0), -w(1), w(0), Jet6(0.0);
  // Second-order truncation of exp; exact value and first derivative at 0.
  const Eigen::Matrix<Jet6, 3, 3> r =
      (Eigen::Matrix<Jet6, 3, 3>::Identity() + wx + Jet6(0.5) * (wx * wx)) * r0.cast<Jet6>();
  const Eigen::Matrix<Jet6, 3, 1> t = t0.cast<Jet6>() + dt;

  Eigen::Index row = 0;
  Eigen::Matrix<Jet6, 3, 1> fr;
  Eigen::Matrix<Jet6, 4, 1> gr;
  for (std::size_t i : subset) {
    pair_residuals<Jet6>(pairs[i], r, t, opt.use_f ? &fr : nullptr, opt.use_g ? &gr : nullptr);
    if (opt.use_f) {
      for (int k = 0; k < 3; ++k, ++row) {
        res(row) = fr(k).value();
        jac.row(row) = fr(k).derivatives().transpose();
      }
    }
    if (opt.use_g) {
      for (int k = 0; k < 4; ++k, ++row) {
        res(row) = gr(k).value();
        jac.row(row) = gr(k).derivatives().transpose();
      }
    }
  }
}

}  // namespace detail

/// Damped Gauss-Newton on Σ_{i∈subset} (‖fᵢ‖² + ‖gᵢ‖²). The returned cost
/// never exceeds the starting cost; every accepted step strictly lowers it.
inline LmReport refine_lm(std::span<const PairGeometry> pairs, std::span<const std::size_t> subset,
                          const Eigen::Matrix3d& r0, const Eigen::Vector3d& t0,
                          const LmOptions& opt = {}) {
  LmReport rep;
  rep.rotation = r0;
  rep.translation = t0;
  rep.initial_cost = detail::lm_objective(pairs, subset, r0, t0, opt);
  rep.final_cost = rep.initial_cost;
  rep.accepted_costs.push_back(rep.initial_cost);
  rep.termination = "max_iterations";

  std::vector<int> active;
  if (opt.optimize_rotation) active.insert(active.end(), {0, 1, 2});
  if (opt.optimize_translation) active.insert(active.end(), {3, 4, 5});
  if (subset.empty() || active.empty() || (!opt.use_f && !opt.use_g)) {
    rep.termination = "nothing_to_optimize";
    return rep;
  }

  const auto n_active = static_cast<Eigen::Index>(active.size());
  double lambda = 1e-4;
  Eigen::VectorXd res;
  Eigen::MatrixXd jac_full;

  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    rep.iterations = iter + 1;
    detail::lm_linearize(pairs, subset, rep.rotation, rep.translation, opt, res, jac_full);
    Eigen::MatrixXd jac(jac_full.rows(), n_active);
    for (Eigen::Index c = 0; c < n_active; ++c) jac.col(c) = jac_full.col(active[c]);

    const Eigen::VectorXd grad = jac.transpose() * res;
    if (grad.lpNorm<Eigen::Infinity>() < opt.gradient_tol) {
      rep.termination = "gradient";
      break;
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;

    bool accepted = false;
    bool stop = false;
    while (!accepted) {
      Eigen::MatrixXd a = jtj;
      for (Eigen::Index d = 0; d < n_active; ++d) a(d, d) += lambda * std::max(jtj(d, d), 1e-12);
      const Eigen::VectorXd step = a.ldlt().solve(-grad);
      if (!step.allFinite()) {
        lambda *= 10.0;
      } else if (step.norm() < opt.step_tol) {
        rep.termination = "step";
        stop = true;
        break;
      } else {
        Eigen::Matrix<double, 6, 1> full = Eigen::Matrix<double, 6, 1>::Zero();
        for (Eigen::Index c = 0; c < n_active; ++c) full(active[c]) = step(c);
        const Eigen::Matrix3d r_new = so3_exp(full.head<3>()) * rep.rotation;
        const Eigen::Vector3d t_new = rep.translation + full.tail<3>();
        const double cost_new = detail::lm_objective(pairs, subset, r_new, t_new, opt);
        if (cost_new < rep.final_cost) {
          rep.rotation = r_new;
          rep.translation = t_new;
          rep.final_cost = cost_new;
          rep.accepted_costs.push_back(cost_new);
          lambda = std::max(lambda * 0.1, 1e-12);
          accepted = true;
        } else {
          lambda *= 10.0;
        }
      }
      if (!accepted && lambda > 1e16) {
        rep.termination = "damping";
        stop = true;
        break;
      }
    }
    if (stop) break;
  }
  return rep;
}

/// Joint rotation + translation refinement over the pairs listed in `subset`.
inline RigidTransform refine_lm(const std::vector<FeaturePair>& pairs,
                                std::span<const std::size_t> subset, const RigidTransform& t0) {
  const auto geo = geometry(pairs);
  const auto rep = refine_lm(geo, subset, t0.rotation3(), t0.translation3());
  return RigidTransform::from(rep.rotation, rep.translation);
}

}  // namespace graff
