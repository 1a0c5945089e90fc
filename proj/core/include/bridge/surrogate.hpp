#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "bridge/pool.hpp"

namespace bridge {

// Matern-5/2 hyperparameters. Bounds are in standardized-output units.
struct KernelParams {
  double lengthscale = 1.0;
  double signal_var = 1.0;
  double noise_var = 1e-6;
};

struct KernelBounds {
  double lengthscale_lo, lengthscale_hi;
  double signal_var_lo = 1e-2, signal_var_hi = 1e2;
  double noise_var_lo = 1e-6, noise_var_hi = 1.0;

  // Lengthscale range scales with sqrt(m), the diameter of the cube.
  static KernelBounds for_dimension(std::size_t m);
  bool contains(const KernelParams& p) const;
};

// Matern nu=5/2 as a function of the unscaled distance.
double matern52(double distance, const KernelParams& params);
double kernel(const SubsetVector& a, const SubsetVector& b, const KernelParams& params);

struct Posterior {
  double mean = 0.0;
  double var = 0.0;
};

class GPModel {
 public:
  GPModel() = default;

  // A model with no observations; posterior equals the prior.
  static GPModel prior(std::size_t m, const KernelParams& params,
                       double target_mean = 0.0, double target_std = 1.0);

  std::size_t dimension() const { return dimension_; }
  std::size_t num_points() const { return train_inputs_.size(); }
  const KernelParams& params() const { return params_; }
  const std::vector<SubsetVector>& train_inputs() const { return train_inputs_; }
  // Standardized targets.
  const Eigen::VectorXd& train_targets() const { return train_targets_; }
  double target_mean() const { return target_mean_; }
  double target_std() const { return target_std_; }
  // Lower factor L with L L^T = K + noise I (+ jitter I).
  const Eigen::MatrixXd& factor() const { return factor_; }
  double jitter() const { return jitter_; }
  // (K + noise I)^{-1} y, cached at fit time.
  const Eigen::VectorXd& weights() const { return weights_; }

 private:
  friend GPModel fit_gp(std::span<const SubsetVector>, std::span<const double>);
  friend GPModel fit_gp_with_params(std::span<const SubsetVector>,
                                    std::span<const double>, const KernelParams&);

  std::size_t dimension_ = 0;
  KernelParams params_;
  std::vector<SubsetVector> train_inputs_;
  Eigen::VectorXd train_targets_;
  double target_mean_ = 0.0;
  double target_std_ = 1.0;
  Eigen::MatrixXd factor_;
  double jitter_ = 0.0;
  Eigen::VectorXd weights_;
};

// Fits hyperparameters by maximizing the log marginal likelihood with a
// deterministic multi-start coordinate search in log-parameter space.
GPModel fit_gp(std::span<const SubsetVector> inputs, std::span<const double> targets);
GPModel fit_gp(const std::vector<SubsetVector>& inputs, const std::vector<double>& targets);

// Same standardization and factorization, fixed hyperparameters.
GPModel fit_gp_with_params(std::span<const SubsetVector> inputs,
                           std::span<const double> targets, const KernelParams& params);

// Log marginal likelihood of already-standardized targets.
double log_marginal_likelihood(std::span<const SubsetVector> inputs,
                               const Eigen::VectorXd& standardized_targets,
                               const KernelParams& params);

// The 32 starting points of the hyperparameter search.
std::vector<KernelParams> hyperparameter_grid(std::size_t m);

// Posterior in original target units.
Posterior posterior(const GPModel& model, const SubsetVector& e);
// Posterior in standardized units (used by the acquisition).
Posterior posterior_standardized(const GPModel& model, const SubsetVector& e);

// Posterior mean and its input gradient at a point of the continuous
// relaxation [0,1]^m; original target units.
double posterior_mean_relaxed(const GPModel& model, std::span<const double> e);
Eigen::VectorXd posterior_gradient_relaxed(const GPModel& model, std::span<const double> e);
Eigen::VectorXd posterior_gradient(const GPModel& model, const SubsetVector& e);

}  // namespace bridge
