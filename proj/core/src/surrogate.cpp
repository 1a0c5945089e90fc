#include "bridge/surrogate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include <Eigen/Cholesky>

#include "bridge/error.hpp"

namespace bridge {

namespace {

constexpr double kSqrt5 = 2.2360679774997896964;
constexpr int kMaxSweeps = 200;
constexpr int kMaxHalvings = 10;
constexpr double kJitterStart = 1e-8;
constexpr double kJitterMax = 1e-4;

struct Factorization {
  Eigen::MatrixXd lower;
  double jitter = 0.0;
};

using DistanceMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

DistanceMatrix pairwise_hamming(std::span<const SubsetVector> inputs) {
  const auto n = static_cast<Eigen::Index>(inputs.size());
  DistanceMatrix d(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d(i, i) = 0;
    for (Eigen::Index j = 0; j < i; ++j) {
      d(i, j) = d(j, i) = static_cast<int>(hamming_distance(inputs[i], inputs[j]));
    }
  }
  return d;
}

// Kernel values only depend on the Hamming distance, so tabulate them.
std::vector<double> kernel_table(std::size_t m, const KernelParams& p) {
  std::vector<double> table(m + 1);
  for (std::size_t d = 0; d <= m; ++d) table[d] = matern52(std::sqrt(double(d)), p);
  return table;
}

std::optional<Factorization> factorize(const DistanceMatrix& dist, std::size_t m,
                                       const KernelParams& p) {
  const auto table = kernel_table(m, p);
  const auto n = dist.rows();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) k(i, j) = table[dist(i, j)];
    k(i, i) += p.noise_var;
  }
  double jitter = 0.0;
  while (true) {
    Eigen::MatrixXd shifted = k;
    if (jitter > 0.0) shifted.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() == Eigen::Success) {
      return Factorization{llt.matrixL(), jitter};
    }
    jitter = jitter == 0.0 ? kJitterStart * p.signal_var : 2.0 * jitter;
    if (jitter > kJitterMax * p.signal_var) return std::nullopt;
  }
}

double mll_from_factor(const Factorization& f, const Eigen::VectorXd& y) {
  Eigen::VectorXd alpha = f.lower.triangularView<Eigen::Lower>().solve(y);
  const double fit = alpha.squaredNorm();
  const double logdet = f.lower.diagonal().array().log().sum();
  return -0.5 * fit - logdet -
         0.5 * static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi);
}

double mll(const DistanceMatrix& dist, std::size_t m, const Eigen::VectorXd& y,
           const KernelParams& p) {
  auto f = factorize(dist, m, p);
  if (!f) return -std::numeric_limits<double>::infinity();
  return mll_from_factor(*f, y);
}

struct Standardization {
  Eigen::VectorXd values;
  double mean = 0.0;
  double std = 1.0;
};

Standardization standardize(std::span<const double> targets) {
  Standardization s;
  const auto n = static_cast<Eigen::Index>(targets.size());
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = targets[i];
  if (n == 1) {
    s.mean = y(0);
    s.std = 1.0;
  } else {
    s.mean = y.mean();
    const double var = (y.array() - s.mean).square().mean();
    s.std = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  s.values = (y.array() - s.mean) / s.std;
  return s;
}

void validate_inputs(std::span<const SubsetVector> inputs, std::span<const double> targets) {
  if (inputs.empty()) throw Error("fit_gp needs at least one observation");
  if (inputs.size() != targets.size()) throw Error("fit_gp: inputs and targets differ in length");
  const auto m = inputs.front().size();
  for (const auto& e : inputs) {
    if (e.size() != m) throw Error("fit_gp: inputs have different lengths");
  }
  for (double t : targets) {
    if (!std::isfinite(t)) throw Error("fit_gp: non-finite target");
  }
}

using LogPoint = std::array<double, 3>;

KernelParams from_log(const LogPoint& x) {
  return {std::exp(x[0]), std::exp(x[1]), std::exp(x[2])};
}

LogPoint to_log(const KernelParams& p) {
  return {std::log(p.lengthscale), std::log(p.signal_var), std::log(p.noise_var)};
}

double grid_point(double lo, double hi, int i, int count) {
  // Log-uniform cell centres; never touches the bounds.
  const double a = std::log(lo), b = std::log(hi);
  return std::exp(a + (b - a) * (i + 0.5) / count);
}

}  // namespace

KernelBounds KernelBounds::for_dimension(std::size_t m) {
  const double root = std::sqrt(static_cast<double>(std::max<std::size_t>(m, 1)));
  KernelBounds b;
  b.lengthscale_lo = 0.1 * root;
  b.lengthscale_hi = 10.0 * root;
  return b;
}

bool KernelBounds::contains(const KernelParams& p) const {
  auto in = [](double v, double lo, double hi) {
    return v >= lo * (1 - 1e-12) && v <= hi * (1 + 1e-12);
  };
  return in(p.lengthscale, lengthscale_lo, lengthscale_hi) &&
         in(p.signal_var, signal_var_lo, signal_var_hi) &&
         in(p.noise_var, noise_var_lo, noise_var_hi);
}

double matern52(double distance, const KernelParams& p) {
  const double r = distance / p.lengthscale;
  return p.signal_var * (1.0 + kSqrt5 * r + (5.0 / 3.0) * r * r) * std::exp(-kSqrt5 * r);
}

double kernel(const SubsetVector& a, const SubsetVector& b, const KernelParams& p) {
  return matern52(std::sqrt(static_cast<double>(hamming_distance(a, b))), p);
}

std::vector<KernelParams> hyperparameter_grid(std::size_t m) {
  const auto b = KernelBounds::for_dimension(m);
  std::vector<KernelParams> grid;
  grid.reserve(32);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      for (int k = 0; k < 2; ++k) {
        grid.push_back({grid_point(b.lengthscale_lo, b.lengthscale_hi, i, 4),
                        grid_point(b.signal_var_lo, b.signal_var_hi, j, 4),
                        grid_point(b.noise_var_lo, b.noise_var_hi, k, 2)});
      }
    }
  }
  return grid;
}

double log_marginal_likelihood(std::span<const SubsetVector> inputs,
                               const Eigen::VectorXd& y, const KernelParams& p) {
  if (inputs.empty()) return 0.0;
  return mll(pairwise_hamming(inputs), inputs.front().size(), y, p);
}

GPModel GPModel::prior(std::size_t m, const KernelParams& params, double target_mean,
                       double target_std) {
  GPModel model;
  model.dimension_ = m;
  model.params_ = params;
  model.target_mean_ = target_mean;
  model.target_std_ = target_std;
  return model;
}

GPModel fit_gp_with_params(std::span<const SubsetVector> inputs,
                           std::span<const double> targets, const KernelParams& params) {
  validate_inputs(inputs, targets);
  const auto m = inputs.front().size();
  auto s = standardize(targets);
  auto f = factorize(pairwise_hamming(inputs), m, params);
  if (!f) throw Error("ill-conditioned kernel matrix");

  GPModel model;
  model.dimension_ = m;
  model.params_ = params;
  model.train_inputs_.assign(inputs.begin(), inputs.end());
  model.train_targets_ = s.values;
  model.target_mean_ = s.mean;
  model.target_std_ = s.std;
  model.jitter_ = f->jitter;
  model.factor_ = std::move(f->lower);
  const Eigen::VectorXd half = model.factor_.triangularView<Eigen::Lower>().solve(s.values);
  model.weights_ = model.factor_.triangularView<Eigen::Lower>().transpose().solve(half);
  return model;
}

GPModel fit_gp(std::span<const SubsetVector> inputs, std::span<const double> targets) {
  validate_inputs(inputs, targets);
  const auto m = inputs.front().size();
  const auto s = standardize(targets);
  const auto dist = pairwise_hamming(inputs);
  const auto bounds = KernelBounds::for_dimension(m);
  const LogPoint lo = to_log({bounds.lengthscale_lo, bounds.signal_var_lo, bounds.noise_var_lo});
  const LogPoint hi = to_log({bounds.lengthscale_hi, bounds.signal_var_hi, bounds.noise_var_hi});

  double best_value = -std::numeric_limits<double>::infinity();
  std::optional<LogPoint> best;

  for (const auto& start : hyperparameter_grid(m)) {
    LogPoint x = to_log(start);
    double fx = mll(dist, m, s.values, from_log(x));
    LogPoint step;
    for (int d = 0; d < 3; ++d) step[d] = (hi[d] - lo[d]) / 8.0;
    int halvings = 0;
    for (int sweep = 0; sweep < kMaxSweeps && halvings <= kMaxHalvings; ++sweep) {
      bool improved = false;
      for (int d = 0; d < 3; ++d) {
        for (double sign : {1.0, -1.0}) {
          LogPoint cand = x;
          cand[d] = std::clamp(x[d] + sign * step[d], lo[d], hi[d]);
          if (cand[d] == x[d]) continue;
          const double fc = mll(dist, m, s.values, from_log(cand));
          if (fc > fx) {
            x = cand;
            fx = fc;
            improved = true;
            break;
          }
        }
      }
      if (!improved) {
        for (auto& st : step) st *= 0.5;
        ++halvings;
      }
    }
    if (fx > best_value) {
      best_value = fx;
      best = x;
    }
  }
  if (!best) throw Error("ill-conditioned kernel matrix");
  return fit_gp_with_params(inputs, targets, from_log(*best));
}

GPModel fit_gp(const std::vector<SubsetVector>& inputs, const std::vector<double>& targets) {
  return fit_gp(std::span<const SubsetVector>(inputs), std::span<const double>(targets));
}

Posterior posterior_standardized(const GPModel& model, const SubsetVector& e) {
  if (e.size() != model.dimension()) throw Error("posterior: subset length mismatch");
  const auto& p = model.params();
  const auto n = static_cast<Eigen::Index>(model.num_points());
  if (n == 0) return {0.0, p.signal_var};
  const auto table = kernel_table(model.dimension(), p);
  Eigen::VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i) k(i) = table[hamming_distance(e, model.train_inputs()[i])];
  const double mean = k.dot(model.weights());
  Eigen::VectorXd v = model.factor().triangularView<Eigen::Lower>().solve(k);
  const double var = std::max(0.0, p.signal_var - v.squaredNorm());
  return {mean, var};
}

Posterior posterior(const GPModel& model, const SubsetVector& e) {
  const auto s = posterior_standardized(model, e);
  const double sd = model.target_std();
  return {model.target_mean() + sd * s.mean, sd * sd * s.var};
}

double posterior_mean_relaxed(const GPModel& model, std::span<const double> e) {
  if (e.size() != model.dimension()) throw Error("posterior: subset length mismatch");
  double mean = 0.0;
  for (std::size_t i = 0; i < model.num_points(); ++i) {
    const auto& x = model.train_inputs()[i];
    double sq = 0.0;
    for (std::size_t j = 0; j < e.size(); ++j) {
      const double d = e[j] - x.bits()[j];
      sq += d * d;
    }
    mean += model.weights()(static_cast<Eigen::Index>(i)) * matern52(std::sqrt(sq), model.params());
  }
  return model.target_mean() + model.target_std() * mean;
}

Eigen::VectorXd posterior_gradient_relaxed(const GPModel& model, std::span<const double> e) {
  if (e.size() != model.dimension()) throw Error("posterior: subset length mismatch");
  const auto& p = model.params();
  const auto m = static_cast<Eigen::Index>(e.size());
  const double l2 = p.lengthscale * p.lengthscale;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd diff(m);
  for (std::size_t i = 0; i < model.num_points(); ++i) {
    const auto& x = model.train_inputs()[i];
    for (Eigen::Index j = 0; j < m; ++j) diff(j) = e[j] - x.bits()[j];
    const double r = diff.norm() / p.lengthscale;
    // dk/de = -(5/3) s2 (1 + sqrt5 r) exp(-sqrt5 r) (e - x) / l^2
    const double coef =
        -(5.0 / 3.0) * p.signal_var * (1.0 + kSqrt5 * r) * std::exp(-kSqrt5 * r) / l2;
    grad += (model.weights()(static_cast<Eigen::Index>(i)) * coef) * diff;
  }
  return model.target_std() * grad;
}

Eigen::VectorXd posterior_gradient(const GPModel& model, const SubsetVector& e) {
  std::vector<double> relaxed(e.bits().begin(), e.bits().end());
  return posterior_gradient_relaxed(model, relaxed);
}

}  // namespace bridge
