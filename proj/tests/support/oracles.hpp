#pragma once

// Reference computations the library results are checked against. They are
// written from the textbook formulas with dense linear algebra and plain
// enumeration, sharing no code with the library beyond the data types.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "bridge/pool.hpp"
#include "bridge/surrogate.hpp"

namespace oracle {

inline double matern(double squared_distance, double lengthscale, double signal_var) {
  const double r = std::sqrt(squared_distance) / lengthscale;
  const double s5 = std::sqrt(5.0);
  return signal_var * (1.0 + s5 * r + 5.0 * r * r / 3.0) * std::exp(-s5 * r);
}

inline double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
  return s;
}

inline std::vector<double> as_real(const bridge::SubsetVector& e) {
  std::vector<double> v(e.size());
  for (std::size_t j = 0; j < e.size(); ++j) v[j] = e.test(j) ? 1.0 : 0.0;
  return v;
}

// Explicit-inverse GP with the model's hyperparameters and jitter.
struct DenseGP {
  std::vector<std::vector<double>> x;
  Eigen::MatrixXd k_inv;
  Eigen::VectorXd alpha;
  double lengthscale, signal_var, mean, std;

  explicit DenseGP(const bridge::GPModel& model) {
    const auto& p = model.params();
    lengthscale = p.lengthscale;
    signal_var = p.signal_var;
    mean = model.target_mean();
    std = model.target_std();
    for (const auto& e : model.train_inputs()) x.push_back(as_real(e));
    const auto t = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd k(t, t);
    for (Eigen::Index i = 0; i < t; ++i) {
      for (Eigen::Index j = 0; j < t; ++j) {
        k(i, j) = matern(sq_dist(x[i], x[j]), lengthscale, signal_var);
      }
      k(i, i) += p.noise_var + model.jitter();
    }
    k_inv = k.fullPivLu().inverse();
    alpha = k_inv * model.train_targets();
  }

  Eigen::VectorXd cross(const std::vector<double>& q) const {
    Eigen::VectorXd kv(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
      kv(static_cast<Eigen::Index>(i)) = matern(sq_dist(q, x[i]), lengthscale, signal_var);
    }
    return kv;
  }

  double mean_at(const std::vector<double>& q) const {
    return mean + std * cross(q).dot(alpha);
  }

  double var_at(const std::vector<double>& q) const {
    const auto kv = cross(q);
    return std * std * (signal_var - kv.dot(k_inv * kv));
  }
};

inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = (static_cast<double>(i + j) / 2.0) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  return pearson(ranks(a), ranks(b));
}

// One-sided sign test: P(X >= wins) for X ~ Binomial(n, 1/2).
inline double sign_test_p(int wins, int n) {
  double p = 0.0;
  for (int k = wins; k <= n; ++k) {
    double log_c = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    p += std::exp(log_c - n * std::log(2.0));
  }
  return p;
}

// Maximum of f over every nonempty subset of {0..m-1}.
inline double enumerate_max(std::size_t m,
                            const std::function<double(const bridge::SubsetVector&)>& f,
                            bridge::SubsetVector* argmax = nullptr) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::uint64_t code = 1; code < (std::uint64_t{1} << m); ++code) {
    bridge::SubsetVector s(m);
    for (std::size_t j = 0; j < m; ++j) s.set(j, (code >> j) & 1U);
    const double v = f(s);
    if (v > best) {
      best = v;
      if (argmax) *argmax = s;
    }
  }
  return best;
}

inline double relative_error(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

}  // namespace oracle
