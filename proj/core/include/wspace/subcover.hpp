#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "wspace/measure.hpp"

namespace wspace {

/// A finite metric-probability space. Elements are either measures under W_p
/// (distances filled lazily by exact OT) or abstract points given by an
/// explicit distance matrix.
class MetricSample {
 public:
  MetricSample(std::vector<DiscreteMeasure> elements, double p = 2.0,
               std::optional<Eigen::VectorXd> weights = std::nullopt);
  MetricSample(Eigen::MatrixXd distances, Eigen::VectorXd weights);

  std::size_t size() const { return n_; }
  double p() const { return p_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  const std::vector<DiscreteMeasure>& elements() const { return elements_; }

  /// Symmetric, zero diagonal. Computed on first use; thread-safe.
  const Eigen::MatrixXd& distances() const;
  double distance(std::size_t i, std::size_t j) const { return distances()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)); }
  /// Largest distance between two atoms of positive weight.
  double diameter() const;

  /// p(B(x_i, eps)) for every atom, with open balls (strict inequality).
  Eigen::VectorXd ball_masses(double eps) const;

 private:
  Eigen::VectorXd uniform_weights_vector() const;

  std::vector<DiscreteMeasure> elements_;
  std::size_t n_ = 0;
  double p_ = 2.0;
  Eigen::VectorXd weights_;
  mutable std::once_flag once_;
  mutable Eigen::MatrixXd dist_;
};

/// 1 - sum_x p(x) (1 - p(B(x, eps)))^k
double p_eps_k_closed(const MetricSample& s, double eps, int k);

/// 1 - E[p(intersection of B^c(X_i, eps))] by enumerating all k-tuples of
/// atoms. Throws kInvalidArgument when size^k exceeds max_tuples.
double p_eps_k_tuples(const MetricSample& s, double eps, int k, double max_tuples = 2e7);

struct MonteCarloEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  int trials = 0;
};

/// Each trial draws X_1..X_k and X from p and records whether X is within
/// eps of some X_i. Trial t uses a seed derived from (seed, t).
MonteCarloEstimate p_eps_k_monte_carlo(const MetricSample& s, double eps, int k, int trials,
                                       std::uint64_t seed);

/// inf over the support of p(B(x, eps))
double min_ball_mass(const MetricSample& s, double eps);

struct CoveringNumber {
  long bound = 0;        // ceil(log delta / int log p(B^c(x, eps)) dp), at least 1
  bool unbounded = false;
  double log_integral = 0.0;
  long exact_min_k = 0;  // smallest k with p_eps_k_closed >= 1 - delta
};

CoveringNumber covering_number_bound(const MetricSample& s, double eps, double delta);

/// Weights of p^{k,eps} over the sample atoms: cell C_i = B(X_i, eps) minus
/// earlier cells; weight p(C_i) at X_i, normalized. Throws kEmptyCover.
Eigen::VectorXd empirical_subcover_measure(const MetricSample& s,
                                           const std::vector<std::size_t>& centers, double eps);

/// k i.i.d. atom indices drawn from the sample's weights.
std::vector<std::size_t> draw_atoms(const MetricSample& s, int k, std::uint64_t seed);

/// W_p between two probability vectors over the sample, ground cost d^p.
double nested_wasserstein(const MetricSample& s, const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// 2 (diam + 2 eps)^((p-1)/p) (diam + 2 eps + 1)
double corollary_constant(const MetricSample& s, double eps);

/// E[sum_x p(x) L(min_i d(x, X_i))] with L(r) = min(r, 1) and X_1..X_k
/// i.i.d. from p, evaluated exactly.
double expected_min_distance_loss(const MetricSample& s, int k);

}  // namespace wspace
