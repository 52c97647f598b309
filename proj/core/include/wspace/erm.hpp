#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "wspace/cylinder.hpp"
#include "wspace/measure.hpp"

namespace wspace {

enum class BasisKind { kRaw, kDoubleOrthogonal };

/// Span of cylinder functions ell_i = sum_r T(r, i) raw_r.
class CylinderSubspace {
 public:
  CylinderSubspace(std::vector<CylinderFunction> raw, Eigen::MatrixXd transform, BasisKind kind);
  /// Identity transform: the raw functions themselves.
  explicit CylinderSubspace(std::vector<CylinderFunction> raw);

  Eigen::Index dim() const { return transform_.cols(); }
  Eigen::Index raw_dim() const { return transform_.rows(); }
  BasisKind kind() const { return kind_; }
  const std::vector<CylinderFunction>& raw() const { return raw_; }
  const Eigen::MatrixXd& transform() const { return transform_; }

  /// (raw_1(mu), ..., raw_r(mu))
  Eigen::VectorXd raw_values(const DiscreteMeasure& mu) const;
  /// (ell_1(mu), ..., ell_n(mu))
  Eigen::VectorXd values(const DiscreteMeasure& mu) const;
  /// E(r, s) = sum_x D raw_r(mu, x) . D raw_s(mu, x) mu(x)
  Eigen::MatrixXd raw_energy(const DiscreteMeasure& mu) const;
  /// The same for the basis functions ell_i.
  Eigen::MatrixXd energy(const DiscreteMeasure& mu) const;

  double eval(const Eigen::VectorXd& coeffs, const DiscreteMeasure& mu) const {
    return values(mu).dot(coeffs);
  }

 private:
  std::vector<CylinderFunction> raw_;
  Eigen::MatrixXd transform_;
  BasisKind kind_;
};

/// Basis values and per-measure energy matrices of a subspace on a fixed
/// list of measures, so repeated fits on subsamples avoid recomputation.
struct SubspaceTable {
  Eigen::MatrixXd values;               // one row per measure
  std::vector<Eigen::MatrixXd> energy;  // n x n per measure
};

SubspaceTable tabulate(const CylinderSubspace& V, const std::vector<DiscreteMeasure>& data);

/// L2 and pre-Cheeger Gram matrices of the raw functions under the weighted
/// sample, then a basis orthonormal for the first and orthogonal for the
/// second. Throws RankDeficient when the L2 Gram is numerically singular.
CylinderSubspace double_orthogonalize(const std::vector<CylinderFunction>& raw_basis,
                                      const std::vector<DiscreteMeasure>& data,
                                      const Eigen::VectorXd& weights);

/// Gram matrices of an arbitrary subspace under weighted data.
Eigen::MatrixXd l2_gram(const SubspaceTable& table, const Eigen::VectorXd& weights);
Eigen::MatrixXd energy_gram(const SubspaceTable& table, const Eigen::VectorXd& weights);

struct GramSystem {
  Eigen::MatrixXd L;      // L(j, i) = ell_i(mu_j) / sqrt(N)
  Eigen::MatrixXd D;      // sample pre-Cheeger Gram
  Eigen::VectorXd gamma;  // population energies when known, else empty
  Eigen::VectorXd yF;     // yF_i = (1/N) sum_j F(mu_j) ell_i(mu_j)
  Eigen::VectorXd values; // F(mu_j)
  double lambda = 0.0;

  Eigen::Index N() const { return L.rows(); }
  Eigen::Index n() const { return L.cols(); }
};

GramSystem assemble(const CylinderSubspace& V, const std::vector<DiscreteMeasure>& sample,
                    const Eigen::VectorXd& values, double lambda);
/// Uses rows[j] of a precomputed table as the j-th sample point.
GramSystem assemble(const SubspaceTable& table, const std::vector<std::size_t>& rows,
                    const Eigen::VectorXd& values, double lambda);

struct FitResult {
  Eigen::VectorXd w;
  double residual = 0.0;   // ||(L^T L + lambda D) w - yF||
  double objective = 0.0;  // ||L w - y / sqrt(N)||^2 + lambda w^T D w
  double jitter = 0.0;     // diagonal shift used in the factorization, 0 if none
  int refinement_steps = 0;
};

/// Solves (L^T L + lambda D) w = yF by Cholesky. If the factorization fails,
/// 1e-12 trace / n is added to the diagonal and the solution is refined
/// against the original matrix. Throws kSingular if that fails too.
FitResult solve_regularized(const GramSystem& system);

/// J(w) = ||L w - y / sqrt(N)||^2 + lambda w^T D w
double objective(const GramSystem& system, const Eigen::VectorXd& w);

/// x -> clamp(sum_i w_i ell_i(x), -M, M)
class TruncatedFit {
 public:
  TruncatedFit(CylinderSubspace V, Eigen::VectorXd w, double M);

  double operator()(const DiscreteMeasure& mu) const;
  double from_values(const Eigen::VectorXd& basis_values) const;
  double bound() const { return M_; }
  const Eigen::VectorXd& coefficients() const { return w_; }

 private:
  CylinderSubspace V_;
  Eigen::VectorXd w_;
  double M_;
};

TruncatedFit truncate(const CylinderSubspace& V, const FitResult& fit, double M);
inline double clamp_value(double v, double M) { return std::max(-M, std::min(M, v)); }

/// (1 + delta) log(1 + delta) - delta
double c_delta(double delta);

struct ConditionReport {
  double K = 0.0;          // max over the sample of sum_i ell_i^2 + lambda energy_i
  double sigma_min = 0.0;  // 1 + lambda min_i gamma_i
  double sigma_max = 0.0;  // 1 + lambda max_i gamma_i
  double mu_min = 0.0;     // min_i gamma_i
  double lhs = 0.0;        // N / log N
  double rhs = 0.0;        // (1 + r) K / (sigma_min c_{1/(2 sigma_max)})
  bool holds = false;
  bool K_at_least_n = true;
  long N = 0;
  long n = 0;
  double r = 0.0;
  double lambda = 0.0;
};

/// gamma: population pre-Cheeger energies of the basis; when empty they are
/// estimated by the diagonal of the energy Gram on the sample.
ConditionReport condition_check(const SubspaceTable& table, long N, double lambda, double r,
                                const Eigen::VectorXd& gamma = Eigen::VectorXd());
ConditionReport condition_check(const CylinderSubspace& V, const std::vector<DiscreteMeasure>& sample,
                                double lambda, double r,
                                const Eigen::VectorXd& gamma = Eigen::VectorXd());

struct BoundInputs {
  double e = 0.0;        // best-approximation error e(F, n)
  double lambda = 0.0;
  double mu_min = 0.0;   // min_i population energy of ell_i
  double pce_PnF = 0.0;  // population pre-Cheeger energy of the projection
  double sigma = 0.0;    // noise standard deviation
  double M = 1.0;
  double N = 2.0;
  double n = 1.0;
  double r = 1.0;
};

/// Right-hand side of the noisy-data generalization bound.
double bound_rhs(const BoundInputs& in);

/// values + i.i.d. N(0, sigma^2) noise.
Eigen::VectorXd add_noise(const Eigen::VectorXd& values, double sigma, std::uint64_t seed);

}  // namespace wspace
