#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wspace/measure.hpp"

namespace wspace {

struct BankEntry {
  std::size_t index = 0;  // position of mu_k in the training split
  Eigen::VectorXd phi;    // potential paired with mu_k
  double psi_bar = 0.0;   // int psi_k dtheta
  double wpp = 0.0;       // W_p^p(theta, mu_k)
};

/// Kantorovich potentials of a fixed reference measure theta against a set
/// of anchor measures. G_I(mu) = max_k (int phi_k dmu + psi_bar_k) is a lower
/// bound on W_p^p(theta, mu) that is exact at every anchor.
struct PotentialBank {
  GroundPtr ground;
  double p = 2.0;
  std::string ref_hash;
  std::vector<BankEntry> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
};

PotentialBank build_bank(const std::vector<DiscreteMeasure>& train, const DiscreteMeasure& theta,
                         const std::vector<std::size_t>& indices, double p = 2.0);

/// Throws kEmptyBank.
double eval_G(const PotentialBank& bank, const DiscreteMeasure& mu);
/// Index into bank.entries of the maximizing affine form (first on ties).
std::size_t argmax_G(const PotentialBank& bank, const DiscreteMeasure& mu);

struct AffineExport {
  Eigen::MatrixXd A;  // |I| x |ground|, row i = phi_{k_i}
  Eigen::VectorXd b;  // psi_bar
};

AffineExport export_affine(const PotentialBank& bank);

/// Greedy cover: walk the training set in order; a measure farther than
/// delta (in W_p) from every current center becomes a new center. Balls are
/// closed. Distances are only computed when the cheap lower bound
/// |mean(mu) - mean(nu)| <= W_p does not already rule the pair out.
std::vector<std::size_t> select_cover_indices(const std::vector<DiscreteMeasure>& train,
                                              const DiscreteMeasure& theta, double delta,
                                              double p = 2.0);

/// max_{x != y} |f(x) - f(y)| / d(x, y)
double lipschitz_constant(const Eigen::VectorXd& f, const GroundSpace& ground);
/// max over entries of lipschitz_constant(phi_k); a Lipschitz constant of G_I
/// with respect to W_1, hence W_p.
double bank_lipschitz(const PotentialBank& bank);
/// p diam^(p-1): Lipschitz constant of W_p^p(theta, .) with respect to W_p,
/// and an upper bound for every c-concave potential.
double wpp_lipschitz_bound(const GroundSpace& ground, double p);

struct AccuracyCover {
  std::vector<std::size_t> indices;
  PotentialBank bank;
  double delta = 0.0;
  double lip_F = 0.0;
  double lip_G = 0.0;
  int rounds = 0;
};

/// Picks delta = eps / (lip_F + lip_G) and the greedy cover for it, so that
/// |W_p^p(theta, mu) - G_I(mu)| <= eps for every training measure. lip_G is
/// the measured Lipschitz constant of the resulting bank; the radius is
/// refined until the bank it produces satisfies the assumed constant.
AccuracyCover cover_for_accuracy(const std::vector<DiscreteMeasure>& train,
                                 const DiscreteMeasure& theta, double eps, double p = 2.0);

/// j distinct indices from [0, n), uniformly at random.
std::vector<std::size_t> random_indices(std::size_t n, std::size_t j, std::uint64_t seed);
/// A random permutation of [0, n); prefixes give nested index sets.
std::vector<std::size_t> random_permutation(std::size_t n, std::uint64_t seed);

void write_bank(const PotentialBank& bank, const std::string& path);
/// The ground space is needed to interpret the phi vectors.
PotentialBank read_bank(const std::string& path, GroundPtr ground);

/// |a - b| / |a|, with the convention 0 when both vanish and |b| when a = 0.
double relative_error(double truth, double approx);

}  // namespace wspace
