#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "wspace/measure.hpp"

namespace wspace {

struct TransportPlan {
  Eigen::MatrixXd gamma;  // gamma(x, y): mass moved from source atom x to target atom y
  double cost = 0.0;
};

/// Kantorovich potentials for exact_ot(mu, nu): psi lives on the source
/// (mu) side and phi on the target (nu) side, so that
/// psi(x) + phi(y) <= d(x, y)^p and dual_value = int phi dnu + int psi dmu.
/// Gauge: psi at the first ground point is 0.
struct PotentialPair {
  Eigen::VectorXd phi;
  Eigen::VectorXd psi;
  double dual_value = 0.0;
};

struct OtResult {
  TransportPlan plan;
  PotentialPair potentials;
  double wpp = 0.0;
};

/// Solution of a dense balanced transportation problem.
struct TransportSolution {
  Eigen::MatrixXd flow;
  Eigen::VectorXd u;  // row duals
  Eigen::VectorXd v;  // column duals; u_i + v_j <= cost_ij, equality on basic arcs
  double cost = 0.0;
  int iterations = 0;
};

/// min <cost, flow> s.t. flow 1 = a, flow^T 1 = b, flow >= 0, by the
/// network simplex method on the bipartite graph. a and b must be strictly
/// positive with equal totals (up to rounding).
TransportSolution solve_transport(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                  const Eigen::MatrixXd& cost);

/// Exact W_p^p(mu, nu) with an optimal plan and potentials extended to the
/// whole ground space by c-transforms.
OtResult exact_ot(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p = 2.0);

/// W_p^p(mu, nu) only (skips plan and potential assembly).
double wpp(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p = 2.0);
inline double wasserstein(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p = 2.0) {
  return std::pow(std::max(0.0, wpp(mu, nu, p)), 1.0 / p);
}

struct SinkhornResult {
  Eigen::MatrixXd plan;
  double wpp = 0.0;
  double violation = 0.0;  // L1 row-marginal error of the returned plan
  int iterations = 0;
};

/// Entropic OT in the log domain. Throws NotConverged when the marginal
/// violation is still >= tol after max_iter sweeps.
SinkhornResult sinkhorn(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p,
                        double reg, double tol = 1e-9, int max_iter = 100000);

/// (f^c)(x) = min_y d(x, y)^p - f(y), by enumeration over the ground space.
Eigen::VectorXd c_transform(const Eigen::VectorXd& f, const GroundSpace& ground, double p = 2.0);

/// Largest violation of psi(x) + phi(y) <= d(x, y)^p over all pairs
/// (positive means infeasible).
double dual_violation(const PotentialPair& pot, const GroundSpace& ground, double p = 2.0);

}  // namespace wspace
