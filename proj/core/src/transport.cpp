#include <cmath>
#include <limits>
#include <vector>

#include "wspace/error.hpp"
#include "wspace/transport.hpp"

namespace wspace {

namespace {

struct Restricted {
  std::vector<std::size_t> rows;
  std::vector<std::size_t> cols;
  Eigen::VectorXd a;
  Eigen::VectorXd b;
  Eigen::MatrixXd cost;
};

Restricted restrict_to_supports(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                const Eigen::MatrixXd& full_cost) {
  Restricted r;
  r.rows = mu.support();
  r.cols = nu.support();
  if (r.rows.empty() || r.cols.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "measures must have nonempty support");
  }
  const auto m = static_cast<Eigen::Index>(r.rows.size());
  const auto n = static_cast<Eigen::Index>(r.cols.size());
  r.a.resize(m);
  r.b.resize(n);
  r.cost.resize(m, n);
  for (Eigen::Index i = 0; i < m; ++i) r.a(i) = mu[r.rows[static_cast<std::size_t>(i)]];
  for (Eigen::Index j = 0; j < n; ++j) r.b(j) = nu[r.cols[static_cast<std::size_t>(j)]];
  // Equalize total mass exactly; both are within 1e-12 of 1.
  r.b *= r.a.sum() / r.b.sum();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) {
      r.cost(i, j) = full_cost(static_cast<Eigen::Index>(r.rows[static_cast<std::size_t>(i)]),
                               static_cast<Eigen::Index>(r.cols[static_cast<std::size_t>(j)]));
    }
  }
  return r;
}

std::shared_ptr<const Eigen::MatrixXd> checked_cost(const DiscreteMeasure& mu,
                                                    const DiscreteMeasure& nu, double p) {
  require_same_ground(mu, nu);
  if (!(p >= 1.0)) throw Error(ErrorCode::kInvalidArgument, "p must be >= 1");
  return mu.ground()->cost_matrix(p);
}

}  // namespace

OtResult exact_ot(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p) {
  const auto cost = checked_cost(mu, nu, p);
  const Restricted r = restrict_to_supports(mu, nu, *cost);
  TransportSolution sol = solve_transport(r.a, r.b, r.cost);

  const auto N = static_cast<Eigen::Index>(mu.size());
  OtResult out;
  out.plan.gamma = Eigen::MatrixXd::Zero(N, N);
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    for (std::size_t j = 0; j < r.cols.size(); ++j) {
      out.plan.gamma(static_cast<Eigen::Index>(r.rows[i]), static_cast<Eigen::Index>(r.cols[j])) =
          sol.flow(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  out.plan.cost = sol.cost;
  out.wpp = sol.cost;

  // phi = (psi restricted to supp mu)^c, then psi = phi^c over the whole
  // ground. On the supports this reproduces the LP duals; elsewhere it gives
  // the tightest values keeping the pair feasible.
  const Eigen::MatrixXd& C = *cost;
  Eigen::VectorXd phi(N);
  for (Eigen::Index y = 0; y < N; ++y) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
      best = std::min(best, C(static_cast<Eigen::Index>(r.rows[i]), y) - sol.u(static_cast<Eigen::Index>(i)));
    }
    phi(y) = best;
  }
  Eigen::VectorXd psi = c_transform(phi, *mu.ground(), p);
  const double shift = psi(0);
  psi.array() -= shift;
  phi.array() += shift;

  out.potentials.phi = std::move(phi);
  out.potentials.psi = std::move(psi);
  out.potentials.dual_value = nu.integrate(out.potentials.phi) + mu.integrate(out.potentials.psi);
  return out;
}

double wpp(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p) {
  const auto cost = checked_cost(mu, nu, p);
  const Restricted r = restrict_to_supports(mu, nu, *cost);
  return solve_transport(r.a, r.b, r.cost).cost;
}

Eigen::VectorXd c_transform(const Eigen::VectorXd& f, const GroundSpace& ground, double p) {
  const auto n = static_cast<Eigen::Index>(ground.size());
  if (f.size() != n) throw Error(ErrorCode::kDimensionMismatch, "c_transform: length mismatch");
  if (!f.allFinite()) throw Error(ErrorCode::kInvalidArgument, "c_transform: non-finite input");
  const auto cost = ground.cost_matrix(p);
  Eigen::VectorXd out(n);
  for (Eigen::Index x = 0; x < n; ++x) {
    out(x) = ((*cost).col(x) - f).minCoeff();
  }
  return out;
}

double dual_violation(const PotentialPair& pot, const GroundSpace& ground, double p) {
  const auto cost = ground.cost_matrix(p);
  const auto n = static_cast<Eigen::Index>(ground.size());
  double worst = -std::numeric_limits<double>::infinity();
  for (Eigen::Index y = 0; y < n; ++y) {
    for (Eigen::Index x = 0; x < n; ++x) {
      worst = std::max(worst, pot.psi(x) + pot.phi(y) - (*cost)(x, y));
    }
  }
  return worst;
}

}  // namespace wspace
