#include <cmath>
#include <limits>

#include "wspace/error.hpp"
#include "wspace/transport.hpp"

namespace wspace {

namespace {

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& z) {
  const double mx = z.maxCoeff();
  if (!std::isfinite(mx)) return mx;
  return mx + std::log((z.array() - mx).exp().sum());
}

}  // namespace

SinkhornResult sinkhorn(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p,
                        double reg, double tol, int max_iter) {
  require_same_ground(mu, nu);
  if (!(reg > 0.0)) throw Error(ErrorCode::kInvalidArgument, "sinkhorn: reg must be > 0");
  if (max_iter < 1) throw Error(ErrorCode::kInvalidArgument, "sinkhorn: max_iter must be >= 1");
  const auto cost = mu.ground()->cost_matrix(p);
  const auto rows = mu.support();
  const auto cols = nu.support();
  const auto m = static_cast<Eigen::Index>(rows.size());
  const auto n = static_cast<Eigen::Index>(cols.size());

  Eigen::MatrixXd C(m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      C(i, j) = (*cost)(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]),
                        static_cast<Eigen::Index>(cols[static_cast<std::size_t>(j)]));
    }
  }
  Eigen::VectorXd loga(m), logb(n), a(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    a(i) = mu[rows[static_cast<std::size_t>(i)]];
    loga(i) = std::log(a(i));
  }
  for (Eigen::Index j = 0; j < n; ++j) logb(j) = std::log(nu[cols[static_cast<std::size_t>(j)]]);

  // Scaled potentials: f = F / reg, g = G / reg; plan = exp(f_i + g_j - C_ij / reg).
  const Eigen::MatrixXd K = -C / reg;
  Eigen::VectorXd f = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd tmp;
  double violation = std::numeric_limits<double>::infinity();
  int it = 0;
  auto row_violation = [&]() {
    double v = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      tmp = K.row(i).transpose() + g;
      v += std::abs(std::exp(f(i) + log_sum_exp(tmp)) - a(i));
    }
    return v;
  };
  while (it < max_iter) {
    for (Eigen::Index i = 0; i < m; ++i) {
      tmp = K.row(i).transpose() + g;
      f(i) = loga(i) - log_sum_exp(tmp);
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      tmp = K.col(j) + f;
      g(j) = logb(j) - log_sum_exp(tmp);
    }
    ++it;
    if (it % 10 == 0 || it == max_iter) {
      violation = row_violation();
      if (!std::isfinite(violation)) throw NotConverged(violation, it);
      if (violation < tol) break;
    }
  }
  if (!(violation < tol)) throw NotConverged(violation, it);

  const auto N = static_cast<Eigen::Index>(mu.size());
  SinkhornResult out;
  out.plan = Eigen::MatrixXd::Zero(N, N);
  double total = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double gij = std::exp(f(i) + g(j) + K(i, j));
      out.plan(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]),
               static_cast<Eigen::Index>(cols[static_cast<std::size_t>(j)])) = gij;
      total += gij * C(i, j);
    }
  }
  out.wpp = total;
  out.violation = violation;
  out.iterations = it;
  return out;
}

}  // namespace wspace
