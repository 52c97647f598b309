#pragma once

// Independent reference computations used by the unit and acceptance tests.
// None of these call into the library's solvers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "wspace/measure.hpp"

namespace oracle {

/// Minimum of <C, X> over the transport polytope by enumerating every basis
/// of the (m + n - 1) independent marginal constraints.
inline double lp_vertex_min(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::MatrixXd& C) {
  const int m = static_cast<int>(a.size()), n = static_cast<int>(b.size());
  const int vars = m * n, eqs = m + n - 1;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(eqs, vars);
  Eigen::VectorXd rhs(eqs);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) A(i, i * n + j) = 1.0;
    rhs(i) = a(i);
  }
  for (int j = 0; j + 1 < n; ++j) {
    for (int i = 0; i < m; ++i) A(m + j, i * n + j) = 1.0;
    rhs(m + j) = b(j);
  }
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> pick(eqs);
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == eqs) {
      Eigen::MatrixXd S(eqs, eqs);
      for (int k = 0; k < eqs; ++k) S.col(k) = A.col(pick[k]);
      Eigen::FullPivLU<Eigen::MatrixXd> lu(S);
      if (lu.rank() < eqs) return;
      const Eigen::VectorXd x = lu.solve(rhs);
      if (x.minCoeff() < -1e-12) return;
      double cost = 0.0;
      for (int k = 0; k < eqs; ++k) cost += x(k) * C(pick[k] / n, pick[k] % n);
      best = std::min(best, cost);
      return;
    }
    for (int v = start; v <= vars - (eqs - depth); ++v) {
      pick[depth] = v;
      rec(v + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

/// Random probability vector; each atom is kept with probability `keep`
/// (at least one atom survives).
inline Eigen::VectorXd random_weights(Eigen::Index n, std::mt19937_64& rng, double keep = 1.0) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) w(i) = U(rng) < keep ? 0.05 + U(rng) : 0.0;
  if (w.sum() == 0.0) w(std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng)) = 1.0;
  return w / w.sum();
}

inline wspace::DiscreteMeasure random_measure(const wspace::GroundPtr& g, std::mt19937_64& rng, double keep = 1.0) {
  return wspace::DiscreteMeasure(g, random_weights(static_cast<Eigen::Index>(g->size()), rng, keep));
}

/// Smallest k such that some k-subset of points has every point within
/// radius (closed) of a chosen center.
inline int min_cover_size(const Eigen::MatrixXd& dist, double radius) {
  const int n = static_cast<int>(dist.rows());
  for (int k = 1; k <= n; ++k) {
    std::vector<int> sel(static_cast<std::size_t>(n), 0);
    std::fill(sel.end() - k, sel.end(), 1);
    do {
      bool ok = true;
      for (int x = 0; x < n && ok; ++x) {
        bool covered = false;
        for (int c = 0; c < n; ++c) covered = covered || (sel[static_cast<std::size_t>(c)] && dist(x, c) <= radius);
        ok = covered;
      }
      if (ok) return k;
    } while (std::next_permutation(sel.begin(), sel.end()));
  }
  return n;
}

/// 1 - sum_x p(x) (1 - p(B(x, eps)))^k computed straight from a distance
/// matrix with open balls.
inline double p_eps_k(const Eigen::MatrixXd& dist, const Eigen::VectorXd& p, double eps, int k) {
  double acc = 0.0;
  for (Eigen::Index x = 0; x < dist.rows(); ++x) {
    double ball = 0.0;
    for (Eigen::Index y = 0; y < dist.cols(); ++y) {
      if (dist(x, y) < eps) ball += p(y);
    }
    acc += p(x) * std::pow(1.0 - ball, k);
  }
  return 1.0 - acc;
}

/// Central finite difference of f at x along coordinate i.
inline double central_difference(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x,
                                 Eigen::Index i, double h) {
  const double x0 = x(i);
  x(i) = x0 + h;
  const double fp = f(x);
  x(i) = x0 - h;
  const double fm = f(x);
  return (fp - fm) / (2.0 * h);
}

}  // namespace oracle
