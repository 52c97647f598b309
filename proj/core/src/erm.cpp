#include "wspace/erm.hpp"

#include <cmath>
#include <random>

#include "wspace/error.hpp"
#include "wspace/parallel.hpp"

namespace wspace {

CylinderSubspace::CylinderSubspace(std::vector<CylinderFunction> raw, Eigen::MatrixXd transform,
                                   BasisKind kind)
    : raw_(std::move(raw)), transform_(std::move(transform)), kind_(kind) {
  if (raw_.empty()) throw Error(ErrorCode::kInvalidArgument, "subspace needs at least one function");
  if (transform_.rows() != static_cast<Eigen::Index>(raw_.size())) {
    throw Error(ErrorCode::kDimensionMismatch, "transform rows must match the raw basis size");
  }
}

CylinderSubspace::CylinderSubspace(std::vector<CylinderFunction> raw)
    : CylinderSubspace(raw, Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(raw.size()),
                                                      static_cast<Eigen::Index>(raw.size())),
                       BasisKind::kRaw) {}

Eigen::VectorXd CylinderSubspace::raw_values(const DiscreteMeasure& mu) const {
  Eigen::VectorXd out(raw_dim());
  for (Eigen::Index r = 0; r < raw_dim(); ++r) out(r) = raw_[static_cast<std::size_t>(r)].eval(mu);
  return out;
}

Eigen::VectorXd CylinderSubspace::values(const DiscreteMeasure& mu) const {
  return transform_.transpose() * raw_values(mu);
}

Eigen::MatrixXd CylinderSubspace::raw_energy(const DiscreteMeasure& mu) const {
  const auto P = static_cast<Eigen::Index>(mu.size());
  const Eigen::Index R = raw_dim();
  // Columns of G hold sqrt(mu(x)) DF_r(mu, x), both gradient components stacked.
  Eigen::MatrixXd G(2 * P, R);
  const Eigen::ArrayXd s = mu.weights().array().sqrt();
  for (Eigen::Index r = 0; r < R; ++r) {
    const Eigen::MatrixXd d = raw_[static_cast<std::size_t>(r)].grad_DF(mu);
    G.col(r).head(P) = (d.col(0).array() * s).matrix();
    G.col(r).tail(P) = (d.col(1).array() * s).matrix();
  }
  return G.transpose() * G;
}

Eigen::MatrixXd CylinderSubspace::energy(const DiscreteMeasure& mu) const {
  return transform_.transpose() * raw_energy(mu) * transform_;
}

SubspaceTable tabulate(const CylinderSubspace& V, const std::vector<DiscreteMeasure>& data) {
  SubspaceTable t;
  const auto N = static_cast<Eigen::Index>(data.size());
  t.values.resize(N, V.dim());
  t.energy.resize(data.size());
  parallel_for(data.size(), [&](std::size_t j) {
    t.values.row(static_cast<Eigen::Index>(j)) = V.values(data[j]).transpose();
    t.energy[j] = V.energy(data[j]);
  });
  return t;
}

Eigen::MatrixXd l2_gram(const SubspaceTable& table, const Eigen::VectorXd& weights) {
  if (weights.size() != table.values.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "one weight per measure required");
  }
  return table.values.transpose() * weights.asDiagonal() * table.values;
}

Eigen::MatrixXd energy_gram(const SubspaceTable& table, const Eigen::VectorXd& weights) {
  if (static_cast<std::size_t>(weights.size()) != table.energy.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "one weight per measure required");
  }
  const Eigen::Index n = table.values.cols();
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t j = 0; j < table.energy.size(); ++j) {
    D += weights(static_cast<Eigen::Index>(j)) * table.energy[j];
  }
  return 0.5 * (D + D.transpose());
}

CylinderSubspace double_orthogonalize(const std::vector<CylinderFunction>& raw_basis,
                                      const std::vector<DiscreteMeasure>& data,
                                      const Eigen::VectorXd& weights) {
  const CylinderSubspace raw(raw_basis);
  const SubspaceTable table = tabulate(raw, data);
  const Eigen::MatrixXd G1 = 0.5 * (l2_gram(table, weights) + l2_gram(table, weights).transpose());
  const Eigen::MatrixXd G2 = energy_gram(table, weights);
  const Eigen::Index r = G1.rows();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig1(G1);
  if (eig1.info() != Eigen::Success) throw Error(ErrorCode::kSolverFailure, "eigensolver failed");
  const Eigen::VectorXd s = eig1.eigenvalues();
  const double tol = 1e-12 * std::max(1.0, s.cwiseAbs().maxCoeff()) * static_cast<double>(r);
  int rank = 0;
  for (Eigen::Index i = 0; i < r; ++i) rank += s(i) > tol ? 1 : 0;
  if (rank < r) throw RankDeficient(rank, static_cast<int>(r));

  // T1 whitens the L2 Gram; the eigenvectors of T1^T G2 T1 then rotate the
  // whitened basis so the energy Gram becomes diagonal as well.
  const Eigen::MatrixXd T1 = eig1.eigenvectors() * s.cwiseSqrt().cwiseInverse().asDiagonal();
  Eigen::MatrixXd M = T1.transpose() * G2 * T1;
  M = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig2(M);
  if (eig2.info() != Eigen::Success) throw Error(ErrorCode::kSolverFailure, "eigensolver failed");
  Eigen::MatrixXd T = T1 * eig2.eigenvectors();

  // One pass of re-orthonormalization against the actual Grams removes the
  // rounding left by the two factorizations.
  const Eigen::MatrixXd A = T.transpose() * G1 * T;
  Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (A + A.transpose()));
  if (llt.info() == Eigen::Success) {
    const Eigen::MatrixXd Linv = llt.matrixL().solve(Eigen::MatrixXd::Identity(r, r));
    Eigen::MatrixXd T2 = T * Linv.transpose();
    Eigen::MatrixXd M2 = T2.transpose() * G2 * T2;
    M2 = 0.5 * (M2 + M2.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig3(M2);
    if (eig3.info() == Eigen::Success) T = T2 * eig3.eigenvectors();
  }
  return CylinderSubspace(raw_basis, T, BasisKind::kDoubleOrthogonal);
}

GramSystem assemble(const SubspaceTable& table, const std::vector<std::size_t>& rows,
                    const Eigen::VectorXd& values, double lambda) {
  if (static_cast<std::size_t>(values.size()) != rows.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "one target value per sample point required");
  }
  if (rows.empty()) throw Error(ErrorCode::kInvalidArgument, "empty sample");
  if (!(lambda >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "lambda must be >= 0");
  const auto N = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index n = table.values.cols();
  GramSystem s;
  s.lambda = lambda;
  s.values = values;
  s.L.resize(N, n);
  s.D = Eigen::MatrixXd::Zero(n, n);
  const double root = std::sqrt(static_cast<double>(N));
  for (Eigen::Index j = 0; j < N; ++j) {
    const std::size_t row = rows[static_cast<std::size_t>(j)];
    s.L.row(j) = table.values.row(static_cast<Eigen::Index>(row)) / root;
    s.D += table.energy[row];
  }
  s.D /= static_cast<double>(N);
  s.D = 0.5 * (s.D + s.D.transpose());
  s.yF = s.L.transpose() * values / root;
  return s;
}

GramSystem assemble(const CylinderSubspace& V, const std::vector<DiscreteMeasure>& sample,
                    const Eigen::VectorXd& values, double lambda) {
  const SubspaceTable table = tabulate(V, sample);
  std::vector<std::size_t> rows(sample.size());
  for (std::size_t j = 0; j < rows.size(); ++j) rows[j] = j;
  return assemble(table, rows, values, lambda);
}

double objective(const GramSystem& system, const Eigen::VectorXd& w) {
  const double root = std::sqrt(static_cast<double>(system.N()));
  const Eigen::VectorXd misfit = system.L * w - system.values / root;
  return misfit.squaredNorm() + system.lambda * w.dot(system.D * w);
}

namespace {

// Eigen's LLT only rejects nonpositive pivots, so near-singular matrices can
// factor "successfully" with a rounding-level pivot.
bool usable(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::MatrixXd& A) {
  if (llt.info() != Eigen::Success) return false;
  const Eigen::VectorXd d = Eigen::MatrixXd(llt.matrixL()).diagonal();
  const double scale = std::max(A.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  return d.cwiseAbs2().minCoeff() > 1e-14 * scale;
}

}  // namespace

FitResult solve_regularized(const GramSystem& system) {
  const Eigen::Index n = system.n();
  Eigen::MatrixXd A = system.L.transpose() * system.L + system.lambda * system.D;
  A = 0.5 * (A + A.transpose());
  FitResult fit;
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  const double tol = 1e-10 * (1.0 + system.yF.norm());
  if (!usable(llt, A)) {
    fit.jitter = 1e-12 * std::max(A.trace(), 1e-300) / static_cast<double>(n);
    llt.compute(A + fit.jitter * Eigen::MatrixXd::Identity(n, n));
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorCode::kSingular, "regularized normal matrix is singular even after jitter");
    }
  }
  fit.w = llt.solve(system.yF);
  for (int step = 0; step < 10; ++step) {
    const Eigen::VectorXd res = system.yF - A * fit.w;
    if (res.norm() <= 1e-3 * tol) break;
    fit.w += llt.solve(res);
    ++fit.refinement_steps;
  }
  fit.residual = (A * fit.w - system.yF).norm();
  if (!fit.w.allFinite() || (fit.jitter > 0.0 && fit.residual > tol)) {
    throw Error(ErrorCode::kSingular, "regularized normal matrix is numerically singular");
  }
  fit.objective = objective(system, fit.w);
  return fit;
}

TruncatedFit::TruncatedFit(CylinderSubspace V, Eigen::VectorXd w, double M)
    : V_(std::move(V)), w_(std::move(w)), M_(M) {
  if (!(M_ > 0.0)) throw Error(ErrorCode::kInvalidArgument, "truncation bound must be > 0");
  if (w_.size() != V_.dim()) throw Error(ErrorCode::kDimensionMismatch, "coefficient length mismatch");
}

double TruncatedFit::operator()(const DiscreteMeasure& mu) const {
  return clamp_value(V_.eval(w_, mu), M_);
}

double TruncatedFit::from_values(const Eigen::VectorXd& basis_values) const {
  return clamp_value(basis_values.dot(w_), M_);
}

TruncatedFit truncate(const CylinderSubspace& V, const FitResult& fit, double M) {
  return TruncatedFit(V, fit.w, M);
}

double c_delta(double delta) { return (1.0 + delta) * std::log1p(delta) - delta; }

ConditionReport condition_check(const SubspaceTable& table, long N, double lambda, double r,
                                const Eigen::VectorXd& gamma) {
  const Eigen::Index n = table.values.cols();
  ConditionReport rep;
  rep.N = N;
  rep.n = static_cast<long>(n);
  rep.r = r;
  rep.lambda = lambda;
  Eigen::VectorXd g = gamma;
  if (g.size() == 0) {
    g = energy_gram(table, uniform_weights(table.energy.size())).diagonal();
  }
  if (g.size() != n) throw Error(ErrorCode::kDimensionMismatch, "one energy per basis function required");
  for (Eigen::Index j = 0; j < table.values.rows(); ++j) {
    const double k = table.values.row(j).squaredNorm() +
                     lambda * table.energy[static_cast<std::size_t>(j)].trace();
    rep.K = std::max(rep.K, k);
  }
  rep.mu_min = g.minCoeff();
  rep.sigma_min = 1.0 + lambda * g.minCoeff();
  rep.sigma_max = 1.0 + lambda * g.maxCoeff();
  const double Nd = static_cast<double>(N);
  rep.lhs = N >= 2 ? Nd / std::log(Nd) : 0.0;
  rep.rhs = (1.0 + r) * rep.K / (rep.sigma_min * c_delta(1.0 / (2.0 * rep.sigma_max)));
  rep.holds = N >= 2 && rep.lhs >= rep.rhs;
  rep.K_at_least_n = rep.K >= static_cast<double>(n);
  return rep;
}

ConditionReport condition_check(const CylinderSubspace& V, const std::vector<DiscreteMeasure>& sample,
                                double lambda, double r, const Eigen::VectorXd& gamma) {
  return condition_check(tabulate(V, sample), static_cast<long>(sample.size()), lambda, r, gamma);
}

double bound_rhs(const BoundInputs& in) {
  const double c = c_delta(0.5);
  const double a = 0.5 + in.lambda * in.mu_min;
  const double b = 1.0 + in.lambda * in.mu_min;
  return 2.0 * in.e * (1.0 + c / (std::log(in.N) * (1.0 + in.r) * a * a)) +
         8.0 * in.lambda * in.pce_PnF + 4.0 * in.sigma * in.sigma * in.n / (b * b * in.N) +
         2.0 * in.M * in.M * std::pow(in.N, -in.r);
}

Eigen::VectorXd add_noise(const Eigen::VectorXd& values, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "sigma must be >= 0");
  if (sigma == 0.0) return values;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  Eigen::VectorXd out = values;
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) += noise(rng);
  return out;
}

}  // namespace wspace
