#pragma once

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "wspace/measure.hpp"

namespace wspace {

/// Finite-difference spatial gradient on a pixel grid, as two sparse
/// operators (row direction, column direction) acting on functions over the
/// ground points. Central differences inside, one-sided at the border, zero
/// along a dimension of size 1.
class GridGradient {
 public:
  explicit GridGradient(const GroundSpace& ground);

  const Eigen::SparseMatrix<double>& along_rows() const { return g_[0]; }
  const Eigen::SparseMatrix<double>& along_cols() const { return g_[1]; }
  const Eigen::SparseMatrix<double>& component(int c) const { return g_[c]; }

  /// Per-point gradient of f: P x 2 matrix.
  Eigen::MatrixXd apply(const Eigen::VectorXd& f) const;
  /// Adjoint: sum_c G_c^T field.col(c).
  Eigen::VectorXd apply_transpose(const Eigen::MatrixXd& field) const;

  /// sum_x |grad f(x)|^2 mu(x)
  double energy(const Eigen::VectorXd& f, const Eigen::VectorXd& mu) const;
  /// Q(mu) = sum_c G_c^T diag(mu) G_c, so energy(f, mu) = f^T Q f.
  Eigen::SparseMatrix<double> energy_operator(const Eigen::VectorXd& mu) const;

 private:
  Eigen::SparseMatrix<double> g_[2];
};

std::shared_ptr<const GridGradient> grid_gradient(const GroundPtr& ground);

/// Inner feature functions phi_1..phi_N sampled on the ground space, with
/// their spatial gradients when the ground is a grid.
class FeatureSet {
 public:
  /// values: one row per feature, one column per ground point.
  FeatureSet(GroundPtr ground, Eigen::MatrixXd values);

  const GroundPtr& ground() const { return ground_; }
  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::Index count() const { return values_.rows(); }
  bool has_gradient() const { return static_cast<bool>(grad_); }

  /// Throws kNoSpatialGradient on non-grid ground spaces.
  const GridGradient& gradient() const;
  /// d/d(component c) of every feature: N x P.
  const Eigen::MatrixXd& feature_gradient(int c) const;

  /// L_phi(mu) = (int phi_1 dmu, ..., int phi_N dmu)
  Eigen::VectorXd lin(const DiscreteMeasure& mu) const;

 private:
  GroundPtr ground_;
  Eigen::MatrixXd values_;
  std::shared_ptr<const GridGradient> grad_;
  Eigen::MatrixXd dvalues_[2];
};

using FeaturePtr = std::shared_ptr<const FeatureSet>;

/// Outer map psi: R^N -> R with its gradient.
struct OuterMap {
  int arity = 0;
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;

  static OuterMap identity();
  /// psi(v) = c . v
  static OuterMap linear(Eigen::VectorXd coeffs);
  /// psi(v) = sum_k coeffs[k] (w . v)^k
  static OuterMap polynomial(Eigen::VectorXd w, std::vector<double> coeffs);
  /// psi(v) = max_n (v_n + biases_n); gradient picks the first maximizer.
  static OuterMap max_of(Eigen::VectorXd biases);
};

class CylinderFunction {
 public:
  CylinderFunction(FeaturePtr features, OuterMap outer);

  const FeatureSet& features() const { return *features_; }
  const FeaturePtr& feature_ptr() const { return features_; }
  const OuterMap& outer() const { return outer_; }

  double eval(const DiscreteMeasure& mu) const;
  /// DF(mu, x) = sum_n d_n psi(L_phi(mu)) grad phi_n(x), as a P x 2 matrix.
  Eigen::MatrixXd grad_DF(const DiscreteMeasure& mu) const;
  /// Coefficients d psi(L_phi(mu)) (the first variation is their
  /// combination of the features).
  Eigen::VectorXd outer_gradient(const DiscreteMeasure& mu) const;

 private:
  FeaturePtr features_;
  OuterMap outer_;
};

double eval(const CylinderFunction& F, const DiscreteMeasure& mu);
Eigen::MatrixXd grad_DF(const CylinderFunction& F, const DiscreteMeasure& mu);

/// sum_j w_j sum_x |DF(mu_j, x)|^2 mu_j(x)
double pre_cheeger(const CylinderFunction& F, const std::vector<DiscreteMeasure>& data,
                   const Eigen::VectorXd& weights);
/// sum_j w_j sum_x DF(mu_j, x) . DG(mu_j, x) mu_j(x)
double pre_cheeger_inner(const CylinderFunction& F, const CylinderFunction& G,
                         const std::vector<DiscreteMeasure>& data, const Eigen::VectorXd& weights);

/// 1/N for each of N measures.
Eigen::VectorXd uniform_weights(std::size_t n);

}  // namespace wspace
