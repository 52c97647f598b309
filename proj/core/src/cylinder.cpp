#include "wspace/cylinder.hpp"

#include <cmath>

#include "wspace/error.hpp"
#include "wspace/parallel.hpp"

namespace wspace {

GridGradient::GridGradient(const GroundSpace& ground) {
  const auto& shape = ground.grid_shape();
  if (!shape) throw Error(ErrorCode::kNoSpatialGradient, "spatial gradients need a grid ground space");
  const int R = shape->rows, C = shape->cols;
  const int P = R * C;
  auto idx = [C](int r, int c) { return r * C + c; };
  for (int comp = 0; comp < 2; ++comp) {
    std::vector<Eigen::Triplet<double>> t;
    const int len = comp == 0 ? R : C;
    for (int r = 0; r < R; ++r) {
      for (int c = 0; c < C; ++c) {
        if (len == 1) continue;
        const int k = comp == 0 ? r : c;
        auto at = [&](int kk) { return comp == 0 ? idx(kk, c) : idx(r, kk); };
        const int row = idx(r, c);
        if (k == 0) {
          t.emplace_back(row, at(1), 1.0);
          t.emplace_back(row, at(0), -1.0);
        } else if (k == len - 1) {
          t.emplace_back(row, at(len - 1), 1.0);
          t.emplace_back(row, at(len - 2), -1.0);
        } else {
          t.emplace_back(row, at(k + 1), 0.5);
          t.emplace_back(row, at(k - 1), -0.5);
        }
      }
    }
    g_[comp].resize(P, P);
    g_[comp].setFromTriplets(t.begin(), t.end());
  }
}

Eigen::MatrixXd GridGradient::apply(const Eigen::VectorXd& f) const {
  Eigen::MatrixXd out(f.size(), 2);
  out.col(0) = g_[0] * f;
  out.col(1) = g_[1] * f;
  return out;
}

Eigen::VectorXd GridGradient::apply_transpose(const Eigen::MatrixXd& field) const {
  Eigen::VectorXd out = g_[0].transpose() * field.col(0);
  out += g_[1].transpose() * field.col(1);
  return out;
}

double GridGradient::energy(const Eigen::VectorXd& f, const Eigen::VectorXd& mu) const {
  const Eigen::VectorXd gr = g_[0] * f;
  const Eigen::VectorXd gc = g_[1] * f;
  return (gr.array().square() + gc.array().square()).matrix().dot(mu);
}

Eigen::SparseMatrix<double> GridGradient::energy_operator(const Eigen::VectorXd& mu) const {
  Eigen::SparseMatrix<double> q = g_[0].transpose() * mu.asDiagonal() * g_[0];
  q += g_[1].transpose() * mu.asDiagonal() * g_[1];
  return q;
}

std::shared_ptr<const GridGradient> grid_gradient(const GroundPtr& ground) {
  return std::make_shared<const GridGradient>(*ground);
}

FeatureSet::FeatureSet(GroundPtr ground, Eigen::MatrixXd values)
    : ground_(std::move(ground)), values_(std::move(values)) {
  if (!ground_) throw Error(ErrorCode::kInvalidArgument, "feature set needs a ground space");
  if (values_.cols() != static_cast<Eigen::Index>(ground_->size())) {
    throw Error(ErrorCode::kDimensionMismatch, "feature length does not match the ground space");
  }
  if (ground_->is_grid()) {
    grad_ = grid_gradient(ground_);
    for (int c = 0; c < 2; ++c) {
      dvalues_[c] = (grad_->component(c) * values_.transpose()).transpose();
    }
  }
}

const GridGradient& FeatureSet::gradient() const {
  if (!grad_) throw Error(ErrorCode::kNoSpatialGradient, "ground space has no grid structure");
  return *grad_;
}

const Eigen::MatrixXd& FeatureSet::feature_gradient(int c) const {
  if (!grad_) throw Error(ErrorCode::kNoSpatialGradient, "ground space has no grid structure");
  return dvalues_[c];
}

Eigen::VectorXd FeatureSet::lin(const DiscreteMeasure& mu) const {
  if (!same_ground(*mu.ground(), *ground_)) {
    throw Error(ErrorCode::kGroundMismatch, "measure and features live on different ground spaces");
  }
  return values_ * mu.weights();
}

OuterMap OuterMap::identity() { return linear(Eigen::VectorXd::Ones(1)); }

OuterMap OuterMap::linear(Eigen::VectorXd coeffs) {
  OuterMap m;
  m.arity = static_cast<int>(coeffs.size());
  m.value = [coeffs](const Eigen::VectorXd& v) { return coeffs.dot(v); };
  m.gradient = [coeffs](const Eigen::VectorXd&) { return coeffs; };
  return m;
}

OuterMap OuterMap::polynomial(Eigen::VectorXd w, std::vector<double> coeffs) {
  OuterMap m;
  m.arity = static_cast<int>(w.size());
  m.value = [w, coeffs](const Eigen::VectorXd& v) {
    const double s = w.dot(v);
    double acc = 0.0;
    for (std::size_t k = coeffs.size(); k-- > 0;) acc = acc * s + coeffs[k];
    return acc;
  };
  m.gradient = [w, coeffs](const Eigen::VectorXd& v) {
    const double s = w.dot(v);
    double d = 0.0;
    for (std::size_t k = coeffs.size(); k-- > 1;) d = d * s + static_cast<double>(k) * coeffs[k];
    return Eigen::VectorXd(d * w);
  };
  return m;
}

OuterMap OuterMap::max_of(Eigen::VectorXd biases) {
  OuterMap m;
  m.arity = static_cast<int>(biases.size());
  m.value = [biases](const Eigen::VectorXd& v) { return (v + biases).maxCoeff(); };
  m.gradient = [biases](const Eigen::VectorXd& v) {
    Eigen::Index arg = 0;
    (v + biases).maxCoeff(&arg);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(v.size());
    g(arg) = 1.0;
    return g;
  };
  return m;
}

CylinderFunction::CylinderFunction(FeaturePtr features, OuterMap outer)
    : features_(std::move(features)), outer_(std::move(outer)) {
  if (!features_) throw Error(ErrorCode::kInvalidArgument, "cylinder function needs features");
  if (outer_.arity != features_->count()) {
    throw Error(ErrorCode::kDimensionMismatch, "outer map arity does not match the feature count");
  }
}

double CylinderFunction::eval(const DiscreteMeasure& mu) const {
  return outer_.value(features_->lin(mu));
}

Eigen::VectorXd CylinderFunction::outer_gradient(const DiscreteMeasure& mu) const {
  return outer_.gradient(features_->lin(mu));
}

Eigen::MatrixXd CylinderFunction::grad_DF(const DiscreteMeasure& mu) const {
  const Eigen::VectorXd d = outer_gradient(mu);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(mu.size()), 2);
  for (int c = 0; c < 2; ++c) {
    out.col(c) = features_->feature_gradient(c).transpose() * d;
  }
  return out;
}

double eval(const CylinderFunction& F, const DiscreteMeasure& mu) { return F.eval(mu); }

Eigen::MatrixXd grad_DF(const CylinderFunction& F, const DiscreteMeasure& mu) {
  return F.grad_DF(mu);
}

double pre_cheeger_inner(const CylinderFunction& F, const CylinderFunction& G,
                         const std::vector<DiscreteMeasure>& data, const Eigen::VectorXd& weights) {
  if (static_cast<std::size_t>(weights.size()) != data.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "one weight per measure required");
  }
  std::vector<double> terms(data.size());
  parallel_for(data.size(), [&](std::size_t j) {
    const auto& mu = data[j];
    const Eigen::MatrixXd dF = F.grad_DF(mu);
    const Eigen::MatrixXd dG = &F == &G ? dF : G.grad_DF(mu);
    terms[j] = weights(static_cast<Eigen::Index>(j)) *
               (dF.cwiseProduct(dG).rowwise().sum()).dot(mu.weights());
  });
  return pairwise_sum(terms);
}

double pre_cheeger(const CylinderFunction& F, const std::vector<DiscreteMeasure>& data,
                   const Eigen::VectorXd& weights) {
  return pre_cheeger_inner(F, F, data, weights);
}

Eigen::VectorXd uniform_weights(std::size_t n) {
  return Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n));
}

}  // namespace wspace
