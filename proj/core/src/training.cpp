#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "wspace/erm.hpp"
#include "wspace/error.hpp"
#include "wspace/relu_network.hpp"

namespace wspace {

Eigen::RowVectorXd energies(const GridGradient& grad, const Eigen::MatrixXd& U, const Eigen::MatrixXd& X) {
  if (U.rows() != X.rows() || U.cols() != X.cols()) throw Error(ErrorCode::kDimensionMismatch, "U and X differ in shape");
  Eigen::RowVectorXd e = Eigen::RowVectorXd::Zero(U.cols());
  for (int c = 0; c < 2; ++c) {
    const Eigen::MatrixXd GU = grad.component(c) * U;
    e += (GU.array().square() * X.array()).colwise().sum().matrix();
  }
  return e;
}

Eigen::MatrixXd apply_energy_operator(const GridGradient& grad, const Eigen::MatrixXd& U, const Eigen::MatrixXd& X) {
  if (U.rows() != X.rows() || U.cols() != X.cols()) throw Error(ErrorCode::kDimensionMismatch, "U and X differ in shape");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(U.rows(), U.cols());
  for (int c = 0; c < 2; ++c) {
    const Eigen::MatrixXd GU = grad.component(c) * U;
    out.noalias() += grad.component(c).transpose() * GU.cwiseProduct(X);
  }
  return out;
}

BatchLoss loss_and_gradient(const ReluNetwork& net, const Eigen::MatrixXd& X, const Eigen::VectorXd& targets,
                            const LossSpec& loss, const GridGradient* grad, bool want_gradient) {
  const Eigen::Index B = X.cols();
  if (targets.size() != B) throw Error(ErrorCode::kDimensionMismatch, "targets do not match the batch");
  if (B == 0) throw Error(ErrorCode::kInvalidArgument, "empty batch");
  ForwardCache cache;
  const Eigen::RowVectorXd out = net.forward_batch(X, cache);
  const Eigen::RowVectorXd r = out - targets.transpose();
  const double inv = 1.0 / static_cast<double>(B);
  BatchLoss result;
  if (loss.kind == LossSpec::Kind::kMae) {
    result.value = r.cwiseAbs().sum() * inv;
    if (want_gradient) {
      Eigen::RowVectorXd c = r.unaryExpr([inv](double v) { return v > 0.0 ? inv : (v < 0.0 ? -inv : 0.0); });
      result.grad = net.backward(cache, c, nullptr);
    }
    return result;
  }
  const double lam = loss.lambda;
  double energy_sum = 0.0;
  Eigen::MatrixXd Ubar;
  if (lam != 0.0) {
    if (grad == nullptr) throw Error(ErrorCode::kNoSpatialGradient, "regularized loss needs a grid gradient");
    const Eigen::MatrixXd U = net.input_gradients(cache);
    energy_sum = energies(*grad, U, X).sum();
    if (want_gradient) Ubar = (2.0 * lam * inv) * apply_energy_operator(*grad, U, X);
  }
  result.value = inv * (r.squaredNorm() + lam * (out.squaredNorm() + energy_sum));
  if (want_gradient) {
    const Eigen::RowVectorXd c = (2.0 * inv) * (r + lam * out);
    result.grad = net.backward(cache, c, lam != 0.0 ? &Ubar : nullptr);
  }
  return result;
}

double mean_relative_error(const ReluNetwork& net, const Eigen::MatrixXd& X, const Eigen::VectorXd& targets,
                           double M) {
  if (X.cols() == 0) return 0.0;
  const Eigen::RowVectorXd out = net.forward_batch(X);
  double acc = 0.0;
  for (Eigen::Index j = 0; j < out.size(); ++j) {
    const double v = M > 0.0 ? clamp_value(out(j), M) : out(j);
    acc += relative_error(targets(j), v);
  }
  return acc / static_cast<double>(out.size());
}

Adam::Adam(const ReluNetwork& net, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(net.zero_gradients()), v_(net.zero_gradients()) {
  if (!(lr > 0.0)) throw Error(ErrorCode::kInvalidArgument, "learning rate must be positive");
}

void Adam::step(ReluNetwork& net, const Gradients& g) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    m = beta1_ * m + (1.0 - beta1_) * grad;
    v = beta2_ * v + (1.0 - beta2_) * grad.cwiseProduct(grad);
    param.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
  };
  auto& layers = net.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (!layers[i].trainable) continue;
    if (m_.dW[i].size() == 0) {
      m_.dW[i] = Eigen::MatrixXd::Zero(layers[i].W.rows(), layers[i].W.cols());
      v_.dW[i] = m_.dW[i];
      m_.db[i] = Eigen::VectorXd::Zero(layers[i].b.size());
      v_.db[i] = m_.db[i];
    }
    update(layers[i].W, g.dW[i], m_.dW[i], v_.dW[i]);
    update(layers[i].b, g.db[i], m_.db[i], v_.db[i]);
  }
}

TrainTrace train(ReluNetwork& net, const Eigen::MatrixXd& X_train, const Eigen::VectorXd& y_train,
                 const Eigen::MatrixXd& X_test, const Eigen::VectorXd& y_test, const TrainConfig& cfg,
                 const GridGradient* grad, const std::function<void(const EpochRecord&)>& on_epoch) {
  if (cfg.epochs < 0) throw Error(ErrorCode::kInvalidArgument, "epochs must be >= 0");
  if (cfg.batch_size < 1) throw Error(ErrorCode::kInvalidArgument, "batch size must be >= 1");
  if (X_train.cols() == 0) throw Error(ErrorCode::kInvalidArgument, "empty training set");
  if (y_train.size() != X_train.cols() || y_test.size() != X_test.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "targets do not match the inputs");
  }
  const double M = cfg.loss.kind == LossSpec::Kind::kRegularized ? cfg.loss.M : 0.0;
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  auto record = [&](int epoch, double loss) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss;
    rec.train_error = mean_relative_error(net, X_train, y_train, M);
    rec.test_error = X_test.cols() ? mean_relative_error(net, X_test, y_test, M) : 0.0;
    rec.seconds = std::chrono::duration<double>(clock::now() - start).count();
    if (on_epoch) on_epoch(rec);
    return rec;
  };

  TrainTrace trace;
  trace.epochs.push_back(record(0, loss_and_gradient(net, X_train, y_train, cfg.loss, grad, false).value));
  if (cfg.stop_below_test_error >= 0.0 && trace.epochs.back().test_error < cfg.stop_below_test_error) return trace;

  Adam opt(net, cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps);
  std::mt19937_64 rng(cfg.seed);
  const Eigen::Index n = X_train.cols();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index(0));
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (Eigen::Index start_j = 0; start_j < n; start_j += cfg.batch_size) {
      const Eigen::Index B = std::min<Eigen::Index>(cfg.batch_size, n - start_j);
      Eigen::MatrixXd Xb(X_train.rows(), B);
      Eigen::VectorXd yb(B);
      for (Eigen::Index j = 0; j < B; ++j) {
        const Eigen::Index src = order[static_cast<std::size_t>(start_j + j)];
        Xb.col(j) = X_train.col(src);
        yb(j) = y_train(src);
      }
      BatchLoss bl = loss_and_gradient(net, Xb, yb, cfg.loss, grad, true);
      if (!std::isfinite(bl.value) || !std::isfinite(bl.grad.squared_norm())) {
        throw Error(ErrorCode::kDiverged, "training diverged in epoch " + std::to_string(epoch));
      }
      total += bl.value * static_cast<double>(B);
      opt.step(net, bl.grad);
    }
    trace.epochs.push_back(record(epoch, total / static_cast<double>(n)));
    if (cfg.stop_below_test_error >= 0.0 && trace.epochs.back().test_error < cfg.stop_below_test_error) break;
  }
  return trace;
}

void write_trace_csv(const TrainTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path + " for writing");
  out.precision(10);
  out << "epoch,train_loss,train_error,test_error,seconds\n";
  for (const auto& r : trace.epochs) {
    out << r.epoch << ',' << r.train_loss << ',' << r.train_error << ',' << r.test_error << ',' << r.seconds << '\n';
  }
}

std::string config_hash(const TrainConfig& cfg) {
  std::ostringstream s;
  s.precision(17);
  s << cfg.epochs << '|' << cfg.batch_size << '|' << cfg.lr << '|' << cfg.beta1 << '|' << cfg.beta2 << '|'
    << cfg.adam_eps << '|' << cfg.seed << '|' << static_cast<int>(cfg.loss.kind) << '|' << cfg.loss.lambda << '|'
    << cfg.loss.M << '|' << cfg.stop_below_test_error;
  return stable_hash(s.str());
}

}  // namespace wspace
