#include "wspace/adversarial.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "wspace/error.hpp"

namespace wspace {

NormMode parse_norm_mode(const std::string& s) {
  if (s == "h12" || s == "H12") return NormMode::kH12;
  if (s == "l2" || s == "L2") return NormMode::kL2;
  throw Error(ErrorCode::kInvalidArgument, "unknown norm mode '" + s + "' (expected h12|l2)");
}

std::string to_string(NormMode m) { return m == NormMode::kH12 ? "h12" : "l2"; }

SaddleState::SaddleState(ReluNetwork solution, ReluNetwork adversary, double lambda_, int n_xi_, int n_theta_,
                         NormMode mode_)
    : F(std::move(solution)), H(std::move(adversary)), lambda(lambda_), n_xi(n_xi_), n_theta(n_theta_), mode(mode_) {
  if (n_xi < 1 || n_theta < 1) throw Error(ErrorCode::kInvalidArgument, "N_xi and N_theta must be >= 1");
  if (!(lambda >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "lambda must be >= 0");
  if (F.input_dim() != H.input_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "solution and adversary take inputs of different size");
  }
}

namespace {

struct Evaluated {
  ForwardCache cf, ch;
  Eigen::RowVectorXd f, h, r;
  Eigen::MatrixXd QuF, QuH;  // Q(mu_j) u_j, only when needed
  SaddleTerms t;
};

bool uses_energy_inner(const SaddleState& s) { return s.mode == NormMode::kH12 && s.lambda != 0.0; }

Evaluated evaluate(const SaddleState& s, const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GridGradient* grad) {
  const Eigen::Index B = X.cols();
  if (B == 0) throw Error(ErrorCode::kInvalidArgument, "empty batch");
  if (y.size() != B) throw Error(ErrorCode::kDimensionMismatch, "targets do not match the batch");
  const double inv = 1.0 / static_cast<double>(B);
  Evaluated e;
  e.f = s.F.forward_batch(X, e.cf);
  e.h = s.H.forward_batch(X, e.ch);
  e.r = e.f - y.transpose();
  e.t.l2_inner = inv * e.r.dot(e.h);
  double hh = inv * e.h.squaredNorm();
  if (s.mode == NormMode::kH12) {
    if (grad == nullptr) throw Error(ErrorCode::kNoSpatialGradient, "the H12 norm needs a grid gradient");
    const Eigen::MatrixXd uH = s.H.input_gradients(e.ch);
    e.QuH = apply_energy_operator(*grad, uH, X);
    hh += inv * uH.cwiseProduct(e.QuH).sum();
    if (uses_energy_inner(s)) {
      const Eigen::MatrixXd uF = s.F.input_gradients(e.cf);
      e.QuF = apply_energy_operator(*grad, uF, X);
      e.t.energy_inner = inv * uF.cwiseProduct(e.QuH).sum();
    }
  }
  e.t.numerator = e.t.l2_inner + (uses_energy_inner(s) ? s.lambda * e.t.energy_inner : 0.0);
  e.t.denominator = std::sqrt(std::max(hh, 0.0));
  return e;
}

void check_floor(const SaddleTerms& t) {
  if (!(t.denominator >= kAdversaryNormFloor)) {
    throw Error(ErrorCode::kDegenerateAdversary, "adversary norm " + std::to_string(t.denominator) + " below floor");
  }
}

}  // namespace

SaddleTerms saddle_terms(const SaddleState& s, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         const GridGradient* grad) {
  return evaluate(s, X, y, grad).t;
}

double loss_adversary(const SaddleState& s, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const GridGradient* grad) {
  const SaddleTerms t = saddle_terms(s, X, y, grad);
  check_floor(t);
  return -t.numerator / t.denominator;
}

double loss_solution(const SaddleState& s, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const GridGradient* grad) {
  const SaddleTerms t = saddle_terms(s, X, y, grad);
  check_floor(t);
  return t.numerator / t.denominator;
}

BatchLoss adversary_loss_and_gradient(const SaddleState& s, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                      const GridGradient* grad) {
  Evaluated e = evaluate(s, X, y, grad);
  check_floor(e.t);
  const double inv = 1.0 / static_cast<double>(X.cols());
  const double a = e.t.numerator;
  const double den = e.t.denominator;
  // loss = -a / den, den = sqrt(q): dloss = -da / den + a / (2 den^3) dq
  const double wa = -1.0 / den;
  const double wq = a / (2.0 * den * den * den);
  const Eigen::RowVectorXd c = wa * inv * e.r + wq * 2.0 * inv * e.h;
  Eigen::MatrixXd Ubar;
  const Eigen::MatrixXd* up = nullptr;
  if (s.mode == NormMode::kH12) {
    Ubar = (wq * 2.0 * inv) * e.QuH;
    if (uses_energy_inner(s)) Ubar += (wa * s.lambda * inv) * e.QuF;
    up = &Ubar;
  }
  BatchLoss out;
  out.value = -a / den;
  out.grad = s.H.backward(e.ch, c, up);
  return out;
}

BatchLoss solution_loss_and_gradient(const SaddleState& s, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                     const GridGradient* grad) {
  Evaluated e = evaluate(s, X, y, grad);
  check_floor(e.t);
  const double inv = 1.0 / static_cast<double>(X.cols());
  const double den = e.t.denominator;
  const Eigen::RowVectorXd c = (inv / den) * e.h;
  Eigen::MatrixXd Ubar;
  const Eigen::MatrixXd* up = nullptr;
  if (uses_energy_inner(s)) {
    Ubar = (s.lambda * inv / den) * e.QuH;
    up = &Ubar;
  }
  BatchLoss out;
  out.value = e.t.numerator / den;
  out.grad = s.F.backward(e.cf, c, up);
  return out;
}

SaddleTrace run_algorithm1(SaddleState& s, const Eigen::MatrixXd& X_train, const Eigen::VectorXd& y_train,
                           const Eigen::MatrixXd& X_test, const Eigen::VectorXd& y_test, const SaddleConfig& cfg,
                           const GridGradient* grad, const std::function<void(const SaddleEpoch&)>& on_epoch) {
  if (cfg.epochs < 0) throw Error(ErrorCode::kInvalidArgument, "epochs must be >= 0");
  if (cfg.batch_size < 1) throw Error(ErrorCode::kInvalidArgument, "batch size must be >= 1");
  if (X_train.cols() == 0) throw Error(ErrorCode::kInvalidArgument, "empty training set");
  if (y_train.size() != X_train.cols() || y_test.size() != X_test.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "targets do not match the inputs");
  }
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  auto record = [&](int epoch, int skipped) {
    SaddleEpoch rec;
    rec.epoch = epoch;
    const SaddleTerms t = saddle_terms(s, X_train, y_train, grad);
    if (t.denominator >= kAdversaryNormFloor) {
      rec.adversary_loss = -t.numerator / t.denominator;
      rec.solution_loss = t.numerator / t.denominator;
    } else {
      rec.adversary_loss = rec.solution_loss = std::nan("");
    }
    rec.train_error = mean_relative_error(s.F, X_train, y_train);
    rec.test_error = X_test.cols() ? mean_relative_error(s.F, X_test, y_test) : 0.0;
    rec.skipped_steps = skipped;
    rec.seconds = std::chrono::duration<double>(clock::now() - start).count();
    if (on_epoch) on_epoch(rec);
    return rec;
  };

  SaddleTrace trace;
  trace.epochs.push_back(record(0, 0));
  Adam opt_f(s.F, cfg.lr_solution);
  Adam opt_h(s.H, cfg.lr_adversary);
  std::mt19937_64 rng(cfg.seed);
  const Eigen::Index n = X_train.cols();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index(0));
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    int skipped = 0;
    for (Eigen::Index start_j = 0; start_j < n; start_j += cfg.batch_size) {
      const Eigen::Index B = std::min<Eigen::Index>(cfg.batch_size, n - start_j);
      Eigen::MatrixXd Xb(X_train.rows(), B);
      Eigen::VectorXd yb(B);
      for (Eigen::Index j = 0; j < B; ++j) {
        const Eigen::Index src = order[static_cast<std::size_t>(start_j + j)];
        Xb.col(j) = X_train.col(src);
        yb(j) = y_train(src);
      }
      auto guarded = [&](auto&& fn) {
        try {
          fn();
        } catch (const Error& err) {
          if (err.code() != ErrorCode::kDegenerateAdversary) throw;
          ++skipped;
        }
      };
      for (int k = 0; k < s.n_xi; ++k) {
        guarded([&] {
          BatchLoss bl = adversary_loss_and_gradient(s, Xb, yb, grad);
          if (!std::isfinite(bl.value)) throw Error(ErrorCode::kDiverged, "adversary loss is not finite");
          opt_h.step(s.H, bl.grad);
        });
      }
      for (int k = 0; k < s.n_theta; ++k) {
        guarded([&] {
          BatchLoss bl = solution_loss_and_gradient(s, Xb, yb, grad);
          if (!std::isfinite(bl.value)) throw Error(ErrorCode::kDiverged, "solution loss is not finite");
          opt_f.step(s.F, bl.grad);
        });
      }
    }
    trace.epochs.push_back(record(epoch, skipped));
  }
  return trace;
}

void write_saddle_trace_csv(const SaddleTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path + " for writing");
  out.precision(10);
  out << "epoch,adversary_loss,solution_loss,train_error,test_error,skipped_steps,seconds\n";
  for (const auto& r : trace.epochs) {
    out << r.epoch << ',' << r.adversary_loss << ',' << r.solution_loss << ',' << r.train_error << ','
        << r.test_error << ',' << r.skipped_steps << ',' << r.seconds << '\n';
  }
}

}  // namespace wspace
