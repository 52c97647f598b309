#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wspace/cylinder.hpp"
#include "wspace/relu_network.hpp"

namespace wspace {

enum class NormMode { kH12, kL2 };

NormMode parse_norm_mode(const std::string& s);
std::string to_string(NormMode m);

/// Solution network F, adversary network H and the saddle-point settings.
struct SaddleState {
  SaddleState(ReluNetwork solution, ReluNetwork adversary, double lambda, int n_xi, int n_theta,
              NormMode mode = NormMode::kH12);

  ReluNetwork F;
  ReluNetwork H;
  double lambda;
  int n_xi;
  int n_theta;
  NormMode mode;
};

inline constexpr double kAdversaryNormFloor = 1e-8;

/// Pieces of the quotient on one batch.
struct SaddleTerms {
  double l2_inner = 0.0;    // (1/B) sum (F - y) H
  double energy_inner = 0.0;  // (1/B) sum int DF . DH dmu
  double numerator = 0.0;
  double denominator = 0.0;  // |H| in the selected norm
};

/// grad is needed whenever lambda > 0 or the mode is H12.
SaddleTerms saddle_terms(const SaddleState& s, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         const GridGradient* grad);

/// -numerator / |H|. Throws kDegenerateAdversary when |H| < 1e-8.
double loss_adversary(const SaddleState& s, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const GridGradient* grad);
/// numerator / |H|; the solution network minimizes it.
double loss_solution(const SaddleState& s, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const GridGradient* grad);

/// Loss and its gradient with respect to the adversary (resp. solution)
/// parameters, differentiating through the denominator.
BatchLoss adversary_loss_and_gradient(const SaddleState& s, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                      const GridGradient* grad);
BatchLoss solution_loss_and_gradient(const SaddleState& s, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                     const GridGradient* grad);

struct SaddleConfig {
  int epochs = 100;
  int batch_size = 64;
  double lr_solution = 1e-3;
  double lr_adversary = 1e-3;
  std::uint64_t seed = 0;
};

struct SaddleEpoch {
  int epoch = 0;
  double adversary_loss = 0.0;
  double solution_loss = 0.0;
  double train_error = 0.0;
  double test_error = 0.0;
  int skipped_steps = 0;
  double seconds = 0.0;
};

struct SaddleTrace {
  std::vector<SaddleEpoch> epochs;
};

/// Alternating mini-batch training: on every batch, n_xi Adam steps on H
/// followed by n_theta Adam steps on F. Losses in the trace are evaluated on
/// the full training set after each epoch. Steps hitting a degenerate
/// adversary are skipped and counted. Throws kDiverged on a non-finite loss.
SaddleTrace run_algorithm1(SaddleState& s, const Eigen::MatrixXd& X_train, const Eigen::VectorXd& y_train,
                           const Eigen::MatrixXd& X_test, const Eigen::VectorXd& y_test, const SaddleConfig& cfg,
                           const GridGradient* grad,
                           const std::function<void(const SaddleEpoch&)>& on_epoch = {});

void write_saddle_trace_csv(const SaddleTrace& trace, const std::string& path);

}  // namespace wspace
