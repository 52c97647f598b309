#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wspace/cylinder.hpp"
#include "wspace/measure.hpp"
#include "wspace/potential_bank.hpp"

namespace wspace {

enum class Activation { kRelu, kNone };

struct Layer {
  Eigen::MatrixXd W;
  Eigen::VectorXd b;
  Activation act = Activation::kRelu;
  bool trainable = true;

  Eigen::Index in() const { return W.cols(); }
  Eigen::Index out() const { return W.rows(); }
};

/// Intermediate state of a batched forward pass (one column per sample).
struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;  // inputs[i] feeds layer i
  std::vector<Eigen::MatrixXd> masks;   // 1 where the activation passes gradient
  std::vector<Eigen::MatrixXd> unit_delta;  // d output / d z_i
  Eigen::RowVectorXd output;
};

struct Gradients {
  std::vector<Eigen::MatrixXd> dW;
  std::vector<Eigen::VectorXd> db;

  void add_scaled(const Gradients& other, double s);
  double squared_norm() const;
};

/// Feed-forward network of affine layers with ReLU or identity activation.
/// The last layer must have a single output.
class ReluNetwork {
 public:
  ReluNetwork() = default;
  explicit ReluNetwork(std::vector<Layer> layers);

  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }
  Eigen::Index input_dim() const { return layers_.front().in(); }
  Eigen::Index output_dim() const { return layers_.back().out(); }
  std::size_t depth() const { return layers_.size(); }
  std::size_t parameter_count(bool trainable_only = true) const;

  double forward(const Eigen::VectorXd& x) const;
  double forward(const DiscreteMeasure& mu) const { return forward(mu.weights()); }
  /// X holds one input per column; returns one output per column.
  Eigen::RowVectorXd forward_batch(const Eigen::MatrixXd& X) const;
  Eigen::RowVectorXd forward_batch(const Eigen::MatrixXd& X, ForwardCache& cache) const;

  /// Columns U(:, j) = d output / d x at sample j (the network's first
  /// variation as a function on the ground points). Needs a filled cache.
  Eigen::MatrixXd input_gradients(const ForwardCache& cache) const;

  /// Gradient of sum_j c_j out_j + sum_j Ubar(:, j) . U(:, j) with respect to
  /// all trainable parameters, activation patterns held fixed. Ubar may be
  /// null. Non-trainable layers get zero-sized entries.
  Gradients backward(ForwardCache& cache, const Eigen::RowVectorXd& c,
                     const Eigen::MatrixXd* Ubar) const;

  Gradients zero_gradients() const;
  void set_trainable(bool all);

  /// Flattened trainable parameters (for finite-difference checks).
  Eigen::VectorXd get_parameters() const;
  void set_parameters(const Eigen::VectorXd& theta);
  Eigen::VectorXd flatten(const Gradients& g) const;

 private:
  void fill_unit_deltas(ForwardCache& cache) const;

  std::vector<Layer> layers_;
};

/// The fixed ReLU network computing max over 2^k inputs: layers
/// (B_k, D_{k-1}, ..., D_1) with ReLU followed by A_1, no biases.
ReluNetwork build_max_network(int k, bool trainable = false);

/// The max-tree blocks, exposed for inspection.
Eigen::MatrixXd max_block_B(int l);  // 3 2^(l-1) x 2^l
Eigen::MatrixXd max_block_C(int l);  // 2^(l-1) x 3 2^(l-1)

/// First layer (A, b) without activation followed by the max tree. Missing
/// rows up to 2^k are zero with bias pad_bias. Throws kTooManyRows.
ReluNetwork init_from_bank(const AffineExport& bank, int k, double pad_bias);
/// pad_bias = min over data of max(A J(mu) + b) - 1.
ReluNetwork init_from_bank(const AffineExport& bank, int k, const std::vector<DiscreteMeasure>& data);
double padding_bias(const AffineExport& bank, const std::vector<DiscreteMeasure>& data);

/// First layer uniform in +-1/sqrt(input_dim) (weights and biases).
ReluNetwork init_random(Eigen::Index input_dim, int k, std::uint64_t seed);

/// Stack measure weights into a matrix with one column per measure.
Eigen::MatrixXd stack_measures(const std::vector<DiscreteMeasure>& data);

void write_network(const ReluNetwork& net, const std::string& path, const std::string& config_hash = "");
ReluNetwork read_network(const std::string& path, std::string* config_hash = nullptr);

// ---------------------------------------------------------------- training

struct LossSpec {
  enum class Kind { kMae, kRegularized };
  Kind kind = Kind::kMae;
  double lambda = 0.0;
  double M = 0.0;  // truncation bound applied when reporting errors; 0 disables

  static LossSpec mae() { return {}; }
  static LossSpec regularized(double lambda, double M) { return {Kind::kRegularized, lambda, M}; }
};

/// sum_x |grad u(x)|^2 mu(x) for every column pair (u_j, mu_j).
Eigen::RowVectorXd energies(const GridGradient& grad, const Eigen::MatrixXd& U, const Eigen::MatrixXd& X);
/// Columns Q(mu_j) u_j.
Eigen::MatrixXd apply_energy_operator(const GridGradient& grad, const Eigen::MatrixXd& U,
                                      const Eigen::MatrixXd& X);

struct BatchLoss {
  double value = 0.0;
  Gradients grad;
};

/// mae: (1/B) sum |out - t|. regularized: (1/B) sum (t - out)^2 +
/// lambda (out^2 + sum_x |D out(x)|^2 mu(x)). grad may be null for mae.
BatchLoss loss_and_gradient(const ReluNetwork& net, const Eigen::MatrixXd& X,
                            const Eigen::VectorXd& targets, const LossSpec& loss,
                            const GridGradient* grad, bool want_gradient = true);

/// Mean of |t - clamp(out)| / |t| over columns (clamp only when M > 0).
double mean_relative_error(const ReluNetwork& net, const Eigen::MatrixXd& X,
                           const Eigen::VectorXd& targets, double M = 0.0);

class Adam {
 public:
  Adam(const ReluNetwork& net, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(ReluNetwork& net, const Gradients& g);
  long steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  Gradients m_, v_;
};

struct TrainConfig {
  int epochs = 100;
  int batch_size = 64;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  LossSpec loss;
  /// Stop after the first epoch whose test error falls below this value
  /// (disabled when negative).
  double stop_below_test_error = -1.0;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double train_error = 0.0;
  double test_error = 0.0;
  double seconds = 0.0;
};

struct TrainTrace {
  std::vector<EpochRecord> epochs;
};

/// Mini-batch Adam. Record 0 is the state before training. Throws kDiverged
/// on a non-finite batch loss.
TrainTrace train(ReluNetwork& net, const Eigen::MatrixXd& X_train, const Eigen::VectorXd& y_train,
                 const Eigen::MatrixXd& X_test, const Eigen::VectorXd& y_test, const TrainConfig& cfg,
                 const GridGradient* grad = nullptr,
                 const std::function<void(const EpochRecord&)>& on_epoch = {});

void write_trace_csv(const TrainTrace& trace, const std::string& path);

/// Stable hash of a training configuration, for manifests and model files.
std::string config_hash(const TrainConfig& cfg);

}  // namespace wspace
