#include "wspace/relu_network.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "wspace/error.hpp"

namespace wspace {

void Gradients::add_scaled(const Gradients& other, double s) {
  for (std::size_t i = 0; i < dW.size(); ++i) {
    if (dW[i].size() != 0) dW[i] += s * other.dW[i];
    if (db[i].size() != 0) db[i] += s * other.db[i];
  }
}

double Gradients::squared_norm() const {
  double acc = 0.0;
  for (std::size_t i = 0; i < dW.size(); ++i) acc += dW[i].squaredNorm() + db[i].squaredNorm();
  return acc;
}

ReluNetwork::ReluNetwork(std::vector<Layer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw Error(ErrorCode::kInvalidArgument, "network needs at least one layer");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    if (l.b.size() != l.W.rows()) throw Error(ErrorCode::kDimensionMismatch, "bias length mismatch in layer " + std::to_string(i));
    if (i > 0 && l.W.cols() != layers_[i - 1].W.rows()) {
      throw Error(ErrorCode::kDimensionMismatch, "layer " + std::to_string(i) + " input width mismatch");
    }
  }
  if (layers_.back().out() != 1) throw Error(ErrorCode::kDimensionMismatch, "network output must be scalar");
}

std::size_t ReluNetwork::parameter_count(bool trainable_only) const {
  std::size_t n = 0;
  for (const auto& l : layers_) {
    if (trainable_only && !l.trainable) continue;
    n += static_cast<std::size_t>(l.W.size() + l.b.size());
  }
  return n;
}

double ReluNetwork::forward(const Eigen::VectorXd& x) const {
  if (x.size() != input_dim()) throw Error(ErrorCode::kDimensionMismatch, "input has the wrong dimension");
  Eigen::VectorXd a = x;
  for (const auto& l : layers_) {
    Eigen::VectorXd z = l.W * a + l.b;
    if (l.act == Activation::kRelu) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a(0);
}

Eigen::RowVectorXd ReluNetwork::forward_batch(const Eigen::MatrixXd& X) const {
  if (X.rows() != input_dim()) throw Error(ErrorCode::kDimensionMismatch, "input has the wrong dimension");
  Eigen::MatrixXd a = X;
  for (const auto& l : layers_) {
    Eigen::MatrixXd z = l.W * a;
    z.colwise() += l.b;
    if (l.act == Activation::kRelu) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a.row(0);
}

Eigen::RowVectorXd ReluNetwork::forward_batch(const Eigen::MatrixXd& X, ForwardCache& cache) const {
  if (X.rows() != input_dim()) throw Error(ErrorCode::kDimensionMismatch, "input has the wrong dimension");
  const std::size_t L = layers_.size();
  cache.inputs.assign(L, Eigen::MatrixXd());
  cache.masks.assign(L, Eigen::MatrixXd());
  cache.unit_delta.clear();
  Eigen::MatrixXd a = X;
  for (std::size_t i = 0; i < L; ++i) {
    const Layer& l = layers_[i];
    cache.inputs[i] = a;
    Eigen::MatrixXd z = l.W * a;
    z.colwise() += l.b;
    if (l.act == Activation::kRelu) {
      cache.masks[i] = (z.array() > 0.0).cast<double>().matrix();
      z = z.cwiseMax(0.0);
    }
    a = std::move(z);
  }
  cache.output = a.row(0);
  return cache.output;
}

void ReluNetwork::fill_unit_deltas(ForwardCache& cache) const {
  if (!cache.unit_delta.empty()) return;
  const std::size_t L = layers_.size();
  if (cache.inputs.size() != L) throw Error(ErrorCode::kInvalidArgument, "forward cache is empty");
  const Eigen::Index B = cache.inputs[0].cols();
  cache.unit_delta.assign(L, Eigen::MatrixXd());
  Eigen::MatrixXd g = Eigen::MatrixXd::Ones(1, B);
  for (std::size_t ii = L; ii-- > 0;) {
    const Layer& l = layers_[ii];
    Eigen::MatrixXd d = l.act == Activation::kRelu ? Eigen::MatrixXd(g.cwiseProduct(cache.masks[ii])) : g;
    if (ii > 0) g = l.W.transpose() * d;
    cache.unit_delta[ii] = std::move(d);
  }
}

Eigen::MatrixXd ReluNetwork::input_gradients(const ForwardCache& cache) const {
  auto& c = const_cast<ForwardCache&>(cache);
  fill_unit_deltas(c);
  return layers_[0].W.transpose() * c.unit_delta[0];
}

Gradients ReluNetwork::zero_gradients() const {
  Gradients g;
  for (const auto& l : layers_) {
    if (l.trainable) {
      g.dW.push_back(Eigen::MatrixXd::Zero(l.W.rows(), l.W.cols()));
      g.db.push_back(Eigen::VectorXd::Zero(l.b.size()));
    } else {
      g.dW.emplace_back();
      g.db.emplace_back();
    }
  }
  return g;
}

Gradients ReluNetwork::backward(ForwardCache& cache, const Eigen::RowVectorXd& c,
                                const Eigen::MatrixXd* Ubar) const {
  fill_unit_deltas(cache);
  const std::size_t L = layers_.size();
  const Eigen::Index B = cache.inputs[0].cols();
  if (c.size() != B) throw Error(ErrorCode::kDimensionMismatch, "output weights do not match the batch");
  Gradients g = zero_gradients();
  for (std::size_t i = 0; i < L; ++i) {
    if (!layers_[i].trainable) continue;
    const Eigen::MatrixXd dc = cache.unit_delta[i] * c.asDiagonal();
    g.dW[i].noalias() += dc * cache.inputs[i].transpose();
    g.db[i] += dc.rowwise().sum();
  }
  if (Ubar != nullptr) {
    if (Ubar->rows() != input_dim() || Ubar->cols() != B) {
      throw Error(ErrorCode::kDimensionMismatch, "input-gradient adjoint has the wrong shape");
    }
    // U = W_0^T delta_0 with delta_i = m_i (W_{i+1}^T delta_{i+1}); biases do not enter.
    if (layers_[0].trainable) g.dW[0].noalias() += cache.unit_delta[0] * Ubar->transpose();
    Eigen::MatrixXd dbar = layers_[0].W * (*Ubar);
    for (std::size_t i = 0; i + 1 < L; ++i) {
      Eigen::MatrixXd gbar = layers_[i].act == Activation::kRelu ? Eigen::MatrixXd(dbar.cwiseProduct(cache.masks[i])) : dbar;
      if (layers_[i + 1].trainable) g.dW[i + 1].noalias() += cache.unit_delta[i + 1] * gbar.transpose();
      if (i + 2 < L) dbar = layers_[i + 1].W * gbar;
    }
  }
  return g;
}

void ReluNetwork::set_trainable(bool all) {
  for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i].trainable = all || i == 0;
}

Eigen::VectorXd ReluNetwork::get_parameters() const {
  Eigen::VectorXd theta(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index pos = 0;
  for (const auto& l : layers_) {
    if (!l.trainable) continue;
    theta.segment(pos, l.W.size()) = Eigen::Map<const Eigen::VectorXd>(l.W.data(), l.W.size());
    pos += l.W.size();
    theta.segment(pos, l.b.size()) = l.b;
    pos += l.b.size();
  }
  return theta;
}

void ReluNetwork::set_parameters(const Eigen::VectorXd& theta) {
  if (static_cast<std::size_t>(theta.size()) != parameter_count()) {
    throw Error(ErrorCode::kDimensionMismatch, "parameter vector has the wrong length");
  }
  Eigen::Index pos = 0;
  for (auto& l : layers_) {
    if (!l.trainable) continue;
    Eigen::Map<Eigen::VectorXd>(l.W.data(), l.W.size()) = theta.segment(pos, l.W.size());
    pos += l.W.size();
    l.b = theta.segment(pos, l.b.size());
    pos += l.b.size();
  }
}

Eigen::VectorXd ReluNetwork::flatten(const Gradients& g) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index pos = 0;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (!layers_[i].trainable) continue;
    out.segment(pos, g.dW[i].size()) = Eigen::Map<const Eigen::VectorXd>(g.dW[i].data(), g.dW[i].size());
    pos += g.dW[i].size();
    out.segment(pos, g.db[i].size()) = g.db[i];
    pos += g.db[i].size();
  }
  return out;
}

Eigen::MatrixXd max_block_B(int l) {
  if (l < 1) throw Error(ErrorCode::kInvalidArgument, "block level must be >= 1");
  const Eigen::Index pairs = Eigen::Index(1) << (l - 1);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(3 * pairs, 2 * pairs);
  for (Eigen::Index j = 0; j < pairs; ++j) {
    B(3 * j, 2 * j) = 1.0;
    B(3 * j, 2 * j + 1) = -1.0;
    B(3 * j + 1, 2 * j + 1) = 1.0;
    B(3 * j + 2, 2 * j + 1) = -1.0;
  }
  return B;
}

Eigen::MatrixXd max_block_C(int l) {
  if (l < 1) throw Error(ErrorCode::kInvalidArgument, "block level must be >= 1");
  const Eigen::Index pairs = Eigen::Index(1) << (l - 1);
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(pairs, 3 * pairs);
  for (Eigen::Index j = 0; j < pairs; ++j) {
    C(j, 3 * j) = 1.0;
    C(j, 3 * j + 1) = 1.0;
    C(j, 3 * j + 2) = -1.0;
  }
  return C;
}

namespace {

std::vector<Layer> max_tree_layers(int k, bool trainable) {
  std::vector<Layer> layers;
  if (k == 0) {
    layers.push_back({Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1), Activation::kNone, trainable});
    return layers;
  }
  Eigen::MatrixXd Bk = max_block_B(k);
  layers.push_back({Bk, Eigen::VectorXd::Zero(Bk.rows()), Activation::kRelu, trainable});
  for (int l = k - 1; l >= 1; --l) {
    Eigen::MatrixXd D = max_block_B(l) * max_block_C(l + 1);
    layers.push_back({D, Eigen::VectorXd::Zero(D.rows()), Activation::kRelu, trainable});
  }
  Eigen::MatrixXd A1 = max_block_C(1);
  layers.push_back({A1, Eigen::VectorXd::Zero(1), Activation::kNone, trainable});
  return layers;
}

void check_depth(int k) {
  if (k < 0 || k > 24) throw Error(ErrorCode::kInvalidArgument, "max-tree depth must be in [0, 24]");
}

}  // namespace

ReluNetwork build_max_network(int k, bool trainable) {
  check_depth(k);
  return ReluNetwork(max_tree_layers(k, trainable));
}

double padding_bias(const AffineExport& bank, const std::vector<DiscreteMeasure>& data) {
  if (bank.A.rows() == 0) throw Error(ErrorCode::kEmptyBank, "bank has no rows");
  if (data.empty()) throw Error(ErrorCode::kInvalidArgument, "padding bias needs at least one measure");
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& mu : data) {
    lo = std::min(lo, (bank.A * mu.weights() + bank.b).maxCoeff());
  }
  return lo - 1.0;
}

ReluNetwork init_from_bank(const AffineExport& bank, int k, double pad_bias) {
  check_depth(k);
  const Eigen::Index width = Eigen::Index(1) << k;
  if (bank.A.rows() == 0) throw Error(ErrorCode::kEmptyBank, "bank has no rows");
  if (bank.A.rows() > width) {
    throw Error(ErrorCode::kTooManyRows, "bank has " + std::to_string(bank.A.rows()) + " rows but the tree takes " +
                                             std::to_string(width));
  }
  if (bank.b.size() != bank.A.rows()) throw Error(ErrorCode::kDimensionMismatch, "bank bias length mismatch");
  Layer first;
  first.W = Eigen::MatrixXd::Zero(width, bank.A.cols());
  first.b = Eigen::VectorXd::Constant(width, pad_bias);
  first.W.topRows(bank.A.rows()) = bank.A;
  first.b.head(bank.b.size()) = bank.b;
  first.act = Activation::kNone;
  first.trainable = true;
  std::vector<Layer> layers{std::move(first)};
  for (auto& l : max_tree_layers(k, false)) layers.push_back(std::move(l));
  return ReluNetwork(std::move(layers));
}

ReluNetwork init_from_bank(const AffineExport& bank, int k, const std::vector<DiscreteMeasure>& data) {
  return init_from_bank(bank, k, padding_bias(bank, data));
}

ReluNetwork init_random(Eigen::Index input_dim, int k, std::uint64_t seed) {
  check_depth(k);
  if (input_dim < 1) throw Error(ErrorCode::kInvalidArgument, "input dimension must be positive");
  const Eigen::Index width = Eigen::Index(1) << k;
  const double s = 1.0 / std::sqrt(static_cast<double>(input_dim));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-s, s);
  Layer first;
  first.W.resize(width, input_dim);
  first.b.resize(width);
  for (Eigen::Index i = 0; i < width; ++i) {
    for (Eigen::Index j = 0; j < input_dim; ++j) first.W(i, j) = U(rng);
  }
  for (Eigen::Index i = 0; i < width; ++i) first.b(i) = U(rng);
  first.act = Activation::kNone;
  std::vector<Layer> layers{std::move(first)};
  for (auto& l : max_tree_layers(k, false)) layers.push_back(std::move(l));
  return ReluNetwork(std::move(layers));
}

Eigen::MatrixXd stack_measures(const std::vector<DiscreteMeasure>& data) {
  if (data.empty()) return {};
  Eigen::MatrixXd X(static_cast<Eigen::Index>(data.front().size()), static_cast<Eigen::Index>(data.size()));
  for (std::size_t j = 0; j < data.size(); ++j) {
    if (data[j].size() != data.front().size()) throw Error(ErrorCode::kDimensionMismatch, "measures differ in size");
    X.col(static_cast<Eigen::Index>(j)) = data[j].weights();
  }
  return X;
}

void write_network(const ReluNetwork& net, const std::string& path, const std::string& config_hash) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path + " for writing");
  out.precision(17);
  out << "relunet 1\n";
  out << "config " << (config_hash.empty() ? "-" : config_hash) << "\n";
  out << "layers " << net.depth() << "\n";
  for (const auto& l : net.layers()) {
    out << l.W.rows() << ' ' << l.W.cols() << ' ' << (l.act == Activation::kRelu ? "relu" : "none") << ' '
        << (l.trainable ? 1 : 0) << "\n";
    for (Eigen::Index i = 0; i < l.W.rows(); ++i) {
      for (Eigen::Index j = 0; j < l.W.cols(); ++j) out << (j ? " " : "") << l.W(i, j);
      out << "\n";
    }
    for (Eigen::Index i = 0; i < l.b.size(); ++i) out << (i ? " " : "") << l.b(i);
    out << "\n";
  }
  if (!out) throw Error(ErrorCode::kIo, "write to " + path + " failed");
}

ReluNetwork read_network(const std::string& path, std::string* config_hash) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::string tag;
  int version = 0;
  if (!(in >> tag >> version) || tag != "relunet" || version != 1) {
    throw Error(ErrorCode::kParse, path + ": not a network file");
  }
  std::string hash;
  std::size_t count = 0;
  if (!(in >> tag >> hash) || tag != "config") throw Error(ErrorCode::kParse, path + ": missing config line");
  if (!(in >> tag >> count) || tag != "layers" || count == 0) throw Error(ErrorCode::kParse, path + ": bad layer count");
  std::vector<Layer> layers(count);
  for (auto& l : layers) {
    Eigen::Index r = 0, c = 0;
    std::string act;
    int trainable = 0;
    if (!(in >> r >> c >> act >> trainable) || r < 1 || c < 1 || (act != "relu" && act != "none")) {
      throw Error(ErrorCode::kParse, path + ": bad layer header");
    }
    l.W.resize(r, c);
    l.b.resize(r);
    for (Eigen::Index i = 0; i < r; ++i) {
      for (Eigen::Index j = 0; j < c; ++j) {
        if (!(in >> l.W(i, j))) throw Error(ErrorCode::kParse, path + ": truncated weights");
      }
    }
    for (Eigen::Index i = 0; i < r; ++i) {
      if (!(in >> l.b(i))) throw Error(ErrorCode::kParse, path + ": truncated biases");
    }
    l.act = act == "relu" ? Activation::kRelu : Activation::kNone;
    l.trainable = trainable != 0;
  }
  if (config_hash != nullptr) *config_hash = hash == "-" ? "" : hash;
  return ReluNetwork(std::move(layers));
}

}  // namespace wspace
