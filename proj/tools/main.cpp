// wspace command line tool.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "wspace/adversarial.hpp"
#include "wspace/erm.hpp"
#include "wspace/error.hpp"
#include "wspace/experiment.hpp"
#include "wspace/parallel.hpp"
#include "wspace/potential_bank.hpp"
#include "wspace/relu_network.hpp"
#include "wspace/subcover.hpp"
#include "wspace/synthetic.hpp"
#include "wspace/transport.hpp"
#include "wspace/version.hpp"

namespace {

using namespace wspace;
using json = nlohmann::json;

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

bool is_integer(const std::string& s) {
  return !s.empty() && s.find_first_not_of("0123456789") == std::string::npos;
}

// --ref accepts a training index, a selector (uniform, dirac:i, train:i,
// test:i) or a file holding one row of weights.
DiscreteMeasure resolve_reference(const MeasureDataset& data, const std::string& ref) {
  if (is_integer(ref)) return select_reference(data, "train:" + ref);
  if (ref == "uniform" || ref.find(':') != std::string::npos) return select_reference(data, ref);
  std::ifstream in(ref);
  if (!in) throw Error(ErrorCode::kIo, "cannot open reference " + ref);
  Eigen::VectorXd w(static_cast<Eigen::Index>(data.ground->size()));
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (!(in >> w(i))) throw Error(ErrorCode::kParse, ref + ": expected " + std::to_string(w.size()) + " weights");
  }
  return normalize_to_measure(data.ground, w);
}

std::pair<std::string, std::string> two_outputs(const std::string& out, const std::string& def_a,
                                                const std::string& def_b) {
  const auto parts = split_on(out, ',');
  if (parts.size() == 2) return {parts[0], parts[1]};
  if (parts.size() == 1 && !parts[0].empty()) return {parts[0], def_b};
  return {def_a, def_b};
}

std::vector<std::size_t> parse_indices(const std::string& spec, const MeasureDataset& data,
                                       const DiscreteMeasure& theta, double p) {
  const auto parts = split_on(spec, ':');
  if (parts.size() == 1 && parts[0] == "all") {
    std::vector<std::size_t> all(data.train.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return all;
  }
  if (parts.size() == 3 && parts[0] == "random") {
    return random_indices(data.train.size(), std::stoull(parts[1]), std::stoull(parts[2]));
  }
  if (parts.size() == 2 && parts[0] == "cover") return select_cover_indices(data.train, theta, std::stod(parts[1]), p);
  if (parts.size() == 2 && parts[0] == "accuracy") return cover_for_accuracy(data.train, theta, std::stod(parts[1]), p).indices;
  throw Error(ErrorCode::kInvalidArgument, "--indices must be all, random:<j>:<seed>, cover:<delta> or accuracy:<eps>");
}

int cmd_ot(const std::string& dataset, const std::string& ref, double p, const std::string& method,
           const std::string& split, double reg, double tol, const std::string& out) {
  const MeasureDataset data = read_dataset(dataset);
  const DiscreteMeasure theta = resolve_reference(data, ref);
  const auto& block = data.split(split);
  const double reg_abs = reg * theta.ground()->cost_matrix(p)->maxCoeff();
  std::ofstream f(out);
  if (!f) throw Error(ErrorCode::kIo, "cannot open " + out);
  f.precision(17);
  f << "index,wpp,runtime_ns\n";
  for (std::size_t j = 0; j < block.size(); ++j) {
    const auto t0 = std::chrono::steady_clock::now();
    const double v = method == "exact" ? wpp(theta, block[j], p) : sinkhorn(theta, block[j], p, reg_abs, tol).wpp;
    const auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0).count();
    f << j << ',' << v << ',' << ns << '\n';
  }
  std::printf("wrote %zu distances to %s\n", block.size(), out.c_str());
  return 0;
}

int cmd_targets(const std::string& dataset, const std::string& ref, double p, const std::string& out) {
  const MeasureDataset data = read_dataset(dataset);
  const DiscreteMeasure theta = resolve_reference(data, ref);
  write_targets({compute_targets(theta, data.train, p), compute_targets(theta, data.test, p)}, out);
  std::printf("wrote %zu targets to %s\n", data.train.size() + data.test.size(), out.c_str());
  return 0;
}

int cmd_bank_build(const std::string& dataset, const std::string& ref, const std::string& indices, double p,
                   const std::string& out) {
  const MeasureDataset data = read_dataset(dataset);
  const DiscreteMeasure theta = resolve_reference(data, ref);
  const auto idx = parse_indices(indices, data, theta, p);
  const PotentialBank bank = build_bank(data.train, theta, idx, p);
  write_bank(bank, out);
  std::printf("bank of %zu potentials written to %s\n", bank.size(), out.c_str());
  return 0;
}

int cmd_bank_eval(const std::string& dataset, const std::string& ref, const std::string& bank_path,
                  const std::string& split, const std::string& out) {
  const MeasureDataset data = read_dataset(dataset);
  const DiscreteMeasure theta = resolve_reference(data, ref);
  const PotentialBank bank = read_bank(bank_path, data.ground);
  if (bank.ref_hash != measure_hash(theta)) {
    throw Error(ErrorCode::kInvalidArgument, "bank was built for a different reference measure");
  }
  const auto& block = data.split(split);
  const Eigen::VectorXd truth = compute_targets(theta, block, bank.p);
  std::ofstream f(out);
  if (!f) throw Error(ErrorCode::kIo, "cannot open " + out);
  f.precision(17);
  f << "index,true_wpp,G,rel_err\n";
  double mean = 0.0;
  for (std::size_t j = 0; j < block.size(); ++j) {
    const double g = eval_G(bank, block[j]);
    const double e = relative_error(truth(static_cast<Eigen::Index>(j)), g);
    mean += e;
    f << j << ',' << truth(static_cast<Eigen::Index>(j)) << ',' << g << ',' << e << '\n';
  }
  std::printf("mean relative error %.6g over %zu measures\n", block.empty() ? 0.0 : mean / block.size(), block.size());
  return 0;
}

int cmd_subcover(const std::string& dataset, const std::string& split, std::size_t limit, double p, double eps,
                 const std::string& k_range, int trials, std::uint64_t seed, const std::string& out) {
  const MeasureDataset data = read_dataset(dataset);
  auto block = data.split(split);
  if (block.size() > limit) block.erase(block.begin() + static_cast<std::ptrdiff_t>(limit), block.end());
  const auto ks = split_on(k_range, ':');
  if (ks.size() != 2) throw Error(ErrorCode::kInvalidArgument, "--k-range must be lo:hi");
  const int lo = std::stoi(ks[0]), hi = std::stoi(ks[1]);
  if (lo < 0 || hi < lo) throw Error(ErrorCode::kInvalidArgument, "--k-range must satisfy 0 <= lo <= hi");
  const MetricSample s(std::move(block), p);
  std::ofstream f(out);
  if (!f) throw Error(ErrorCode::kIo, "cannot open " + out);
  f.precision(12);
  f << "k,closed_form,monte_carlo,std_error\n";
  for (int k = lo; k <= hi; ++k) {
    const auto mc = p_eps_k_monte_carlo(s, eps, k, trials, seed);
    f << k << ',' << p_eps_k_closed(s, eps, k) << ',' << mc.estimate << ',' << mc.std_error << '\n';
  }
  std::printf("min ball mass %.6g; wrote %s\n", min_ball_mass(s, eps), out.c_str());
  return 0;
}

int cmd_erm_fit(const std::string& dataset, const std::string& target, const std::string& basis, long n,
                double lambda, double noise, double p, std::uint64_t seed, const std::string& out) {
  const MeasureDataset data = read_dataset(dataset);
  if (target.rfind("wpp:", 0) != 0) throw Error(ErrorCode::kInvalidArgument, "--target must be wpp:<ref>");
  const DiscreteMeasure theta = resolve_reference(data, target.substr(4));
  const auto colon = basis.find(':');
  if (colon == std::string::npos) throw Error(ErrorCode::kInvalidArgument, "--basis must be bank:<file> or features:<file>");
  const std::string kind = basis.substr(0, colon), path = basis.substr(colon + 1);
  Eigen::MatrixXd feats;
  if (kind == "bank") {
    const PotentialBank bank = read_bank(path, data.ground);
    feats = export_affine(bank).A;
  } else if (kind == "features") {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
    std::vector<Eigen::VectorXd> rows;
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::istringstream ls(line);
      Eigen::VectorXd r(static_cast<Eigen::Index>(data.ground->size()));
      for (Eigen::Index i = 0; i < r.size(); ++i) {
        if (!(ls >> r(i))) throw Error(ErrorCode::kParse, path + ": feature row too short");
      }
      rows.push_back(r);
    }
    feats.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(data.ground->size()));
    for (std::size_t i = 0; i < rows.size(); ++i) feats.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown basis kind " + kind);
  }
  if (n > 0 && n < feats.rows()) feats.conservativeResize(n, Eigen::NoChange);
  auto fs = std::make_shared<const FeatureSet>(data.ground, feats);
  std::vector<CylinderFunction> raw;
  for (Eigen::Index i = 0; i < feats.rows(); ++i) {
    raw.emplace_back(fs, OuterMap::linear(Eigen::VectorXd::Unit(feats.rows(), i)));
  }
  const CylinderSubspace V = double_orthogonalize(raw, data.train, uniform_weights(data.train.size()));
  const Eigen::VectorXd truth = compute_targets(theta, data.train, p);
  const Eigen::VectorXd y = add_noise(truth, noise, seed);
  const GramSystem sys = assemble(V, data.train, y, lambda);
  const FitResult fit = solve_regularized(sys);
  const double M = 2.0 * truth.cwiseAbs().maxCoeff();
  const TruncatedFit Ft = truncate(V, fit, M);
  const Eigen::VectorXd test_truth = compute_targets(theta, data.test, p);
  double test_err = 0.0;
  for (std::size_t j = 0; j < data.test.size(); ++j) test_err += relative_error(test_truth(static_cast<Eigen::Index>(j)), Ft(data.test[j]));
  const ConditionReport cr = condition_check(V, data.train, lambda, 1.0);

  json j;
  j["w"] = std::vector<double>(fit.w.data(), fit.w.data() + fit.w.size());
  j["residual"] = fit.residual;
  j["objective"] = fit.objective;
  j["jitter"] = fit.jitter;
  j["refinement_steps"] = fit.refinement_steps;
  j["M"] = M;
  j["test_mean_relative_error"] = data.test.empty() ? 0.0 : test_err / data.test.size();
  j["condition"] = {{"K", cr.K},           {"sigma_min", cr.sigma_min}, {"sigma_max", cr.sigma_max},
                    {"mu_min", cr.mu_min}, {"lhs", cr.lhs},             {"rhs", cr.rhs},
                    {"holds", cr.holds},   {"N", cr.N},                 {"n", cr.n},
                    {"r", cr.r},           {"lambda", cr.lambda}};
  std::ofstream f(out);
  if (!f) throw Error(ErrorCode::kIo, "cannot open " + out);
  f << j.dump(2) << '\n';
  std::printf("fit with %ld basis functions written to %s\n", static_cast<long>(V.dim()), out.c_str());
  return 0;
}

struct TrainInputs {
  MeasureDataset data;
  TargetTable targets;
  Eigen::MatrixXd X_train, X_test;
};

TrainInputs load_training(const std::string& dataset, const std::string& targets) {
  TrainInputs in{read_dataset(dataset), read_targets(targets), {}, {}};
  if (in.targets.train.size() != static_cast<Eigen::Index>(in.data.train.size()) ||
      in.targets.test.size() != static_cast<Eigen::Index>(in.data.test.size())) {
    throw Error(ErrorCode::kDimensionMismatch, "targets file does not match the dataset");
  }
  in.X_train = stack_measures(in.data.train);
  in.X_test = stack_measures(in.data.test);
  return in;
}

void print_epoch(int epoch, double loss, double train_err, double test_err) {
  std::printf("epoch %4d  loss %.6g  train %.6g  test %.6g\n", epoch, loss, train_err, test_err);
  std::fflush(stdout);
}

int cmd_maxnet_train(const std::string& dataset, const std::string& targets, const std::string& init, int k,
                     const std::string& loss, TrainConfig cfg, bool train_all, const std::string& out) {
  TrainInputs in = load_training(dataset, targets);
  ReluNetwork net;
  if (init.rfind("bank:", 0) == 0) {
    const PotentialBank bank = read_bank(init.substr(5), in.data.ground);
    net = init_from_bank(export_affine(bank), k, in.data.train);
  } else if (init.rfind("random:", 0) == 0) {
    net = init_random(static_cast<Eigen::Index>(in.data.ground->size()), k, std::stoull(init.substr(7)));
  } else {
    throw Error(ErrorCode::kInvalidArgument, "--init must be bank:<file> or random:<seed>");
  }
  net.set_trainable(train_all);
  std::shared_ptr<const GridGradient> grad;
  if (loss == "mae") {
    cfg.loss = LossSpec::mae();
  } else {
    const auto parts = split_on(loss, ':');
    if (parts.empty() || parts[0] != "reg" || parts.size() > 3 || parts.size() < 2) {
      throw Error(ErrorCode::kInvalidArgument, "--loss must be mae or reg:<lambda>[:<M>]");
    }
    const double M = parts.size() == 3 ? std::stod(parts[2]) : 2.0 * in.targets.train.cwiseAbs().maxCoeff();
    cfg.loss = LossSpec::regularized(std::stod(parts[1]), M);
    if (cfg.loss.lambda != 0.0) grad = grid_gradient(in.data.ground);
  }
  const auto [model_path, trace_path] = two_outputs(out, "model.txt", "trace.csv");
  const TrainTrace trace = train(net, in.X_train, in.targets.train, in.X_test, in.targets.test, cfg, grad.get(),
                                 [](const EpochRecord& r) { print_epoch(r.epoch, r.train_loss, r.train_error, r.test_error); });
  write_network(net, model_path, config_hash(cfg));
  write_trace_csv(trace, trace_path);
  return 0;
}

int cmd_adversarial_train(const std::string& dataset, const std::string& targets, double lambda, int nxi,
                          int ntheta, const std::string& norm, int k, SaddleConfig cfg, const std::string& out) {
  TrainInputs in = load_training(dataset, targets);
  const auto d = static_cast<Eigen::Index>(in.data.ground->size());
  ReluNetwork F = init_random(d, k, cfg.seed);
  ReluNetwork H = init_random(d, k, cfg.seed + 1);
  F.set_trainable(true);
  H.set_trainable(true);
  SaddleState s(std::move(F), std::move(H), lambda, nxi, ntheta, parse_norm_mode(norm));
  const auto grad = grid_gradient(in.data.ground);
  const auto [model_path, trace_path] = two_outputs(out, "model.txt", "trace.csv");
  const SaddleTrace trace = run_algorithm1(s, in.X_train, in.targets.train, in.X_test, in.targets.test, cfg, grad.get(),
                                           [](const SaddleEpoch& r) { print_epoch(r.epoch, r.solution_loss, r.train_error, r.test_error); });
  write_network(s.F, model_path);
  write_saddle_trace_csv(trace, trace_path);
  return 0;
}

int cmd_exp_run(const std::string& config) {
  const ExperimentOutputs o = run_experiment(load_experiment_config(config));
  std::printf("trace: %s\nmanifest: %s\n", o.trace.c_str(), o.manifest.c_str());
  for (const auto& e : o.extra) std::printf("output: %s\n", e.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wasserstein-space learning toolkit"};
  app.set_version_flag("--version", wspace::version());
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = all cores)");

  std::string dataset, ref = "uniform", out, split = "test", method = "exact";
  double p = 2.0, reg = 0.1, tol = 1e-3;

  auto* ot = app.add_subcommand("ot", "distances from a reference measure to every measure of a split");
  ot->add_option("--dataset", dataset)->required();
  ot->add_option("--ref", ref, "training index, uniform, dirac:i, train:i, test:i or a weights file");
  ot->add_option("--p", p);
  ot->add_option("--method", method)->check(CLI::IsMember({"exact", "sinkhorn"}));
  ot->add_option("--split", split)->check(CLI::IsMember({"train", "test"}));
  ot->add_option("--reg", reg, "sinkhorn strength relative to the largest cost");
  ot->add_option("--tol", tol, "sinkhorn marginal tolerance");
  ot->add_option("--out", out)->default_val("distances.csv");

  auto* targets = app.add_subcommand("targets", "exact W_p^p targets for both splits");
  targets->add_option("--dataset", dataset)->required();
  targets->add_option("--ref", ref);
  targets->add_option("--p", p);
  targets->add_option("--out", out)->default_val("targets.csv");

  auto* bank = app.add_subcommand("bank", "Kantorovich potential banks");
  bank->require_subcommand(1);
  std::string indices = "all", bank_path;
  auto* bank_build = bank->add_subcommand("build", "solve OT for the anchor measures");
  bank_build->add_option("--dataset", dataset)->required();
  bank_build->add_option("--ref", ref);
  bank_build->add_option("--indices", indices, "all | random:<j>:<seed> | cover:<delta> | accuracy:<eps>");
  bank_build->add_option("--p", p);
  bank_build->add_option("--out", out)->default_val("bank.txt");
  auto* bank_eval = bank->add_subcommand("eval", "evaluate G_I against exact distances");
  bank_eval->add_option("--dataset", dataset)->required();
  bank_eval->add_option("--ref", ref);
  bank_eval->add_option("--bank", bank_path)->required();
  bank_eval->add_option("--split", split)->check(CLI::IsMember({"train", "test"}));
  bank_eval->add_option("--out", out)->default_val("errors.csv");

  double eps = 1.0;
  std::string k_range = "1:16";
  int trials = 2000;
  std::uint64_t seed = 0;
  std::size_t limit = 200;
  auto* subcover = app.add_subcommand("subcover", "subcovering probabilities of the empirical law");
  subcover->add_option("--dataset", dataset)->required();
  subcover->add_option("--split", split)->check(CLI::IsMember({"train", "test"}));
  subcover->add_option("--max-measures", limit, "use at most this many measures");
  subcover->add_option("--p", p);
  subcover->add_option("--eps", eps)->required();
  subcover->add_option("--k-range", k_range);
  subcover->add_option("--trials", trials);
  subcover->add_option("--seed", seed);
  subcover->add_option("--out", out)->default_val("pek.csv");

  auto* erm = app.add_subcommand("erm", "regularized least squares in cylinder subspaces");
  erm->require_subcommand(1);
  std::string target = "wpp:uniform", basis;
  long n_basis = 0;
  double lambda = 0.0, noise = 0.0;
  auto* erm_fit = erm->add_subcommand("fit", "fit a double-orthogonal subspace");
  erm_fit->add_option("--dataset", dataset)->required();
  erm_fit->add_option("--target", target);
  erm_fit->add_option("--basis", basis, "bank:<file> | features:<file>")->required();
  erm_fit->add_option("--n", n_basis, "use the first n basis functions (0 = all)");
  erm_fit->add_option("--lambda", lambda);
  erm_fit->add_option("--noise", noise);
  erm_fit->add_option("--p", p);
  erm_fit->add_option("--seed", seed);
  erm_fit->add_option("--out", out)->default_val("fit.json");

  std::string targets_path, init = "random:0", loss = "mae";
  int k = 8;
  bool train_all = false;
  TrainConfig tcfg;
  auto* maxnet = app.add_subcommand("maxnet", "max-of-affine ReLU networks");
  maxnet->require_subcommand(1);
  auto* mtrain = maxnet->add_subcommand("train", "train a network");
  mtrain->add_option("--dataset", dataset)->required();
  mtrain->add_option("--targets", targets_path)->required();
  mtrain->add_option("--init", init, "bank:<file> | random:<seed>");
  mtrain->add_option("--k", k, "tree depth (2^k first-layer rows)");
  mtrain->add_option("--loss", loss, "mae | reg:<lambda>[:<M>]");
  mtrain->add_option("--epochs", tcfg.epochs);
  mtrain->add_option("--batch", tcfg.batch_size);
  mtrain->add_option("--lr", tcfg.lr);
  mtrain->add_option("--seed", tcfg.seed);
  mtrain->add_flag("--train-all", train_all, "also train the max tree");
  mtrain->add_option("--out", out, "model,trace")->default_val("model.txt,trace.csv");

  double alambda = 0.001;
  int nxi = 1, ntheta = 1;
  std::string norm = "h12";
  SaddleConfig scfg;
  auto* adv = app.add_subcommand("adversarial", "adversarial weak-form training");
  adv->require_subcommand(1);
  auto* atrain = adv->add_subcommand("train", "alternate adversary and solution steps");
  atrain->add_option("--dataset", dataset)->required();
  atrain->add_option("--targets", targets_path)->required();
  atrain->add_option("--lambda", alambda);
  atrain->add_option("--nxi", nxi);
  atrain->add_option("--ntheta", ntheta);
  atrain->add_option("--norm", norm)->check(CLI::IsMember({"h12", "l2"}));
  atrain->add_option("--k", k);
  atrain->add_option("--epochs", scfg.epochs);
  atrain->add_option("--batch", scfg.batch_size);
  atrain->add_option("--lr", scfg.lr_solution);
  atrain->add_option("--lr-adversary", scfg.lr_adversary);
  atrain->add_option("--seed", scfg.seed);
  atrain->add_option("--out", out, "model,trace")->default_val("model.txt,trace.csv");

  std::string config;
  auto* exp = app.add_subcommand("exp", "experiment runner");
  exp->require_subcommand(1);
  auto* exp_run = exp->add_subcommand("run", "run an experiment described by a JSON file");
  exp_run->add_option("--config", config)->required()->check(CLI::ExistingFile);

  SyntheticSpec spec;
  std::string generator = "blurred-blobs", images, labels;
  auto* ds = app.add_subcommand("dataset", "dataset utilities");
  ds->require_subcommand(1);
  auto* make = ds->add_subcommand("make", "generate a synthetic dataset");
  make->add_option("--rows", spec.rows);
  make->add_option("--cols", spec.cols);
  make->add_option("--p", spec.p);
  make->add_option("--n-train", spec.n_train);
  make->add_option("--n-test", spec.n_test);
  make->add_option("--generator", generator)->check(CLI::IsMember({"blurred-blobs", "random-dirichlet"}));
  make->add_option("--classes", spec.classes);
  make->add_option("--alpha", spec.alpha);
  make->add_option("--seed", spec.seed);
  make->add_option("--out", out)->default_val("dataset.txt");
  auto* conv = ds->add_subcommand("convert-idx", "convert an IDX image file");
  conv->add_option("--images", images)->required()->check(CLI::ExistingFile);
  conv->add_option("--labels", labels);
  conv->add_option("--n-train", spec.n_train);
  conv->add_option("--n-test", spec.n_test);
  conv->add_option("--p", spec.p);
  conv->add_option("--out", out)->default_val("dataset.txt");

  CLI11_PARSE(app, argc, argv);
  if (threads != 0) set_thread_count(threads);

  try {
    if (ot->parsed()) return cmd_ot(dataset, ref, p, method, split, reg, tol, out);
    if (targets->parsed()) return cmd_targets(dataset, ref, p, out);
    if (bank_build->parsed()) return cmd_bank_build(dataset, ref, indices, p, out);
    if (bank_eval->parsed()) return cmd_bank_eval(dataset, ref, bank_path, split, out);
    if (subcover->parsed()) return cmd_subcover(dataset, split == "test" && !subcover->count("--split") ? "train" : split,
                                                limit, p, eps, k_range, trials, seed, out);
    if (erm_fit->parsed()) return cmd_erm_fit(dataset, target, basis, n_basis, lambda, noise, p, seed, out);
    if (mtrain->parsed()) return cmd_maxnet_train(dataset, targets_path, init, k, loss, tcfg, train_all, out);
    if (atrain->parsed()) return cmd_adversarial_train(dataset, targets_path, alambda, nxi, ntheta, norm, k, scfg, out);
    if (exp_run->parsed()) return cmd_exp_run(config);
    if (make->parsed()) {
      spec.generator = parse_generator(generator);
      write_dataset(make_synthetic_dataset(spec), out);
      std::printf("wrote %d + %d measures to %s\n", spec.n_train, spec.n_test, out.c_str());
      return 0;
    }
    if (conv->parsed()) {
      write_dataset(convert_idx(images, spec.n_train, spec.n_test, spec.p, labels), out);
      std::printf("wrote %s\n", out.c_str());
      return 0;
    }
  } catch (const wspace::Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", std::string(to_string(e.code())).c_str(), e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
