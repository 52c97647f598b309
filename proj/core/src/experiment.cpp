#include "wspace/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "wspace/adversarial.hpp"
#include "wspace/error.hpp"
#include "wspace/parallel.hpp"
#include "wspace/potential_bank.hpp"
#include "wspace/transport.hpp"
#include "wspace/version.hpp"

namespace wspace {

using json = nlohmann::json;
namespace fs = std::filesystem;

Eigen::VectorXd compute_targets(const DiscreteMeasure& theta, const std::vector<DiscreteMeasure>& data, double p) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(data.size()));
  parallel_for(data.size(), [&](std::size_t j) { out(static_cast<Eigen::Index>(j)) = wpp(theta, data[j], p); });
  return out;
}

namespace {

std::size_t parse_index(const std::string& s, const std::string& selector) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw Error(ErrorCode::kInvalidArgument, "bad index in reference selector '" + selector + "'");
  }
}

}  // namespace

DiscreteMeasure select_reference(const MeasureDataset& data, const std::string& selector) {
  if (selector == "uniform") return DiscreteMeasure::uniform(data.ground);
  const auto colon = selector.find(':');
  if (colon == std::string::npos) throw Error(ErrorCode::kInvalidArgument, "unknown reference selector '" + selector + "'");
  const std::string kind = selector.substr(0, colon);
  const std::size_t idx = parse_index(selector.substr(colon + 1), selector);
  if (kind == "dirac") return DiscreteMeasure::dirac(data.ground, idx);
  if (kind == "train" || kind == "test") {
    const auto& block = data.split(kind);
    if (idx >= block.size()) throw Error(ErrorCode::kInvalidArgument, "reference index out of range");
    return block[idx];
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown reference selector '" + selector + "'");
}

void write_targets(const TargetTable& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path + " for writing");
  out.precision(17);
  out << "split,index,value\n";
  for (Eigen::Index i = 0; i < t.train.size(); ++i) out << "train," << i << ',' << t.train(i) << '\n';
  for (Eigen::Index i = 0; i < t.test.size(); ++i) out << "test," << i << ',' << t.test(i) << '\n';
}

TargetTable read_targets(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("split,index,value", 0) != 0) {
    throw Error(ErrorCode::kParse, path + ": missing header split,index,value");
  }
  std::vector<std::pair<std::size_t, double>> tr, te;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::istringstream ls(line);
    std::string split, idx, val;
    if (!std::getline(ls, split, ',') || !std::getline(ls, idx, ',') || !std::getline(ls, val)) {
      throw Error(ErrorCode::kParse, path + ":" + std::to_string(line_no) + ": expected three fields");
    }
    double v = 0.0;
    std::size_t i = 0;
    try {
      i = std::stoull(idx);
      v = std::stod(val);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParse, path + ":" + std::to_string(line_no) + ": bad number");
    }
    if (split == "train") tr.emplace_back(i, v);
    else if (split == "test") te.emplace_back(i, v);
    else throw Error(ErrorCode::kParse, path + ":" + std::to_string(line_no) + ": unknown split " + split);
  }
  auto pack = [&](std::vector<std::pair<std::size_t, double>>& rows) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(rows.size()));
    std::vector<bool> seen(rows.size(), false);
    for (const auto& [i, x] : rows) {
      if (i >= rows.size() || seen[i]) throw Error(ErrorCode::kParse, path + ": indices must cover 0..n-1 once");
      seen[i] = true;
      v(static_cast<Eigen::Index>(i)) = x;
    }
    return v;
  };
  return {pack(tr), pack(te)};
}

DecayResult run_baseline_decay(const std::vector<DiscreteMeasure>& train, const std::vector<DiscreteMeasure>& eval,
                               const Eigen::VectorXd& eval_targets, const DiscreteMeasure& theta,
                               const std::vector<std::size_t>& schedule, const std::vector<std::uint64_t>& seeds,
                               double p) {
  if (schedule.empty()) throw Error(ErrorCode::kInvalidArgument, "empty schedule");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (schedule[i] == 0 || (i > 0 && schedule[i] <= schedule[i - 1])) {
      throw Error(ErrorCode::kInvalidArgument, "schedule must be strictly increasing and positive");
    }
  }
  if (schedule.back() > train.size()) throw Error(ErrorCode::kInvalidArgument, "schedule exceeds the training set");
  if (eval_targets.size() != static_cast<Eigen::Index>(eval.size())) {
    throw Error(ErrorCode::kDimensionMismatch, "targets do not match the evaluation set");
  }
  const Eigen::MatrixXd X = stack_measures(eval);
  DecayResult result;
  for (const auto seed : seeds) {
    auto perm = random_permutation(train.size(), seed);
    perm.resize(schedule.back());
    const AffineExport ab = export_affine(build_bank(train, theta, perm, p));
    const Eigen::MatrixXd values = (ab.A * X).colwise() + ab.b;  // |I| x |eval|
    Eigen::RowVectorXd running = Eigen::RowVectorXd::Constant(X.cols(), -std::numeric_limits<double>::infinity());
    std::size_t done = 0;
    for (const std::size_t j : schedule) {
      for (; done < j; ++done) running = running.cwiseMax(values.row(static_cast<Eigen::Index>(done)));
      Eigen::VectorXd errs(X.cols());
      for (Eigen::Index i = 0; i < X.cols(); ++i) errs(i) = relative_error(eval_targets(i), running(i));
      DecayRow row;
      row.seed = seed;
      row.size = j;
      row.mean_error = errs.size() ? errs.mean() : 0.0;
      row.max_error = errs.size() ? errs.maxCoeff() : 0.0;
      result.rows.push_back(row);
      result.per_sample.push_back(std::move(errs));
    }
  }
  return result;
}

void write_decay_csv(const DecayResult& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path + " for writing");
  out.precision(10);
  out << "seed,size,mean_error,max_error\n";
  for (const auto& row : r.rows) out << row.seed << ',' << row.size << ',' << row.mean_error << ',' << row.max_error << '\n';
}

void write_decay_per_sample_csv(const DecayResult& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path + " for writing");
  out.precision(10);
  out << "seed,size,sample,error\n";
  for (std::size_t k = 0; k < r.rows.size(); ++k) {
    for (Eigen::Index i = 0; i < r.per_sample[k].size(); ++i) {
      out << r.rows[k].seed << ',' << r.rows[k].size << ',' << i << ',' << r.per_sample[k](i) << '\n';
    }
  }
}

SpeedTable run_speed_table(const ReluNetwork& net, const DiscreteMeasure& theta,
                           const std::vector<DiscreteMeasure>& data, double p, double reg_rel, double tol,
                           double train_seconds) {
  if (data.empty()) throw Error(ErrorCode::kInvalidArgument, "speed table needs at least one measure");
  using clock = std::chrono::steady_clock;
  SpeedTable t;
  t.elements = data.size();
  t.train_seconds = train_seconds;
  const double n = static_cast<double>(data.size());

  volatile double sink = 0.0;
  const Eigen::MatrixXd X = stack_measures(data);
  int repeats = 0;
  auto f0 = clock::now();
  double elapsed = 0.0;
  do {
    sink = sink + net.forward_batch(X).sum();
    ++repeats;
    elapsed = std::chrono::duration<double>(clock::now() - f0).count();
  } while (elapsed < 0.05);
  t.forward_seconds = elapsed / (n * repeats);

  repeats = 0;
  f0 = clock::now();
  do {
    for (const auto& mu : data) sink = sink + net.forward(mu.weights());
    ++repeats;
    elapsed = std::chrono::duration<double>(clock::now() - f0).count();
  } while (elapsed < 0.05);
  t.forward_single_seconds = elapsed / (n * repeats);

  std::vector<double> exact(data.size());
  const auto e0 = clock::now();
  for (std::size_t j = 0; j < data.size(); ++j) exact[j] = wpp(theta, data[j], p);
  t.exact_seconds = std::chrono::duration<double>(clock::now() - e0).count() / n;

  const double reg = reg_rel * theta.ground()->cost_matrix(p)->maxCoeff();
  double err = 0.0;
  int ok = 0;
  const auto s0 = clock::now();
  for (std::size_t j = 0; j < data.size(); ++j) {
    try {
      const auto r = sinkhorn(theta, data[j], p, reg, tol);
      err += relative_error(exact[j], r.wpp);
      ++ok;
    } catch (const NotConverged&) {
      ++t.sinkhorn_failures;
    }
  }
  const double sinkhorn_total = std::chrono::duration<double>(clock::now() - s0).count();
  t.sinkhorn_seconds = sinkhorn_total / n;
  t.sinkhorn_error = ok ? err / ok : std::nan("");
  t.exact_ratio = t.exact_seconds / t.forward_seconds;
  t.sinkhorn_ratio = t.sinkhorn_seconds / t.forward_seconds;
  t.train_eval_vs_sinkhorn = (train_seconds + t.forward_seconds * n) / sinkhorn_total;
  return t;
}

void write_speed_csv(const SpeedTable& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path + " for writing");
  out.precision(10);
  out << "method,seconds_per_element,normalized\n";
  out << "forward," << t.forward_seconds << ",1\n";
  out << "forward_unbatched," << t.forward_single_seconds << ',' << t.forward_single_seconds / t.forward_seconds << '\n';
  out << "exact_ot," << t.exact_seconds << ',' << t.exact_ratio << '\n';
  out << "sinkhorn," << t.sinkhorn_seconds << ',' << t.sinkhorn_ratio << '\n';
  out << "# elements," << t.elements << '\n';
  out << "# sinkhorn_mean_relative_error," << t.sinkhorn_error << '\n';
  out << "# sinkhorn_failures," << t.sinkhorn_failures << '\n';
  out << "# train_plus_eval_over_sinkhorn," << t.train_eval_vs_sinkhorn << '\n';
}

namespace {

template <class T>
void read_opt(const json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("experiment config: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kParse, "experiment config must be a JSON object");
  ExperimentConfig c;
  try {
    c.id = j.at("experiment").get<std::string>();
    c.dataset = j.at("dataset").get<std::string>();
    read_opt(j, "reference", c.reference);
    read_opt(j, "schedule", c.schedule);
    read_opt(j, "seeds", c.seeds);
    read_opt(j, "split", c.split);
    read_opt(j, "output_dir", c.output_dir);
    read_opt(j, "p", c.p);
    read_opt(j, "k", c.k);
    read_opt(j, "epochs", c.epochs);
    read_opt(j, "batch_size", c.batch_size);
    read_opt(j, "lr", c.lr);
    read_opt(j, "loss", c.loss);
    read_opt(j, "lambda", c.lambda);
    read_opt(j, "M", c.M);
    read_opt(j, "init", c.init);
    read_opt(j, "train_all", c.train_all);
    read_opt(j, "n_xi", c.n_xi);
    read_opt(j, "n_theta", c.n_theta);
    read_opt(j, "norm", c.norm);
    read_opt(j, "sinkhorn_reg", c.sinkhorn_reg);
    read_opt(j, "sinkhorn_tol", c.sinkhorn_tol);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("experiment config: ") + e.what());
  }
  static const char* kinds[] = {"baseline_decay", "maxnet", "adversarial", "speed"};
  if (std::find(std::begin(kinds), std::end(kinds), c.id) == std::end(kinds)) {
    throw Error(ErrorCode::kParse, "unknown experiment '" + c.id + "'");
  }
  for (std::size_t i = 1; i < c.schedule.size(); ++i) {
    if (c.schedule[i] <= c.schedule[i - 1]) throw Error(ErrorCode::kParse, "schedule must be strictly increasing");
  }
  if (c.id == "baseline_decay" && c.schedule.empty()) throw Error(ErrorCode::kParse, "baseline_decay needs a schedule");
  if (c.seeds.empty()) throw Error(ErrorCode::kParse, "at least one seed is required");
  if (c.loss != "mae" && c.loss != "regularized") throw Error(ErrorCode::kParse, "loss must be mae or regularized");
  if (c.init != "bank" && c.init != "random") throw Error(ErrorCode::kParse, "init must be bank or random");
  if (c.split != "train" && c.split != "test") throw Error(ErrorCode::kParse, "split must be train or test");
  c.canonical = j.dump();
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  ExperimentConfig c = parse_experiment_config(ss.str());
  if (fs::path(c.dataset).is_relative()) c.dataset = (fs::path(path).parent_path() / c.dataset).string();
  if (!fs::exists(c.dataset)) throw Error(ErrorCode::kIo, "dataset " + c.dataset + " does not exist");
  return c;
}

void write_manifest(const std::string& path, const std::string& experiment, const std::string& config_hash,
                    const std::vector<std::uint64_t>& seeds, const std::string& config_text) {
  json m;
  m["experiment"] = experiment;
  m["config_hash"] = config_hash;
  m["seeds"] = seeds;
  m["library_version"] = version();
  m["threads"] = thread_count();
  m["config"] = config_text.empty() ? json::object() : json::parse(config_text);
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path + " for writing");
  out << m.dump(2) << '\n';
}

namespace {

struct Prepared {
  MeasureDataset data;
  DiscreteMeasure theta;
  Eigen::VectorXd y_train, y_test;
  Eigen::MatrixXd X_train, X_test;
};

Prepared prepare(const ExperimentConfig& c) {
  MeasureDataset data = read_dataset(c.dataset);
  DiscreteMeasure theta = select_reference(data, c.reference);
  Prepared p{std::move(data), std::move(theta), {}, {}, {}, {}};
  p.y_train = compute_targets(p.theta, p.data.train, c.p);
  p.y_test = compute_targets(p.theta, p.data.test, c.p);
  p.X_train = stack_measures(p.data.train);
  p.X_test = stack_measures(p.data.test);
  return p;
}

ReluNetwork initial_network(const ExperimentConfig& c, const Prepared& pr, std::uint64_t seed) {
  ReluNetwork net;
  if (c.init == "bank") {
    const std::size_t width = std::size_t(1) << c.k;
    const auto idx = random_indices(pr.data.train.size(), std::min(width, pr.data.train.size()), seed);
    net = init_from_bank(export_affine(build_bank(pr.data.train, pr.theta, idx, c.p)), c.k, pr.data.train);
  } else {
    net = init_random(static_cast<Eigen::Index>(pr.data.ground->size()), c.k, seed);
  }
  net.set_trainable(c.train_all);
  return net;
}

TrainConfig train_config(const ExperimentConfig& c, const Prepared& pr, std::uint64_t seed) {
  TrainConfig t;
  t.epochs = c.epochs;
  t.batch_size = c.batch_size;
  t.lr = c.lr;
  t.seed = seed;
  if (c.loss == "regularized") {
    const double M = c.M > 0.0 ? c.M : 2.0 * pr.y_train.cwiseAbs().maxCoeff();
    t.loss = LossSpec::regularized(c.lambda, M);
  }
  return t;
}

}  // namespace

ExperimentOutputs run_experiment(const ExperimentConfig& c) {
  fs::create_directories(c.output_dir);
  ExperimentOutputs out;
  out.trace = (fs::path(c.output_dir) / "trace.csv").string();
  out.manifest = (fs::path(c.output_dir) / "manifest.json").string();
  const std::string hash = stable_hash(c.canonical);

  if (c.id == "baseline_decay") {
    MeasureDataset data = read_dataset(c.dataset);
    const DiscreteMeasure theta = select_reference(data, c.reference);
    const auto& eval = data.split(c.split);
    const Eigen::VectorXd targets = compute_targets(theta, eval, c.p);
    const DecayResult r = run_baseline_decay(data.train, eval, targets, theta, c.schedule, c.seeds, c.p);
    write_decay_csv(r, out.trace);
    out.extra.push_back((fs::path(c.output_dir) / "per_sample.csv").string());
    write_decay_per_sample_csv(r, out.extra.back());
  } else if (c.id == "maxnet" || c.id == "speed") {
    const Prepared pr = prepare(c);
    const std::uint64_t seed = c.seeds.front();
    ReluNetwork net = initial_network(c, pr, seed);
    const TrainConfig tc = train_config(c, pr, seed);
    std::shared_ptr<const GridGradient> grad;
    if (tc.loss.kind == LossSpec::Kind::kRegularized && tc.loss.lambda != 0.0) grad = grid_gradient(pr.data.ground);
    const auto t0 = std::chrono::steady_clock::now();
    const TrainTrace trace = train(net, pr.X_train, pr.y_train, pr.X_test, pr.y_test, tc, grad.get());
    const double train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_trace_csv(trace, out.trace);
    out.extra.push_back((fs::path(c.output_dir) / "model.txt").string());
    write_network(net, out.extra.back(), config_hash(tc));
    if (c.id == "speed") {
      const SpeedTable st = run_speed_table(net, pr.theta, pr.data.split(c.split), c.p, c.sinkhorn_reg,
                                            c.sinkhorn_tol, train_seconds);
      out.extra.push_back((fs::path(c.output_dir) / "speed.csv").string());
      write_speed_csv(st, out.extra.back());
    }
  } else {
    const Prepared pr = prepare(c);
    const std::uint64_t seed = c.seeds.front();
    ExperimentConfig ci = c;
    ci.init = "random";
    ci.train_all = true;
    ReluNetwork F = initial_network(ci, pr, seed);
    ReluNetwork H = initial_network(ci, pr, seed + 1);
    SaddleState s(std::move(F), std::move(H), c.lambda, c.n_xi, c.n_theta, parse_norm_mode(c.norm));
    SaddleConfig sc;
    sc.epochs = c.epochs;
    sc.batch_size = c.batch_size;
    sc.lr_solution = c.lr;
    sc.lr_adversary = c.lr;
    sc.seed = seed;
    const auto grad = grid_gradient(pr.data.ground);
    const SaddleTrace trace = run_algorithm1(s, pr.X_train, pr.y_train, pr.X_test, pr.y_test, sc, grad.get());
    write_saddle_trace_csv(trace, out.trace);
    out.extra.push_back((fs::path(c.output_dir) / "model.txt").string());
    write_network(s.F, out.extra.back(), hash);
  }
  write_manifest(out.manifest, c.id, hash, c.seeds, c.canonical);
  return out;
}

}  // namespace wspace
