#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wspace/measure.hpp"
#include "wspace/relu_network.hpp"

namespace wspace {

/// W_p^p(theta, mu) for every measure, computed with the exact solver.
Eigen::VectorXd compute_targets(const DiscreteMeasure& theta, const std::vector<DiscreteMeasure>& data, double p);

/// "uniform", "dirac:<atom>", "train:<i>" or "test:<i>".
DiscreteMeasure select_reference(const MeasureDataset& data, const std::string& selector);

struct TargetTable {
  Eigen::VectorXd train;
  Eigen::VectorXd test;
};

/// CSV with header `split,index,value`.
void write_targets(const TargetTable& t, const std::string& path);
TargetTable read_targets(const std::string& path);

struct DecayRow {
  std::uint64_t seed = 0;
  std::size_t size = 0;
  double mean_error = 0.0;
  double max_error = 0.0;
};

struct DecayResult {
  std::vector<DecayRow> rows;
  std::vector<Eigen::VectorXd> per_sample;  // one vector per row
};

/// For each seed, a random permutation of the training indices; for each j in
/// the (strictly increasing) schedule the bank on the first j indices is
/// evaluated on `eval` against its exact targets. Banks are nested per seed.
DecayResult run_baseline_decay(const std::vector<DiscreteMeasure>& train, const std::vector<DiscreteMeasure>& eval,
                               const Eigen::VectorXd& eval_targets, const DiscreteMeasure& theta,
                               const std::vector<std::size_t>& schedule, const std::vector<std::uint64_t>& seeds,
                               double p);

void write_decay_csv(const DecayResult& r, const std::string& path);
void write_decay_per_sample_csv(const DecayResult& r, const std::string& path);

struct SpeedTable {
  std::size_t elements = 0;
  double forward_seconds = 0.0;  // per element, one batched pass over the split
  double forward_single_seconds = 0.0;  // per element, one input at a time
  double exact_seconds = 0.0;
  double sinkhorn_seconds = 0.0;
  double exact_ratio = 0.0;  // relative to the forward pass
  double sinkhorn_ratio = 0.0;
  double sinkhorn_error = 0.0;  // mean relative error of the entropic cost
  int sinkhorn_failures = 0;
  double train_seconds = 0.0;
  /// (training time + forward over the split) / (sinkhorn over the split)
  double train_eval_vs_sinkhorn = 0.0;
};

/// Sinkhorn uses entropic strength reg_rel * max cost and marginal tolerance
/// tol.
SpeedTable run_speed_table(const ReluNetwork& net, const DiscreteMeasure& theta,
                           const std::vector<DiscreteMeasure>& data, double p, double reg_rel = 0.1,
                           double tol = 1e-3, double train_seconds = 0.0);

void write_speed_csv(const SpeedTable& t, const std::string& path);

struct ExperimentConfig {
  std::string id;  // baseline_decay | maxnet | adversarial | speed
  std::string dataset;
  std::string reference = "uniform";
  std::vector<std::size_t> schedule;
  std::vector<std::uint64_t> seeds{0};
  std::string split = "test";
  std::string output_dir = ".";
  double p = 2.0;

  int k = 8;
  int epochs = 100;
  int batch_size = 64;
  double lr = 1e-3;
  std::string loss = "mae";  // mae | regularized
  double lambda = 0.0;
  double M = 0.0;  // 0: twice the largest training target
  std::string init = "bank";  // bank | random
  bool train_all = false;
  int n_xi = 1;
  int n_theta = 1;
  std::string norm = "h12";
  double sinkhorn_reg = 0.1;
  double sinkhorn_tol = 1e-3;

  std::string canonical;  // normalized JSON text, hashed into the manifest
};

/// Throws kParse on malformed or invalid documents.
ExperimentConfig parse_experiment_config(const std::string& json_text);
/// Also checks that the dataset exists.
ExperimentConfig load_experiment_config(const std::string& path);

struct ExperimentOutputs {
  std::string trace;
  std::string manifest;
  std::vector<std::string> extra;
};

/// Writes trace.csv and manifest.json (plus per-experiment extras) into
/// config.output_dir.
ExperimentOutputs run_experiment(const ExperimentConfig& config);

/// manifest.json with config hash, seeds and library version.
void write_manifest(const std::string& path, const std::string& experiment, const std::string& config_hash,
                    const std::vector<std::uint64_t>& seeds, const std::string& config_text);

}  // namespace wspace
