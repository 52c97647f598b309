#include <benchmark/benchmark.h>

#include "wspace/relu_network.hpp"
#include "wspace/synthetic.hpp"

namespace {

void BM_MaxNetForwardBatch(benchmark::State& state) {
  wspace::SyntheticSpec s;
  s.n_train = 256;
  s.n_test = 1;
  const auto d = wspace::make_synthetic_dataset(s);
  const Eigen::MatrixXd X = wspace::stack_measures(d.train);
  const auto net = wspace::init_random(X.rows(), static_cast<int>(state.range(0)), 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(net.forward_batch(X));
  }
  state.SetItemsProcessed(state.iterations() * X.cols());
}
BENCHMARK(BM_MaxNetForwardBatch)->Arg(4)->Arg(6)->Arg(8)->Unit(benchmark::kMicrosecond);

void BM_MaxNetLossGradient(benchmark::State& state) {
  wspace::SyntheticSpec s;
  s.n_train = 64;
  s.n_test = 1;
  const auto d = wspace::make_synthetic_dataset(s);
  const wspace::GridGradient grad(*d.ground);
  const Eigen::MatrixXd X = wspace::stack_measures(d.train);
  const Eigen::VectorXd t = Eigen::VectorXd::Ones(X.cols());
  const auto net = wspace::init_random(X.rows(), 6, 4);
  const auto loss = state.range(0) ? wspace::LossSpec::regularized(0.01, 0) : wspace::LossSpec::mae();
  for (auto _ : state) {
    benchmark::DoNotOptimize(wspace::loss_and_gradient(net, X, t, loss, &grad).value);
  }
}
BENCHMARK(BM_MaxNetLossGradient)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
