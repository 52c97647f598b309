#include <random>

#include <benchmark/benchmark.h>

#include "wspace/potential_bank.hpp"
#include "wspace/synthetic.hpp"
#include "wspace/transport.hpp"

namespace {

wspace::MeasureDataset data_for(int side) {
  wspace::SyntheticSpec s;
  s.rows = side;
  s.cols = side;
  s.n_train = 64;
  s.n_test = 8;
  s.seed = 1;
  return wspace::make_synthetic_dataset(s);
}

void BM_ExactOt(benchmark::State& state) {
  const auto d = data_for(static_cast<int>(state.range(0)));
  const auto theta = wspace::DiscreteMeasure::uniform(d.ground);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(wspace::wpp(theta, d.train[i++ % d.train.size()]));
  }
  state.SetLabel(std::to_string(d.ground->size()) + " atoms");
}
BENCHMARK(BM_ExactOt)->Arg(4)->Arg(8)->Arg(12)->Unit(benchmark::kMicrosecond);

void BM_Sinkhorn(benchmark::State& state) {
  const auto d = data_for(static_cast<int>(state.range(0)));
  const auto theta = wspace::DiscreteMeasure::uniform(d.ground);
  const double reg = 0.1 * d.ground->cost_matrix()->maxCoeff();
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(wspace::sinkhorn(theta, d.train[i++ % d.train.size()], 2.0, reg, 1e-3).wpp);
  }
}
BENCHMARK(BM_Sinkhorn)->Arg(4)->Arg(8)->Unit(benchmark::kMicrosecond);

void BM_EvalG(benchmark::State& state) {
  const auto d = data_for(8);
  const auto theta = wspace::DiscreteMeasure::uniform(d.ground);
  const auto bank = wspace::build_bank(d.train, theta, wspace::random_indices(d.train.size(), static_cast<std::size_t>(state.range(0)), 2));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(wspace::eval_G(bank, d.test[i++ % d.test.size()]));
  }
}
BENCHMARK(BM_EvalG)->Arg(1)->Arg(16)->Arg(64);

}  // namespace
