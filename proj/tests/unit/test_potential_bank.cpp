#include <cmath>
#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "wspace/error.hpp"
#include "wspace/potential_bank.hpp"
#include "wspace/transport.hpp"

using namespace wspace;

namespace {

std::vector<DiscreteMeasure> random_set(const GroundPtr& g, int n, std::uint64_t seed, double keep = 0.6) {
  std::mt19937_64 rng(seed);
  std::vector<DiscreteMeasure> out;
  for (int i = 0; i < n; ++i) out.push_back(oracle::random_measure(g, rng, keep));
  return out;
}

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

}  // namespace

TEST(BuildBank, EmptyIndexSet) {
  auto g = GroundSpace::grid(2, 2);
  const auto train = random_set(g, 3, 1);
  const auto bank = build_bank(train, DiscreteMeasure::uniform(g), {});
  EXPECT_TRUE(bank.empty());
  try {
    eval_G(bank, train[0]);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyBank);
  }
  EXPECT_THROW(build_bank(train, DiscreteMeasure::uniform(g), {3}), Error);
}

TEST(BuildBank, SingleEntryDuality) {
  auto g = GroundSpace::grid(3, 3);
  const auto train = random_set(g, 4, 2);
  const auto theta = DiscreteMeasure::uniform(g);
  const auto bank = build_bank(train, theta, {2});
  ASSERT_EQ(bank.size(), 1u);
  const auto& e = bank.entries[0];
  EXPECT_EQ(e.index, 2u);
  EXPECT_NEAR(train[2].integrate(e.phi) + e.psi_bar, e.wpp, 1e-8);
  EXPECT_NEAR(e.wpp, wpp(theta, train[2]), 1e-12);
  EXPECT_EQ(bank.ref_hash, measure_hash(theta));
}

TEST(BuildBank, FullBankReproducesDistances) {
  auto g = GroundSpace::grid(3, 3);
  const auto train = random_set(g, 12, 3);
  std::mt19937_64 rng(30);
  const auto theta = oracle::random_measure(g, rng);
  const auto bank = build_bank(train, theta, iota(train.size()));
  for (std::size_t k = 0; k < train.size(); ++k) {
    const double truth = wpp(theta, train[k]);
    EXPECT_NEAR(bank.entries[k].wpp, truth, 1e-12 * (1 + truth));
    EXPECT_NEAR(eval_G(bank, train[k]), truth, 1e-8);
  }
}

TEST(EvalG, TwoPointExample) {
  auto g = GroundSpace::line(2);
  const std::vector<DiscreteMeasure> train{DiscreteMeasure::dirac(g, 1)};
  const auto bank = build_bank(train, DiscreteMeasure::dirac(g, 0), {0});
  EXPECT_NEAR(eval_G(bank, DiscreteMeasure::dirac(g, 1)), 1.0, 1e-12);
}

TEST(EvalG, WeakDualityAndMonotonicity) {
  auto g = GroundSpace::grid(3, 3);
  const auto train = random_set(g, 10, 4);
  const auto probes = random_set(g, 40, 5, 0.8);
  const auto theta = DiscreteMeasure::uniform(g);
  const auto small = build_bank(train, theta, {0, 3, 5});
  const auto large = build_bank(train, theta, {0, 3, 5, 1, 7, 9});
  for (const auto& mu : probes) {
    const double truth = wpp(theta, mu);
    EXPECT_LE(eval_G(small, mu), truth + 1e-8);
    EXPECT_LE(eval_G(large, mu), truth + 1e-8);
    EXPECT_LE(eval_G(small, mu), eval_G(large, mu));
  }
}

TEST(ExportAffine, ConstantPotential) {
  auto g = GroundSpace::line(3);
  PotentialBank bank;
  bank.ground = g;
  bank.entries.push_back({0, Eigen::VectorXd::Constant(3, 1.5), 0.25, 0.0});
  const auto ab = export_affine(bank);
  EXPECT_EQ(ab.A, Eigen::MatrixXd::Constant(1, 3, 1.5));
  EXPECT_EQ(ab.b(0), 0.25);
  std::mt19937_64 rng(6);
  for (int t = 0; t < 5; ++t) EXPECT_NEAR(eval_G(bank, oracle::random_measure(g, rng)), 1.75, 1e-15);
}

TEST(ExportAffine, MatchesEvalG) {
  auto g = GroundSpace::grid(3, 3);
  const auto train = random_set(g, 5, 7);
  const auto bank = build_bank(train, DiscreteMeasure::uniform(g), {1, 4});
  const auto ab = export_affine(bank);
  ASSERT_EQ(ab.A.rows(), 2);
  const auto probes = random_set(g, 50, 8, 0.9);
  for (const auto& mu : probes) EXPECT_NEAR((ab.A * mu.weights() + ab.b).maxCoeff(), eval_G(bank, mu), 1e-14);
  std::size_t arg = argmax_G(bank, train[4]);
  EXPECT_EQ(bank.entries[arg].index, 4u);
}

TEST(CoverIndices, LargeRadiusGivesOneCenter) {
  auto g = GroundSpace::grid(3, 3);
  const auto train = random_set(g, 8, 9);
  const auto idx = select_cover_indices(train, DiscreteMeasure::uniform(g), g->diameter());
  EXPECT_EQ(idx, std::vector<std::size_t>{0});
}

TEST(CoverIndices, TinyRadiusTakesEverything) {
  auto g = GroundSpace::grid(3, 3);
  const auto train = random_set(g, 8, 10);
  EXPECT_EQ(select_cover_indices(train, DiscreteMeasure::uniform(g), 1e-9), iota(8));
  EXPECT_THROW(select_cover_indices(train, DiscreteMeasure::uniform(g), 0.0), Error);
}

TEST(CoverIndices, ThreeMeasureExample) {
  // W_2 distances: (a, b) = 0.1, (a, c) = 5, (b, c) close to 5
  auto g = GroundSpace::line(6);
  Eigen::VectorXd wb = Eigen::VectorXd::Zero(6);
  wb(0) = 0.99;
  wb(1) = 0.01;
  const std::vector<DiscreteMeasure> train{DiscreteMeasure::dirac(g, 0), DiscreteMeasure(g, wb),
                                           DiscreteMeasure::dirac(g, 5)};
  Eigen::Matrix3d dist;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) dist(i, j) = wasserstein(train[i], train[j]);
  }
  EXPECT_NEAR(dist(0, 1), 0.1, 1e-12);
  EXPECT_NEAR(dist(0, 2), 5.0, 1e-12);
  const auto idx = select_cover_indices(train, DiscreteMeasure::uniform(g), 0.2);
  EXPECT_EQ(idx.size(), 2u);
  EXPECT_EQ(static_cast<int>(idx.size()), oracle::min_cover_size(dist, 0.2));
}

TEST(CoverIndices, EveryMeasureCovered) {
  auto g = GroundSpace::grid(3, 3);
  const auto train = random_set(g, 25, 11);
  for (double delta : {0.3, 0.6, 1.0}) {
    const auto idx = select_cover_indices(train, DiscreteMeasure::uniform(g), delta);
    for (std::size_t j = 0; j < train.size(); ++j) {
      double best = std::numeric_limits<double>::infinity();
      for (auto k : idx) best = std::min(best, wasserstein(train[j], train[k]));
      EXPECT_LE(best, delta + 1e-12);
    }
    // centers are pairwise farther apart than delta (greedy order)
    for (std::size_t a = 0; a < idx.size(); ++a) {
      for (std::size_t b = a + 1; b < idx.size(); ++b) EXPECT_GT(wasserstein(train[idx[a]], train[idx[b]]), delta);
    }
  }
}

TEST(Lipschitz, BankBoundedByAnalyticConstant) {
  auto g = GroundSpace::grid(3, 3);
  const auto train = random_set(g, 10, 12);
  const auto bank = build_bank(train, DiscreteMeasure::uniform(g), iota(10));
  const double lip = bank_lipschitz(bank);
  EXPECT_LE(lip, wpp_lipschitz_bound(*g, 2.0) + 1e-9);
  const auto probes = random_set(g, 30, 13, 0.9);
  double ratio = 0.0;
  for (std::size_t i = 0; i + 1 < probes.size(); i += 2) {
    const double d = wasserstein(probes[i], probes[i + 1]);
    ratio = std::max(ratio, std::abs(eval_G(bank, probes[i]) - eval_G(bank, probes[i + 1])) / d);
  }
  EXPECT_LE(ratio, lip + 1e-9);
  Eigen::VectorXd f(3);
  f << 0, 2, 3;
  EXPECT_DOUBLE_EQ(lipschitz_constant(f, *GroundSpace::line(3)), 2.0);
}

TEST(AccuracyCover, TrainingErrorWithinEps) {
  auto g = GroundSpace::grid(3, 3);
  const auto train = random_set(g, 40, 14, 0.8);
  const auto theta = DiscreteMeasure::uniform(g);
  for (double eps : {0.5, 0.1}) {
    const auto cover = cover_for_accuracy(train, theta, eps);
    EXPECT_GE(cover.rounds, 1);
    EXPECT_NEAR(cover.delta, eps / (cover.lip_F + cover.lip_G), 1e-15);
    EXPECT_LE(bank_lipschitz(cover.bank), cover.lip_G + 1e-12);
    for (const auto& mu : train) EXPECT_LE(wpp(theta, mu) - eval_G(cover.bank, mu), eps + 1e-9);
  }
}

TEST(BankFile, RoundTrip) {
  auto g = GroundSpace::grid(2, 3);
  const auto train = random_set(g, 4, 15);
  const auto bank = build_bank(train, DiscreteMeasure::uniform(g), {3, 1});
  const auto path = (std::filesystem::temp_directory_path() / "wspace_bank_roundtrip.txt").string();
  write_bank(bank, path);
  const auto back = read_bank(path, g);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back.ref_hash, bank.ref_hash);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back.entries[i].index, bank.entries[i].index);
    EXPECT_EQ(back.entries[i].phi, bank.entries[i].phi);
    EXPECT_EQ(back.entries[i].psi_bar, bank.entries[i].psi_bar);
    EXPECT_EQ(back.entries[i].wpp, bank.entries[i].wpp);
  }
  EXPECT_THROW(read_bank(path, GroundSpace::grid(3, 3)), Error);
  std::filesystem::remove(path);
}

TEST(RandomIndices, DistinctAndSeeded) {
  const auto a = random_indices(50, 20, 3);
  const auto b = random_indices(50, 20, 3);
  EXPECT_EQ(a, b);
  std::vector<std::size_t> s = a;
  std::sort(s.begin(), s.end());
  EXPECT_EQ(std::unique(s.begin(), s.end()), s.end());
  EXPECT_THROW(random_indices(5, 6, 0), Error);
  const auto perm = random_permutation(10, 4);
  std::vector<std::size_t> sorted = perm;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, iota(10));
}

TEST(RelativeError, Conventions) {
  EXPECT_DOUBLE_EQ(relative_error(2.0, 1.5), 0.25);
  EXPECT_DOUBLE_EQ(relative_error(-2.0, -1.0), 0.5);
  EXPECT_EQ(relative_error(0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(relative_error(0.0, 0.3), 0.3);
}
