#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "wspace/error.hpp"
#include "wspace/transport.hpp"

using namespace wspace;

namespace {

GroundPtr real_line(std::initializer_list<double> xs, double p = 2.0) {
  Eigen::MatrixXd pts(static_cast<Eigen::Index>(xs.size()), 1);
  Eigen::Index i = 0;
  for (double x : xs) pts(i++, 0) = x;
  return std::make_shared<const GroundSpace>(pts, p);
}

void expect_valid(const OtResult& r, const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p) {
  const auto& g = *mu.ground();
  EXPECT_LE((r.plan.gamma.rowwise().sum() - mu.weights()).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE((r.plan.gamma.colwise().sum().transpose() - nu.weights()).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_GE(r.plan.gamma.minCoeff(), 0.0);
  const double primal = r.plan.gamma.cwiseProduct(*g.cost_matrix(p)).sum();
  EXPECT_NEAR(primal, r.wpp, 1e-12 * (1 + r.wpp));
  EXPECT_NEAR(r.potentials.dual_value, r.wpp, 1e-9 * (1 + r.wpp));
  EXPECT_NEAR(nu.integrate(r.potentials.phi) + mu.integrate(r.potentials.psi), r.potentials.dual_value, 1e-12 * (1 + r.wpp));
  EXPECT_LE(dual_violation(r.potentials, g, p), 1e-9);
  EXPECT_EQ(r.potentials.psi(0), 0.0);
}

}  // namespace

TEST(ExactOt, IdenticalMeasures) {
  std::mt19937_64 rng(1);
  auto g = GroundSpace::grid(3, 3);
  const auto mu = oracle::random_measure(g, rng);
  const auto r = exact_ot(mu, mu);
  EXPECT_NEAR(r.wpp, 0.0, 1e-15);
  EXPECT_LE((r.plan.gamma - Eigen::MatrixXd(mu.weights().asDiagonal())).cwiseAbs().maxCoeff(), 1e-15);
  expect_valid(r, mu, mu, 2.0);
}

TEST(ExactOt, SinglePairing) {
  auto g = real_line({0, 1});
  const auto r = exact_ot(DiscreteMeasure::dirac(g, 0), DiscreteMeasure::dirac(g, 1));
  EXPECT_DOUBLE_EQ(r.wpp, 1.0);
  EXPECT_DOUBLE_EQ(r.plan.gamma(0, 1), 1.0);
}

TEST(ExactOt, SplitMass) {
  auto g = real_line({0, 1});
  const DiscreteMeasure mu(g, Eigen::Vector2d(0.5, 0.5));
  const DiscreteMeasure nu(g, Eigen::Vector2d(1.0, 0.0));
  const auto r = exact_ot(mu, nu);
  const Eigen::Vector2d a(0.5, 0.5);
  EXPECT_NEAR(r.wpp, 0.5, 1e-15);
  EXPECT_NEAR(oracle::lp_vertex_min(a, Eigen::Vector2d(1.0, 0.0), *g->cost_matrix()), 0.5, 1e-15);
  expect_valid(r, mu, nu, 2.0);
}

TEST(ExactOt, MatchesVertexEnumerationOn3x3) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  for (int t = 0; t < 100; ++t) {
    Eigen::MatrixXd pts(3, 2);
    for (int i = 0; i < 3; ++i) pts.row(i) << U(rng), U(rng);
    auto g = std::make_shared<const GroundSpace>(pts, 2.0);
    const auto mu = oracle::random_measure(g, rng);
    const auto nu = oracle::random_measure(g, rng);
    const double truth = oracle::lp_vertex_min(mu.weights(), nu.weights(), *g->cost_matrix());
    const auto r = exact_ot(mu, nu);
    EXPECT_NEAR(r.wpp, truth, 1e-12 * (1 + truth));
    expect_valid(r, mu, nu, 2.0);
  }
}

TEST(ExactOt, RandomPairsAcrossSizes) {
  std::mt19937_64 rng(2);
  for (int side : {2, 3, 5, 8}) {
    auto g = GroundSpace::grid(side, side);
    for (int t = 0; t < 10; ++t) {
      const auto mu = oracle::random_measure(g, rng, 0.6);
      const auto nu = oracle::random_measure(g, rng, 0.6);
      const auto r = exact_ot(mu, nu);
      expect_valid(r, mu, nu, 2.0);
      EXPECT_NEAR(wpp(mu, nu), r.wpp, 1e-12 * (1 + r.wpp));
    }
  }
}

TEST(ExactOt, OtherExponents) {
  std::mt19937_64 rng(9);
  auto g = GroundSpace::grid(3, 4, 1.5);
  for (double p : {1.0, 1.5, 3.0}) {
    for (int t = 0; t < 5; ++t) {
      const auto mu = oracle::random_measure(g, rng, 0.7);
      const auto nu = oracle::random_measure(g, rng, 0.7);
      const auto r = exact_ot(mu, nu, p);
      expect_valid(r, mu, nu, p);
    }
  }
}

TEST(ExactOt, MetricAxioms) {
  std::mt19937_64 rng(4);
  auto g = GroundSpace::grid(4, 4);
  for (int t = 0; t < 100; ++t) {
    const auto a = oracle::random_measure(g, rng, 0.5);
    const auto b = oracle::random_measure(g, rng, 0.5);
    const auto c = oracle::random_measure(g, rng, 0.5);
    const double ab = wasserstein(a, b), ba = wasserstein(b, a), bc = wasserstein(b, c), ac = wasserstein(a, c);
    EXPECT_NEAR(ab, ba, 1e-8);
    EXPECT_LE(ac, ab + bc + 1e-8);
  }
}

TEST(ExactOt, GroundMismatch) {
  EXPECT_THROW(exact_ot(DiscreteMeasure::uniform(GroundSpace::line(3)), DiscreteMeasure::uniform(GroundSpace::line(4))),
               Error);
}

TEST(SolveTransport, RejectsBadMarginals) {
  const Eigen::MatrixXd C = Eigen::MatrixXd::Ones(2, 2);
  EXPECT_THROW(solve_transport(Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(1.0, 0.0), C), Error);
  EXPECT_THROW(solve_transport(Eigen::Vector2d(0.5, 0.5), Eigen::Vector3d(0.2, 0.3, 0.5), C), Error);
}

TEST(SolveTransport, DegenerateInstance) {
  // many ties in the cost; the solver must still terminate with a valid basis
  const int n = 12;
  const Eigen::VectorXd a = Eigen::VectorXd::Constant(n, 1.0 / n);
  const Eigen::MatrixXd C = Eigen::MatrixXd::Ones(n, n) - Eigen::MatrixXd::Identity(n, n);
  const auto s = solve_transport(a, a, C);
  EXPECT_NEAR(s.cost, 0.0, 1e-15);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) EXPECT_LE(s.u(i) + s.v(j), C(i, j) + 1e-12);
  }
}

TEST(Sinkhorn, IdenticalDiracs) {
  auto g = real_line({0, 1});
  const auto d = DiscreteMeasure::dirac(g, 0);
  EXPECT_EQ(sinkhorn(d, d, 2.0, 0.5).wpp, 0.0);
}

TEST(Sinkhorn, ForcedPlan) {
  auto g = real_line({0, 1});
  const auto r = sinkhorn(DiscreteMeasure::dirac(g, 0), DiscreteMeasure::dirac(g, 1), 2.0, 0.1);
  EXPECT_NEAR(r.wpp, 1.0, 1e-12);
}

TEST(Sinkhorn, ApproachesExactAsRegShrinks) {
  auto g = real_line({0, 1});
  const DiscreteMeasure mu(g, Eigen::Vector2d(0.5, 0.5));
  const DiscreteMeasure nu(g, Eigen::Vector2d(1.0, 0.0));
  for (double reg : {1.0, 0.1, 0.01}) EXPECT_NEAR(sinkhorn(mu, nu, 2.0, reg).wpp, 0.5, 1e-9);

  std::mt19937_64 rng(3);
  auto g2 = GroundSpace::grid(4, 4);
  const auto a = oracle::random_measure(g2, rng);
  const auto b = oracle::random_measure(g2, rng);
  const double exact = wpp(a, b);
  double prev = std::numeric_limits<double>::infinity();
  for (double reg : {4.0, 1.0, 0.25, 0.0625}) {
    const double gap = std::abs(sinkhorn(a, b, 2.0, reg, 1e-10).wpp - exact);
    EXPECT_LE(gap, prev + 1e-9);
    prev = gap;
  }
  EXPECT_LT(prev, 0.05 * exact);
}

TEST(Sinkhorn, MarginalsAndNotConverged) {
  std::mt19937_64 rng(6);
  auto g = GroundSpace::grid(3, 3);
  const auto a = oracle::random_measure(g, rng);
  const auto b = oracle::random_measure(g, rng);
  const auto r = sinkhorn(a, b, 2.0, 0.5, 1e-10);
  EXPECT_LT(r.violation, 1e-10);
  EXPECT_LE((r.plan.colwise().sum().transpose() - b.weights()).cwiseAbs().sum(), 1e-9);
  try {
    sinkhorn(a, b, 2.0, 1e-3, 1e-14, 3);
    FAIL() << "expected NotConverged";
  } catch (const NotConverged& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotConverged);
    EXPECT_GT(e.violation(), 1e-14);
    EXPECT_GE(e.iterations(), 3);
  }
  EXPECT_THROW(sinkhorn(a, b, 2.0, 0.0), Error);
}

TEST(CTransform, Examples) {
  auto g = real_line({0, 1}, 1.0);
  EXPECT_EQ(c_transform(Eigen::Vector2d::Zero(), *g, 1.0), Eigen::Vector2d::Zero());
  const Eigen::VectorXd fc = c_transform(Eigen::Vector2d(0.0, 0.4), *g, 1.0);
  EXPECT_NEAR(fc(0), 0.0, 1e-15);
  EXPECT_NEAR(fc(1), -0.4, 1e-15);
}

TEST(CTransform, TripleTransformIdempotent) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> N(0.0, 3.0);
  auto g = GroundSpace::grid(3, 4);
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd f(12);
    for (int i = 0; i < 12; ++i) f(i) = N(rng);
    const Eigen::VectorXd fc = c_transform(f, *g);
    const Eigen::VectorXd fccc = c_transform(c_transform(fc, *g), *g);
    EXPECT_LE((fccc - fc).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ExactOt, PotentialsOnZeroWeightAtoms) {
  auto g = GroundSpace::line(5);
  const DiscreteMeasure mu(g, (Eigen::VectorXd(5) << 0.5, 0, 0.5, 0, 0).finished());
  const DiscreteMeasure nu(g, (Eigen::VectorXd(5) << 0, 0, 0, 0.3, 0.7).finished());
  const auto r = exact_ot(mu, nu);
  EXPECT_TRUE(r.potentials.phi.allFinite());
  EXPECT_TRUE(r.potentials.psi.allFinite());
  expect_valid(r, mu, nu, 2.0);
  // phi is the c-transform of psi on the whole ground space
  EXPECT_LE((c_transform(r.potentials.psi, *g) - r.potentials.phi).cwiseAbs().maxCoeff(), 1e-9);
}
