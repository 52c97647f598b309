#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "wspace/adversarial.hpp"
#include "wspace/error.hpp"

using namespace wspace;

namespace {

std::vector<DiscreteMeasure> random_set(const GroundPtr& g, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<DiscreteMeasure> out;
  for (int i = 0; i < n; ++i) out.push_back(oracle::random_measure(g, rng, 0.8));
  return out;
}

ReluNetwork affine(const Eigen::RowVectorXd& w, double b) {
  Layer l;
  l.W = w;
  l.b = Eigen::VectorXd::Constant(1, b);
  l.act = Activation::kNone;
  return ReluNetwork({l});
}

struct Toy {
  GroundPtr g = GroundSpace::grid(3, 3);
  GridGradient grad{*g};
  Eigen::MatrixXd X;
  Eigen::VectorXd y;

  Toy(int n, std::uint64_t seed) {
    X = stack_measures(random_set(g, n, seed));
    y = (X.transpose() * Eigen::VectorXd::LinSpaced(9, 0.5, 1.5)).array() + 1.0;
  }
};

void check_fd(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& theta,
              const Eigen::VectorXd& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, theta.size() - 1);
  const double h = 1e-6;
  int checked = 0;
  for (int attempt = 0; attempt < 200 && checked < 20; ++attempt) {
    const Eigen::Index i = pick(rng);
    Eigen::VectorXd p = theta;
    const double f0 = f(p);
    p(i) += h;
    const double fp = f(p);
    p(i) = theta(i) - h;
    const double fm = f(p);
    if (std::abs((fp - f0) - (f0 - fm)) > 1e-4 * h * (1 + std::abs(fp - f0) / h)) continue;
    const double fd = (fp - fm) / (2 * h);
    EXPECT_NEAR(g(i), fd, 1e-5 * (1 + std::abs(fd))) << "parameter " << i;
    ++checked;
  }
  EXPECT_GE(checked, 10);
}

}  // namespace

TEST(Saddle, ConstructorValidation) {
  const auto F = init_random(9, 1, 1), H = init_random(9, 1, 2);
  EXPECT_THROW(SaddleState(F, H, 0.1, 1, 0), Error);
  EXPECT_THROW(SaddleState(F, H, 0.1, 0, 1), Error);
  EXPECT_THROW(SaddleState(F, H, -0.1, 1, 1), Error);
  EXPECT_THROW(SaddleState(F, init_random(4, 1, 3), 0.1, 1, 1), Error);
  EXPECT_EQ(parse_norm_mode("l2"), NormMode::kL2);
  EXPECT_EQ(to_string(parse_norm_mode("h12")), "h12");
  EXPECT_THROW(parse_norm_mode("h1"), Error);
}

TEST(Saddle, ExactSolutionGivesZeroNumerator) {
  Toy t(20, 4);
  const ReluNetwork F = affine(Eigen::RowVectorXd::LinSpaced(9, 0.5, 1.5), 1.0);
  const SaddleState s(F, init_random(9, 2, 5), 0.0, 1, 1, NormMode::kL2);
  const auto terms = saddle_terms(s, t.X, t.y, &t.grad);
  EXPECT_NEAR(terms.numerator, 0.0, 1e-14);
  EXPECT_NEAR(loss_solution(s, t.X, t.y, &t.grad), 0.0, 1e-12);
}

TEST(Saddle, ScaleInvariantInTheAdversary) {
  Toy t(15, 6);
  for (NormMode mode : {NormMode::kH12, NormMode::kL2}) {
    SaddleState s(init_random(9, 2, 7), init_random(9, 2, 8), 0.4, 1, 1, mode);
    const double before = loss_adversary(s, t.X, t.y, &t.grad);
    s.H.layers().back().W *= 3.0;
    EXPECT_NEAR(loss_adversary(s, t.X, t.y, &t.grad), before, 1e-9 * (1 + std::abs(before)));
  }
}

TEST(Saddle, HandComputedTwoSamples) {
  Eigen::MatrixXd X(2, 2);
  X << 1, 0, 0, 1;
  const Eigen::Vector2d y(1.0, 3.0);
  // F = 2 x0 + x1 so F = (2, 1), residual (1, -2); H = x0 - x1 gives (1, -1)
  const SaddleState s(affine(Eigen::RowVector2d(2, 1), 0), affine(Eigen::RowVector2d(1, -1), 0), 0.0, 1, 1,
                      NormMode::kL2);
  const auto terms = saddle_terms(s, X, y, nullptr);
  EXPECT_NEAR(terms.l2_inner, 1.5, 1e-15);
  EXPECT_NEAR(terms.numerator, 1.5, 1e-15);
  EXPECT_NEAR(terms.denominator, 1.0, 1e-15);
  EXPECT_NEAR(loss_solution(s, X, y, nullptr), 1.5, 1e-15);
  EXPECT_NEAR(loss_adversary(s, X, y, nullptr), -1.5, 1e-15);
}

TEST(Saddle, NormsAgreeForConstantAdversary) {
  Toy t(10, 9);
  const ReluNetwork H = affine(Eigen::RowVectorXd::Zero(9), 0.7);
  const SaddleState h12(init_random(9, 1, 10), H, 0.0, 1, 1, NormMode::kH12);
  const SaddleState l2(init_random(9, 1, 10), H, 0.0, 1, 1, NormMode::kL2);
  EXPECT_NEAR(loss_solution(h12, t.X, t.y, &t.grad), loss_solution(l2, t.X, t.y, &t.grad), 1e-14);
  const SaddleState h12_lam(init_random(9, 1, 10), H, 0.5, 1, 1, NormMode::kH12);
  EXPECT_NEAR(loss_solution(h12_lam, t.X, t.y, &t.grad), loss_solution(l2, t.X, t.y, &t.grad), 1e-14);
}

TEST(Saddle, EnergyTermMatchesDefinition) {
  Toy t(6, 11);
  const SaddleState s(init_random(9, 2, 12), init_random(9, 2, 13), 0.3, 1, 1, NormMode::kH12);
  ForwardCache cf, ch;
  const Eigen::RowVectorXd f = s.F.forward_batch(t.X, cf), h = s.H.forward_batch(t.X, ch);
  const Eigen::MatrixXd uF = s.F.input_gradients(cf), uH = s.H.input_gradients(ch);
  double inner = 0.0, hh = 0.0, l2 = 0.0;
  for (Eigen::Index j = 0; j < t.X.cols(); ++j) {
    const Eigen::MatrixXd dF = t.grad.apply(uF.col(j)), dH = t.grad.apply(uH.col(j));
    for (Eigen::Index x = 0; x < 9; ++x) {
      inner += t.X(x, j) * dF.row(x).dot(dH.row(x));
      hh += t.X(x, j) * dH.row(x).squaredNorm();
    }
    l2 += (f(j) - t.y(j)) * h(j);
  }
  const double B = static_cast<double>(t.X.cols());
  const auto terms = saddle_terms(s, t.X, t.y, &t.grad);
  EXPECT_NEAR(terms.energy_inner, inner / B, 1e-12);
  EXPECT_NEAR(terms.l2_inner, l2 / B, 1e-12);
  EXPECT_NEAR(terms.numerator, (l2 + 0.3 * inner) / B, 1e-12);
  EXPECT_NEAR(terms.denominator, std::sqrt((h.squaredNorm() + hh) / B), 1e-12);
  EXPECT_THROW(saddle_terms(s, t.X, t.y, nullptr), Error);
}

TEST(Saddle, L2ModeDropsEnergyFromNumerator) {
  Toy t(6, 14);
  const SaddleState s(init_random(9, 2, 15), init_random(9, 2, 16), 0.3, 1, 1, NormMode::kL2);
  const auto terms = saddle_terms(s, t.X, t.y, &t.grad);
  EXPECT_EQ(terms.numerator, terms.l2_inner);
}

TEST(Saddle, DegenerateAdversary) {
  Toy t(5, 17);
  const SaddleState s(init_random(9, 1, 18), affine(Eigen::RowVectorXd::Zero(9), 0.0), 0.1, 1, 1);
  try {
    loss_adversary(s, t.X, t.y, &t.grad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateAdversary);
  }
  EXPECT_THROW(solution_loss_and_gradient(s, t.X, t.y, &t.grad), Error);
}

TEST(Saddle, GradientsMatchFiniteDifferences) {
  Toy t(12, 19);
  for (NormMode mode : {NormMode::kH12, NormMode::kL2}) {
    SaddleState s(init_random(9, 2, 20), init_random(9, 2, 21), 0.25, 1, 1, mode);
    s.F.set_trainable(true);
    s.H.set_trainable(true);
    {
      const Eigen::VectorXd g = s.H.flatten(adversary_loss_and_gradient(s, t.X, t.y, &t.grad).grad);
      check_fd(
          [&](const Eigen::VectorXd& p) {
            SaddleState c = s;
            c.H.set_parameters(p);
            return loss_adversary(c, t.X, t.y, &t.grad);
          },
          s.H.get_parameters(), g, 22);
    }
    {
      const auto bl = solution_loss_and_gradient(s, t.X, t.y, &t.grad);
      EXPECT_NEAR(bl.value, loss_solution(s, t.X, t.y, &t.grad), 1e-14);
      const Eigen::VectorXd g = s.F.flatten(bl.grad);
      check_fd(
          [&](const Eigen::VectorXd& p) {
            SaddleState c = s;
            c.F.set_parameters(p);
            return loss_solution(c, t.X, t.y, &t.grad);
          },
          s.F.get_parameters(), g, 23);
    }
  }
}

TEST(Saddle, LinearAdversaryAttainsRayleighBound) {
  // With H(x) = w . x + b and the L2 norm, sup_H numerator / |H| equals
  // sqrt(c^T A^{-1} c) for c = mean r z and A = mean z z^T, z = (x, 1).
  auto g = GroundSpace::grid(2, 2);
  const Eigen::MatrixXd X = stack_measures(random_set(g, 30, 24));
  std::mt19937_64 rng(25);
  std::normal_distribution<double> N01;
  Eigen::VectorXd y(30);
  for (Eigen::Index j = 0; j < 30; ++j) y(j) = N01(rng);
  const ReluNetwork F = init_random(4, 1, 26);
  const Eigen::RowVectorXd r = F.forward_batch(X) - y.transpose();
  // drop one pixel coordinate: the weights sum to one, so (x, 1) is collinear
  Eigen::MatrixXd Z(4, 30);
  Z.topRows(3) = X.topRows(3);
  Z.row(3).setOnes();
  const Eigen::VectorXd c = Z * r.transpose() / 30.0;
  const Eigen::MatrixXd A = Z * Z.transpose() / 30.0;
  const Eigen::VectorXd best = A.ldlt().solve(c);
  const double bound = std::sqrt(c.dot(best));
  const ReluNetwork Hstar = affine((Eigen::RowVectorXd(4) << best.head(3).transpose(), 0.0).finished(), best(3));
  EXPECT_NEAR(loss_solution(SaddleState(F, Hstar, 0.0, 1, 1, NormMode::kL2), X, y, nullptr), bound, 1e-10);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::RowVectorXd w(4);
    for (int i = 0; i < 4; ++i) w(i) = N01(rng);
    const SaddleState s(F, affine(w, N01(rng)), 0.0, 1, 1, NormMode::kL2);
    EXPECT_LE(loss_solution(s, X, y, nullptr), bound + 1e-10);
  }
}

TEST(Algorithm1, TraceShapeAndDeterminism) {
  Toy t(24, 27);
  SaddleConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 8;
  cfg.lr_solution = 1e-2;
  cfg.lr_adversary = 1e-2;
  cfg.seed = 28;
  SaddleState a(init_random(9, 2, 29), init_random(9, 2, 30), 0.1, 2, 1);
  SaddleState b = a;
  const auto ta = run_algorithm1(a, t.X, t.y, t.X, t.y, cfg, &t.grad);
  const auto tb = run_algorithm1(b, t.X, t.y, t.X, t.y, cfg, &t.grad);
  ASSERT_EQ(ta.epochs.size(), 4u);
  for (std::size_t i = 0; i < ta.epochs.size(); ++i) {
    EXPECT_EQ(ta.epochs[i].epoch, static_cast<int>(i));
    EXPECT_EQ(ta.epochs[i].solution_loss, tb.epochs[i].solution_loss);
    EXPECT_NEAR(ta.epochs[i].adversary_loss, -ta.epochs[i].solution_loss, 1e-15);
  }
  EXPECT_EQ(a.F.get_parameters(), b.F.get_parameters());
}

TEST(Algorithm1, SolutionApproachesRealizableTarget) {
  auto g = GroundSpace::grid(2, 2);
  const GridGradient grad(*g);
  const Eigen::MatrixXd X = stack_measures(random_set(g, 20, 31));
  const Eigen::VectorXd y = init_random(4, 1, 32).forward_batch(X).transpose().array() + 1.0;
  SaddleState s(init_random(4, 1, 33), init_random(4, 1, 34), 0.0, 1, 2, NormMode::kH12);
  SaddleConfig cfg;
  cfg.epochs = 60;
  cfg.batch_size = 5;
  cfg.lr_solution = 1e-3;
  cfg.lr_adversary = 1e-1;
  cfg.seed = 35;
  const auto trace = run_algorithm1(s, X, y, X, y, cfg, &grad);
  EXPECT_LT(trace.epochs.back().train_error, 0.5 * trace.epochs.front().train_error);
}
