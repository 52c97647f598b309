#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "wspace/error.hpp"
#include "wspace/measure.hpp"

using namespace wspace;

namespace {

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an exception";
  return ErrorCode::kInvalidArgument;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("wspace_measure_" + name)).string();
}

}  // namespace

TEST(Normalize, Uniform) {
  auto g = GroundSpace::line(4);
  const auto mu = normalize_to_measure(g, Eigen::Vector4d(1, 1, 1, 1));
  for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(mu[i], 0.25);
}

TEST(Normalize, SingleAtom) {
  auto g = GroundSpace::line(4);
  const auto mu = normalize_to_measure(g, Eigen::Vector4d(2, 0, 0, 0));
  EXPECT_EQ(mu[0], 1.0);
  EXPECT_EQ(mu[1], 0.0);
  EXPECT_EQ(mu.support(), std::vector<std::size_t>{0});
}

TEST(Normalize, ThreeToOne) {
  auto g = GroundSpace::line(2);
  const auto mu = normalize_to_measure(g, Eigen::Vector2d(3, 1));
  EXPECT_DOUBLE_EQ(mu[0], 0.75);
  EXPECT_DOUBLE_EQ(mu[1], 0.25);
}

TEST(Normalize, Errors) {
  auto g = GroundSpace::line(3);
  EXPECT_EQ(code_of([&] { normalize_to_measure(g, Eigen::Vector3d::Zero()); }), ErrorCode::kAllZero);
  EXPECT_EQ(code_of([&] { normalize_to_measure(g, Eigen::Vector3d(1, -1, 2)); }), ErrorCode::kNegativeEntry);
  EXPECT_EQ(code_of([&] { normalize_to_measure(g, Eigen::Vector2d(1, 1)); }), ErrorCode::kDimensionMismatch);
}

TEST(DiscreteMeasure, MassTolerance) {
  auto g = GroundSpace::line(2);
  const DiscreteMeasure near(g, Eigen::Vector2d(0.5, 0.5 + 5e-10));
  EXPECT_NEAR(near.weights().sum(), 1.0, 1e-15);
  EXPECT_EQ(code_of([&] { DiscreteMeasure(g, Eigen::Vector2d(0.5, 0.6)); }), ErrorCode::kNotNormalized);
  EXPECT_EQ(code_of([&] { DiscreteMeasure(g, Eigen::Vector2d(1.5, -0.5)); }), ErrorCode::kNegativeEntry);
}

TEST(DiscreteMeasure, InvariantsAfterConstruction) {
  std::mt19937_64 rng(1);
  auto g = GroundSpace::grid(3, 4);
  for (int t = 0; t < 50; ++t) {
    const auto mu = oracle::random_measure(g, rng, 0.5);
    EXPECT_GE(mu.weights().minCoeff(), 0.0);
    EXPECT_NEAR(mu.weights().sum(), 1.0, 1e-12);
  }
  const auto u = DiscreteMeasure::uniform(g);
  EXPECT_NEAR(u.weights().sum(), 1.0, 1e-15);
  const auto d = DiscreteMeasure::dirac(g, 5);
  EXPECT_EQ(d[5], 1.0);
  EXPECT_THROW(DiscreteMeasure::dirac(g, 12), Error);
}

TEST(Moment, Examples) {
  auto line = GroundSpace::line(2);
  const auto d0 = DiscreteMeasure::dirac(line, 0);
  EXPECT_EQ(moment(d0, Eigen::VectorXd::Zero(2), 2.0), 0.0);

  Eigen::MatrixXd pts(2, 2);
  pts << 0, 0, 1, 0;
  auto plane = std::make_shared<const GroundSpace>(pts, 2.0);
  EXPECT_DOUBLE_EQ(moment(DiscreteMeasure::dirac(plane, 1), Eigen::Vector2d(0, 0), 2.0), 1.0);

  // uniform on {0, 1} in R, x0 = 0
  Eigen::MatrixXd pts1(2, 1);
  pts1 << 0, 1;
  auto r1 = std::make_shared<const GroundSpace>(pts1, 2.0);
  const auto u = DiscreteMeasure::uniform(r1);
  EXPECT_NEAR(moment(u, Eigen::VectorXd::Zero(1), 2.0), std::sqrt(0.5), 1e-15);
  EXPECT_THROW(moment(u, Eigen::Vector2d(0, 0), 2.0), Error);
}

TEST(Moment, RelabelingInvariance) {
  std::mt19937_64 rng(3);
  Eigen::MatrixXd pts = Eigen::MatrixXd::Random(6, 2);
  auto g = std::make_shared<const GroundSpace>(pts, 2.0);
  std::vector<int> perm{3, 1, 5, 0, 2, 4};
  Eigen::MatrixXd pts2(6, 2);
  for (int i = 0; i < 6; ++i) pts2.row(i) = pts.row(perm[i]);
  auto g2 = std::make_shared<const GroundSpace>(pts2, 2.0);
  for (int t = 0; t < 10; ++t) {
    const Eigen::VectorXd w = oracle::random_weights(6, rng);
    Eigen::VectorXd w2(6);
    for (int i = 0; i < 6; ++i) w2(i) = w(perm[i]);
    const Eigen::Vector2d x0(0.3, -0.2);
    for (double p : {1.0, 2.0, 3.0}) {
      EXPECT_NEAR(moment(DiscreteMeasure(g, w), x0, p), moment(DiscreteMeasure(g2, w2), x0, p), 1e-13);
    }
  }
}

TEST(GroundSpace, Validation) {
  Eigen::MatrixXd dup(2, 1);
  dup << 1, 1;
  EXPECT_THROW(GroundSpace(dup, 2.0), Error);
  Eigen::MatrixXd ok(2, 1);
  ok << 0, 1;
  EXPECT_THROW(GroundSpace(ok, 0.5), Error);
  EXPECT_THROW(GroundSpace(ok, 2.0, GridShape{2, 2}), Error);
  auto g = GroundSpace::grid(2, 3);
  EXPECT_EQ(g->size(), 6u);
  EXPECT_EQ(g->point(4)(0), 1.0);
  EXPECT_EQ(g->point(4)(1), 1.0);
  EXPECT_DOUBLE_EQ(g->distance(0, 5), std::sqrt(5.0));
  EXPECT_DOUBLE_EQ(g->diameter(), std::sqrt(5.0));
  EXPECT_DOUBLE_EQ((*g->cost_matrix())(0, 5), 5.0);
  EXPECT_NEAR((*g->cost_matrix(1.0))(0, 5), std::sqrt(5.0), 1e-15);
}

TEST(Ground, MismatchDetection) {
  auto a = GroundSpace::line(3);
  auto b = GroundSpace::line(3);
  auto c = GroundSpace::line(4);
  EXPECT_NO_THROW(require_same_ground(DiscreteMeasure::uniform(a), DiscreteMeasure::uniform(b)));
  EXPECT_EQ(code_of([&] { require_same_ground(DiscreteMeasure::uniform(a), DiscreteMeasure::uniform(c)); }),
            ErrorCode::kGroundMismatch);
}

TEST(Dataset, RoundTrip) {
  std::mt19937_64 rng(5);
  MeasureDataset d;
  d.ground = GroundSpace::grid(3, 3);
  for (int i = 0; i < 4; ++i) d.train.push_back(oracle::random_measure(d.ground, rng, 0.7));
  for (int i = 0; i < 2; ++i) d.test.push_back(oracle::random_measure(d.ground, rng));
  const auto path = temp_path("roundtrip.txt");
  write_dataset(d, path);
  const auto back = read_dataset(path);
  ASSERT_EQ(back.train.size(), 4u);
  ASSERT_EQ(back.test.size(), 2u);
  EXPECT_EQ(back.ground->grid_shape()->rows, 3);
  // rows are renormalized on read, which can move the last bit
  for (int i = 0; i < 4; ++i) EXPECT_LE((back.train[i].weights() - d.train[i].weights()).cwiseAbs().maxCoeff(), 1e-15);
  for (int i = 0; i < 2; ++i) EXPECT_LE((back.test[i].weights() - d.test[i].weights()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(&back.split("train"), &back.train);
  EXPECT_THROW(back.split("validation"), Error);
  std::filesystem::remove(path);
}

TEST(Dataset, ParseErrors) {
  const auto path = temp_path("bad.txt");
  auto expect_code = [&](const std::string& text, ErrorCode code) {
    std::ofstream(path) << text;
    EXPECT_EQ(code_of([&] { read_dataset(path); }), code) << text;
  };
  expect_code("", ErrorCode::kParse);
  expect_code("2 x 2 1 0\n", ErrorCode::kParse);
  expect_code("1 2 2 1 0\n1\n", ErrorCode::kParse);
  expect_code("1 2 2 1 0\n1 2 3\n", ErrorCode::kParse);
  expect_code("1 2 2 2 0\n1 1\n", ErrorCode::kParse);
  expect_code("1 2 2 1 0\n0 0\n", ErrorCode::kAllZero);
  expect_code("1 2 2 1 0\n1 -1\n", ErrorCode::kNegativeEntry);
  EXPECT_EQ(code_of([&] { read_dataset(temp_path("missing.txt")); }), ErrorCode::kIo);
  std::filesystem::remove(path);
}

TEST(Hash, StableAndSensitive) {
  auto g = GroundSpace::line(3);
  const auto a = DiscreteMeasure(g, Eigen::Vector3d(0.2, 0.3, 0.5));
  const auto b = DiscreteMeasure(g, Eigen::Vector3d(0.2, 0.3, 0.5));
  const auto c = DiscreteMeasure(g, Eigen::Vector3d(0.3, 0.2, 0.5));
  EXPECT_EQ(measure_hash(a), measure_hash(b));
  EXPECT_NE(measure_hash(a), measure_hash(c));
  EXPECT_EQ(measure_hash(a).size(), 16u);
  EXPECT_EQ(stable_hash(""), "cbf29ce484222325");
}
