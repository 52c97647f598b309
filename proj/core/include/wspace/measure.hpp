#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace wspace {

struct GridShape {
  int rows = 0;
  int cols = 0;

  friend bool operator==(const GridShape&, const GridShape&) = default;
};

/// A finite set of points in R^d with the Euclidean metric.
///
/// Points are stored row-wise. When the points enumerate a regular pixel grid
/// with unit spacing the grid shape is kept, which is what makes spatial
/// finite differences of functions on the ground space well-defined.
/// Instances are immutable; share them through GroundPtr.
class GroundSpace {
 public:
  GroundSpace(Eigen::MatrixXd points, double p,
              std::optional<GridShape> grid = std::nullopt);

  /// rows x cols pixel grid, row-major, point (r, c) at index r * cols + c.
  static std::shared_ptr<const GroundSpace> grid(int rows, int cols,
                                                 double p = 2.0);
  /// Points 0, 1, ..., n-1 on the real line (a 1 x n grid).
  static std::shared_ptr<const GroundSpace> line(int n, double p = 2.0);

  std::size_t size() const { return static_cast<std::size_t>(points_.rows()); }
  int dim() const { return static_cast<int>(points_.cols()); }
  double p() const { return p_; }
  const std::optional<GridShape>& grid_shape() const { return grid_; }
  bool is_grid() const { return grid_.has_value(); }

  const Eigen::MatrixXd& points() const { return points_; }
  Eigen::VectorXd point(std::size_t i) const { return points_.row(i).transpose(); }

  double distance(std::size_t i, std::size_t j) const { return dist_(i, j); }
  const Eigen::MatrixXd& distances() const { return dist_; }
  double diameter() const { return diameter_; }

  /// d(x, y)^p for all pairs. The matrix for the ground's own exponent is
  /// cached; other exponents are computed on demand.
  std::shared_ptr<const Eigen::MatrixXd> cost_matrix(double p) const;
  std::shared_ptr<const Eigen::MatrixXd> cost_matrix() const { return cost_; }

 private:
  Eigen::MatrixXd points_;
  double p_;
  std::optional<GridShape> grid_;
  Eigen::MatrixXd dist_;
  double diameter_ = 0.0;
  std::shared_ptr<const Eigen::MatrixXd> cost_;
};

using GroundPtr = std::shared_ptr<const GroundSpace>;

Eigen::MatrixXd pow_cost(const Eigen::MatrixXd& distances, double p);

/// Probability measure on a finite ground space: nonnegative weights summing
/// to one. Weights within 1e-9 of unit mass are renormalized on construction;
/// anything further off is rejected.
class DiscreteMeasure {
 public:
  DiscreteMeasure(GroundPtr ground, Eigen::VectorXd weights);

  static DiscreteMeasure dirac(GroundPtr ground, std::size_t atom);
  static DiscreteMeasure uniform(GroundPtr ground);

  const GroundPtr& ground() const { return ground_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  double operator[](std::size_t i) const { return weights_(static_cast<Eigen::Index>(i)); }
  std::size_t size() const { return static_cast<std::size_t>(weights_.size()); }

  /// Indices of atoms with strictly positive weight.
  std::vector<std::size_t> support() const;

  /// integral of f against this measure
  double integrate(const Eigen::VectorXd& f) const { return weights_.dot(f); }

 private:
  GroundPtr ground_;
  Eigen::VectorXd weights_;
};

inline constexpr double kUnitMassTolerance = 1e-12;
inline constexpr double kRenormalizeTolerance = 1e-9;

/// raw / sum(raw). Throws kAllZero or kNegativeEntry.
DiscreteMeasure normalize_to_measure(GroundPtr ground, const Eigen::VectorXd& raw);

/// (sum_x d(x, x0)^p mu(x))^(1/p)
double moment(const DiscreteMeasure& mu, const Eigen::VectorXd& x0, double p);

/// Throws kGroundMismatch unless both measures live on the same ground space.
void require_same_ground(const DiscreteMeasure& a, const DiscreteMeasure& b);
bool same_ground(const GroundSpace& a, const GroundSpace& b);

struct MeasureDataset {
  GroundPtr ground;
  std::vector<DiscreteMeasure> train;
  std::vector<DiscreteMeasure> test;
  std::vector<int> train_labels;  // optional; empty when unlabeled
  std::vector<int> test_labels;

  const std::vector<DiscreteMeasure>& split(const std::string& name) const;
};

/// Text format: header `rows cols p n_train n_test`, then one measure per
/// line (row-major pixels), train block first. Rows are normalized on read.
MeasureDataset read_dataset(const std::string& path);
void write_dataset(const MeasureDataset& data, const std::string& path);

/// Stable 64-bit FNV-1a hash of a weight vector, rendered as 16 hex digits.
std::string measure_hash(const DiscreteMeasure& mu);
/// FNV-1a of arbitrary bytes, same rendering.
std::string stable_hash(std::string_view bytes);

}  // namespace wspace
