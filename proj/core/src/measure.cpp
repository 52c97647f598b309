#include "wspace/measure.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>

#include "wspace/error.hpp"

namespace wspace {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kAllZero: return "AllZero";
    case ErrorCode::kNegativeEntry: return "NegativeEntry";
    case ErrorCode::kNotNormalized: return "NotNormalized";
    case ErrorCode::kGroundMismatch: return "GroundMismatch";
    case ErrorCode::kSolverFailure: return "SolverFailure";
    case ErrorCode::kNotConverged: return "NotConverged";
    case ErrorCode::kNoSpatialGradient: return "NoSpatialGradient";
    case ErrorCode::kEmptyBank: return "EmptyBank";
    case ErrorCode::kEmptyCover: return "EmptyCover";
    case ErrorCode::kRankDeficient: return "RankDeficient";
    case ErrorCode::kSingular: return "Singular";
    case ErrorCode::kTooManyRows: return "TooManyRows";
    case ErrorCode::kDiverged: return "Diverged";
    case ErrorCode::kDegenerateAdversary: return "DegenerateAdversary";
    case ErrorCode::kParse: return "Parse";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

Eigen::MatrixXd pow_cost(const Eigen::MatrixXd& distances, double p) {
  if (p == 2.0) return distances.array().square().matrix();
  if (p == 1.0) return distances;
  return distances.array().pow(p).matrix();
}

GroundSpace::GroundSpace(Eigen::MatrixXd points, double p,
                         std::optional<GridShape> grid)
    : points_(std::move(points)), p_(p), grid_(grid) {
  if (points_.rows() == 0 || points_.cols() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "ground space needs at least one point of dimension >= 1");
  }
  if (!(p_ >= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "metric order p must be >= 1");
  }
  const Eigen::Index n = points_.rows();
  if (grid_) {
    if (grid_->rows < 1 || grid_->cols < 1 ||
        static_cast<Eigen::Index>(grid_->rows) * grid_->cols != n || points_.cols() != 2) {
      throw Error(ErrorCode::kInvalidArgument, "grid shape does not match the point list");
    }
    for (int r = 0; r < grid_->rows; ++r) {
      for (int c = 0; c < grid_->cols; ++c) {
        const Eigen::Index i = static_cast<Eigen::Index>(r) * grid_->cols + c;
        if (points_(i, 0) != r || points_(i, 1) != c) {
          throw Error(ErrorCode::kInvalidArgument, "grid points must enumerate the grid row-major");
        }
      }
    }
  }
  dist_.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    dist_(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = (points_.row(i) - points_.row(j)).norm();
      if (d == 0.0) {
        throw Error(ErrorCode::kInvalidArgument, "ground points must be pairwise distinct");
      }
      dist_(i, j) = d;
      dist_(j, i) = d;
    }
  }
  diameter_ = dist_.maxCoeff();
  cost_ = std::make_shared<const Eigen::MatrixXd>(pow_cost(dist_, p_));
}

std::shared_ptr<const GroundSpace> GroundSpace::grid(int rows, int cols, double p) {
  if (rows < 1 || cols < 1) throw Error(ErrorCode::kInvalidArgument, "grid must be at least 1x1");
  Eigen::MatrixXd pts(static_cast<Eigen::Index>(rows) * cols, 2);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      pts(r * cols + c, 0) = r;
      pts(r * cols + c, 1) = c;
    }
  }
  return std::make_shared<const GroundSpace>(std::move(pts), p, GridShape{rows, cols});
}

std::shared_ptr<const GroundSpace> GroundSpace::line(int n, double p) {
  return grid(1, n, p);
}

std::shared_ptr<const Eigen::MatrixXd> GroundSpace::cost_matrix(double p) const {
  if (p == p_) return cost_;
  return std::make_shared<const Eigen::MatrixXd>(pow_cost(dist_, p));
}

namespace {

Eigen::VectorXd checked_weights(const Eigen::VectorXd& w, std::size_t n) {
  if (static_cast<std::size_t>(w.size()) != n) {
    throw Error(ErrorCode::kDimensionMismatch, "weight vector length does not match the ground space");
  }
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (!std::isfinite(w(i))) throw Error(ErrorCode::kInvalidArgument, "non-finite weight");
    if (w(i) < 0.0) throw Error(ErrorCode::kNegativeEntry, "negative weight at atom " + std::to_string(i));
  }
  const double total = w.sum();
  if (std::abs(total - 1.0) <= kUnitMassTolerance) return w;
  if (std::abs(total - 1.0) <= kRenormalizeTolerance) return w / total;
  throw Error(ErrorCode::kNotNormalized, "weights sum to " + std::to_string(total) + ", not 1");
}

}  // namespace

DiscreteMeasure::DiscreteMeasure(GroundPtr ground, Eigen::VectorXd weights)
    : ground_(std::move(ground)) {
  if (!ground_) throw Error(ErrorCode::kInvalidArgument, "measure needs a ground space");
  weights_ = checked_weights(weights, ground_->size());
}

DiscreteMeasure DiscreteMeasure::dirac(GroundPtr ground, std::size_t atom) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ground->size()));
  if (atom >= ground->size()) throw Error(ErrorCode::kInvalidArgument, "atom index out of range");
  w(static_cast<Eigen::Index>(atom)) = 1.0;
  return DiscreteMeasure(std::move(ground), std::move(w));
}

DiscreteMeasure DiscreteMeasure::uniform(GroundPtr ground) {
  const auto n = static_cast<Eigen::Index>(ground->size());
  return DiscreteMeasure(std::move(ground), Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
}

std::vector<std::size_t> DiscreteMeasure::support() const {
  std::vector<std::size_t> out;
  for (Eigen::Index i = 0; i < weights_.size(); ++i) {
    if (weights_(i) > 0.0) out.push_back(static_cast<std::size_t>(i));
  }
  return out;
}

DiscreteMeasure normalize_to_measure(GroundPtr ground, const Eigen::VectorXd& raw) {
  for (Eigen::Index i = 0; i < raw.size(); ++i) {
    if (raw(i) < 0.0) throw Error(ErrorCode::kNegativeEntry, "negative entry at " + std::to_string(i));
    if (!std::isfinite(raw(i))) throw Error(ErrorCode::kInvalidArgument, "non-finite entry");
  }
  const double total = raw.sum();
  if (!(total > 0.0)) throw Error(ErrorCode::kAllZero, "cannot normalize an all-zero vector");
  return DiscreteMeasure(std::move(ground), raw / total);
}

double moment(const DiscreteMeasure& mu, const Eigen::VectorXd& x0, double p) {
  const auto& pts = mu.ground()->points();
  if (x0.size() != pts.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "reference point has the wrong dimension");
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const double w = mu.weights()(i);
    if (w == 0.0) continue;
    acc += std::pow((pts.row(i).transpose() - x0).norm(), p) * w;
  }
  return std::pow(acc, 1.0 / p);
}

bool same_ground(const GroundSpace& a, const GroundSpace& b) {
  if (&a == &b) return true;
  return a.points().rows() == b.points().rows() && a.points().cols() == b.points().cols() &&
         a.points() == b.points();
}

void require_same_ground(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  if (!same_ground(*a.ground(), *b.ground())) {
    throw Error(ErrorCode::kGroundMismatch, "measures live on different ground spaces");
  }
}

const std::vector<DiscreteMeasure>& MeasureDataset::split(const std::string& name) const {
  if (name == "train") return train;
  if (name == "test") return test;
  throw Error(ErrorCode::kInvalidArgument, "unknown split '" + name + "' (expected train|test)");
}

namespace {

std::string render_hash(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

std::string stable_hash(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  return render_hash(h);
}

std::string measure_hash(const DiscreteMeasure& mu) {
  const auto& w = mu.weights();
  std::string bytes(static_cast<std::size_t>(w.size()) * sizeof(double), '\0');
  std::memcpy(bytes.data(), w.data(), bytes.size());
  return stable_hash(bytes);
}

}  // namespace wspace
