#include "wspace/subcover.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "wspace/error.hpp"
#include "wspace/parallel.hpp"
#include "wspace/transport.hpp"

namespace wspace {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Eigen::VectorXd checked_probability(const Eigen::VectorXd& w, std::size_t n) {
  if (static_cast<std::size_t>(w.size()) != n) {
    throw Error(ErrorCode::kDimensionMismatch, "one weight per sample element required");
  }
  if ((w.array() < 0.0).any()) throw Error(ErrorCode::kNegativeEntry, "negative sample weight");
  const double total = w.sum();
  if (std::abs(total - 1.0) > kRenormalizeTolerance) {
    throw Error(ErrorCode::kNotNormalized, "sample weights must sum to 1");
  }
  return w / total;
}

class AtomSampler {
 public:
  explicit AtomSampler(const Eigen::VectorXd& w) : cdf_(static_cast<std::size_t>(w.size())) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      acc += w(i);
      cdf_[static_cast<std::size_t>(i)] = acc;
    }
    cdf_.back() = std::numeric_limits<double>::infinity();
  }

  template <class Rng>
  std::size_t operator()(Rng& rng) const {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    std::size_t i = static_cast<std::size_t>(std::upper_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin());
    return std::min(i, cdf_.size() - 1);
  }

 private:
  std::vector<double> cdf_;
};

}  // namespace

MetricSample::MetricSample(std::vector<DiscreteMeasure> elements, double p,
                           std::optional<Eigen::VectorXd> weights)
    : elements_(std::move(elements)), n_(elements_.size()), p_(p) {
  if (n_ == 0) throw Error(ErrorCode::kInvalidArgument, "metric sample must be nonempty");
  for (const auto& mu : elements_) require_same_ground(mu, elements_.front());
  weights_ = weights ? checked_probability(*weights, n_) : uniform_weights_vector();
}

MetricSample::MetricSample(Eigen::MatrixXd distances, Eigen::VectorXd weights)
    : n_(static_cast<std::size_t>(distances.rows())), dist_(std::move(distances)) {
  if (n_ == 0 || dist_.cols() != dist_.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "distance matrix must be square and nonempty");
  }
  if ((dist_ - dist_.transpose()).cwiseAbs().maxCoeff() > 0.0 || dist_.diagonal().cwiseAbs().maxCoeff() > 0.0 ||
      (dist_.array() < 0.0).any()) {
    throw Error(ErrorCode::kInvalidArgument, "distance matrix must be symmetric, nonnegative, zero on the diagonal");
  }
  weights_ = checked_probability(weights, n_);
  std::call_once(once_, [] {});
}

Eigen::VectorXd MetricSample::uniform_weights_vector() const {
  return Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n_), 1.0 / static_cast<double>(n_));
}

const Eigen::MatrixXd& MetricSample::distances() const {
  std::call_once(once_, [this] {
    const auto n = static_cast<Eigen::Index>(n_);
    dist_ = Eigen::MatrixXd::Zero(n, n);
    const std::size_t pairs = n_ * (n_ - 1) / 2;
    std::vector<std::pair<std::size_t, std::size_t>> list;
    list.reserve(pairs);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = i + 1; j < n_; ++j) list.emplace_back(i, j);
    }
    std::vector<double> values(list.size());
    parallel_for(list.size(), [&](std::size_t t) {
      values[t] = wasserstein(elements_[list[t].first], elements_[list[t].second], p_);
    });
    for (std::size_t t = 0; t < list.size(); ++t) {
      const auto i = static_cast<Eigen::Index>(list[t].first);
      const auto j = static_cast<Eigen::Index>(list[t].second);
      dist_(i, j) = values[t];
      dist_(j, i) = values[t];
    }
  });
  return dist_;
}

double MetricSample::diameter() const {
  const auto& d = distances();
  double best = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    if (weights_(static_cast<Eigen::Index>(i)) <= 0.0) continue;
    for (std::size_t j = i + 1; j < n_; ++j) {
      if (weights_(static_cast<Eigen::Index>(j)) <= 0.0) continue;
      best = std::max(best, d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
  }
  return best;
}

Eigen::VectorXd MetricSample::ball_masses(double eps) const {
  const auto& d = distances();
  const auto n = static_cast<Eigen::Index>(n_);
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double m = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (d(i, j) < eps) m += weights_(j);
    }
    out(i) = std::min(1.0, m);
  }
  return out;
}

double p_eps_k_closed(const MetricSample& s, double eps, int k) {
  if (!(eps > 0.0)) throw Error(ErrorCode::kInvalidArgument, "eps must be > 0");
  if (k < 0) throw Error(ErrorCode::kInvalidArgument, "k must be >= 0");
  if (k == 0) return 0.0;
  const Eigen::VectorXd ball = s.ball_masses(eps);
  double miss = 0.0;
  for (Eigen::Index i = 0; i < ball.size(); ++i) {
    miss += s.weights()(i) * std::pow(1.0 - ball(i), k);
  }
  return 1.0 - miss;
}

double p_eps_k_tuples(const MetricSample& s, double eps, int k, double max_tuples) {
  if (!(eps > 0.0)) throw Error(ErrorCode::kInvalidArgument, "eps must be > 0");
  if (k < 0) throw Error(ErrorCode::kInvalidArgument, "k must be >= 0");
  if (k == 0) return 0.0;
  const auto n = static_cast<Eigen::Index>(s.size());
  if (std::pow(static_cast<double>(n), k) > max_tuples) {
    throw Error(ErrorCode::kInvalidArgument, "too many tuples to enumerate");
  }
  const auto& d = s.distances();
  const auto& w = s.weights();
  // Depth-first over tuples; outside(y) stays true while y is outside every
  // chosen ball.
  std::vector<std::vector<char>> outside(static_cast<std::size_t>(k) + 1,
                                         std::vector<char>(static_cast<std::size_t>(n), 1));
  double expected_miss = 0.0;
  auto recurse = [&](auto&& self, int depth, double prob) -> void {
    if (prob == 0.0) return;
    if (depth == k) {
      double m = 0.0;
      for (Eigen::Index y = 0; y < n; ++y) {
        if (outside[static_cast<std::size_t>(depth)][static_cast<std::size_t>(y)]) m += w(y);
      }
      expected_miss += prob * m;
      return;
    }
    for (Eigen::Index x = 0; x < n; ++x) {
      auto& next = outside[static_cast<std::size_t>(depth) + 1];
      const auto& cur = outside[static_cast<std::size_t>(depth)];
      for (Eigen::Index y = 0; y < n; ++y) {
        next[static_cast<std::size_t>(y)] = cur[static_cast<std::size_t>(y)] && !(d(x, y) < eps);
      }
      self(self, depth + 1, prob * w(x));
    }
  };
  recurse(recurse, 0, 1.0);
  return 1.0 - expected_miss;
}

MonteCarloEstimate p_eps_k_monte_carlo(const MetricSample& s, double eps, int k, int trials,
                                       std::uint64_t seed) {
  if (trials < 1) throw Error(ErrorCode::kInvalidArgument, "trials must be >= 1");
  if (k < 0) throw Error(ErrorCode::kInvalidArgument, "k must be >= 0");
  const auto& d = s.distances();
  const AtomSampler draw(s.weights());
  std::vector<char> hit(static_cast<std::size_t>(trials), 0);
  parallel_for(static_cast<std::size_t>(trials), [&](std::size_t t) {
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(t)));
    std::vector<std::size_t> centers(static_cast<std::size_t>(k));
    for (auto& c : centers) c = draw(rng);
    const std::size_t x = draw(rng);
    for (std::size_t c : centers) {
      if (d(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(c)) < eps) {
        hit[t] = 1;
        break;
      }
    }
  });
  long hits = 0;
  for (char h : hit) hits += h;
  MonteCarloEstimate out;
  out.trials = trials;
  out.estimate = static_cast<double>(hits) / trials;
  out.std_error = std::sqrt(out.estimate * (1.0 - out.estimate) / trials);
  return out;
}

double min_ball_mass(const MetricSample& s, double eps) {
  const Eigen::VectorXd ball = s.ball_masses(eps);
  double best = 1.0;
  for (Eigen::Index i = 0; i < ball.size(); ++i) {
    if (s.weights()(i) > 0.0) best = std::min(best, ball(i));
  }
  return best;
}

CoveringNumber covering_number_bound(const MetricSample& s, double eps, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorCode::kInvalidArgument, "delta must lie in (0, 1)");
  const Eigen::VectorXd ball = s.ball_masses(eps);
  CoveringNumber out;
  double integral = 0.0;
  for (Eigen::Index i = 0; i < ball.size(); ++i) {
    const double w = s.weights()(i);
    if (w <= 0.0) continue;
    const double miss = 1.0 - ball(i);
    if (miss >= 1.0) out.unbounded = true;
    integral += w * std::log(miss);  // -inf when the ball holds all mass
  }
  out.log_integral = integral;
  if (out.unbounded) {
    out.bound = std::numeric_limits<long>::max();
  } else {
    const double ratio = std::log(delta) / integral;
    out.bound = std::max<long>(1, static_cast<long>(std::ceil(ratio)));
  }
  // Closed form is nondecreasing in k: double, then bisect.
  long hi = 1;
  const long cap = 1L << 40;
  while (p_eps_k_closed(s, eps, static_cast<int>(std::min<long>(hi, std::numeric_limits<int>::max()))) < 1.0 - delta) {
    if (hi >= cap || hi >= std::numeric_limits<int>::max() / 2) {
      out.exact_min_k = -1;
      return out;
    }
    hi *= 2;
  }
  long lo = hi / 2;  // p(lo) < 1 - delta unless lo == 0
  while (hi - lo > 1) {
    const long mid = lo + (hi - lo) / 2;
    if (p_eps_k_closed(s, eps, static_cast<int>(mid)) >= 1.0 - delta) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  out.exact_min_k = hi;
  return out;
}

Eigen::VectorXd empirical_subcover_measure(const MetricSample& s,
                                           const std::vector<std::size_t>& centers, double eps) {
  const auto n = static_cast<Eigen::Index>(s.size());
  for (std::size_t c : centers) {
    if (c >= s.size()) throw Error(ErrorCode::kInvalidArgument, "center index out of range");
  }
  const auto& d = s.distances();
  std::vector<char> assigned(static_cast<std::size_t>(n), 0);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (std::size_t c : centers) {
    for (Eigen::Index y = 0; y < n; ++y) {
      if (assigned[static_cast<std::size_t>(y)] || !(d(static_cast<Eigen::Index>(c), y) < eps)) continue;
      assigned[static_cast<std::size_t>(y)] = 1;
      out(static_cast<Eigen::Index>(c)) += s.weights()(y);
    }
  }
  const double total = out.sum();
  if (!(total > 0.0)) throw Error(ErrorCode::kEmptyCover, "no sample mass lies in any ball");
  return out / total;
}

std::vector<std::size_t> draw_atoms(const MetricSample& s, int k, std::uint64_t seed) {
  if (k < 0) throw Error(ErrorCode::kInvalidArgument, "k must be >= 0");
  std::mt19937_64 rng(splitmix64(seed));
  const AtomSampler draw(s.weights());
  std::vector<std::size_t> out(static_cast<std::size_t>(k));
  for (auto& c : out) c = draw(rng);
  return out;
}

double nested_wasserstein(const MetricSample& s, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const auto n = static_cast<Eigen::Index>(s.size());
  if (a.size() != n || b.size() != n) throw Error(ErrorCode::kDimensionMismatch, "weight length mismatch");
  std::vector<Eigen::Index> rows, cols;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (a(i) > 0.0) rows.push_back(i);
    if (b(i) > 0.0) cols.push_back(i);
  }
  if (rows.empty() || cols.empty()) throw Error(ErrorCode::kInvalidArgument, "empty support");
  const auto& d = s.distances();
  Eigen::VectorXd ra(static_cast<Eigen::Index>(rows.size())), rb(static_cast<Eigen::Index>(cols.size()));
  Eigen::MatrixXd cost(ra.size(), rb.size());
  for (std::size_t i = 0; i < rows.size(); ++i) ra(static_cast<Eigen::Index>(i)) = a(rows[i]);
  for (std::size_t j = 0; j < cols.size(); ++j) rb(static_cast<Eigen::Index>(j)) = b(cols[j]);
  rb *= ra.sum() / rb.sum();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = std::pow(d(rows[i], cols[j]), s.p());
    }
  }
  const double wpp = solve_transport(ra, rb, cost).cost;
  return std::pow(std::max(0.0, wpp), 1.0 / s.p());
}

double corollary_constant(const MetricSample& s, double eps) {
  const double D = s.diameter() + 2.0 * eps;
  return 2.0 * std::pow(D, (s.p() - 1.0) / s.p()) * (D + 1.0);
}

double expected_min_distance_loss(const MetricSample& s, int k) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  const auto n = static_cast<Eigen::Index>(s.size());
  const auto& d = s.distances();
  const auto& w = s.weights();
  // For fixed x, E[min(m, 1)] = int_0^1 P(m > t) dt with m = min_i d(x, X_i)
  // and P(m > t) = p({y : d(x, y) > t})^k, a step function of t.
  double total = 0.0;
  std::vector<std::pair<double, double>> rows(static_cast<std::size_t>(n));
  for (Eigen::Index x = 0; x < n; ++x) {
    if (w(x) <= 0.0) continue;
    for (Eigen::Index y = 0; y < n; ++y) rows[static_cast<std::size_t>(y)] = {d(x, y), w(y)};
    std::sort(rows.begin(), rows.end());
    double beyond = 1.0;  // mass with distance > t for t just above the previous break
    double prev = 0.0;
    double integral = 0.0;
    for (const auto& [dist, mass] : rows) {
      const double t = std::min(dist, 1.0);
      if (t > prev) {
        integral += (t - prev) * std::pow(std::max(0.0, beyond), k);
        prev = t;
      }
      if (prev >= 1.0) break;
      beyond -= mass;
    }
    total += w(x) * integral;
  }
  return total;
}

}  // namespace wspace
