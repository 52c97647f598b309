// Primal network simplex for the dense transportation problem.
//
// Nodes 0..m-1 are sources, m..m+n-1 are sinks. The basis is a spanning tree
// of m+n-1 arcs (degenerate arcs with zero flow included). Pricing scans the
// arc list in blocks; after many pivots it switches to Bland's rule, which
// cannot cycle.

#include <cmath>
#include <limits>
#include <vector>

#include "wspace/error.hpp"
#include "wspace/transport.hpp"

namespace wspace {

namespace {

struct Arc {
  int row;
  int col;
  double flow;
};

class Simplex {
 public:
  Simplex(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::MatrixXd& cost)
      : a_(a), b_(b), c_(cost), m_(static_cast<int>(a.size())), n_(static_cast<int>(b.size())) {
    adj_.assign(static_cast<std::size_t>(m_ + n_), {});
    u_.setZero(m_);
    v_.setZero(n_);
    in_tree_.assign(static_cast<std::size_t>(m_) * n_, -1);
    northwest_corner();
  }

  int run() {
    const long arcs = static_cast<long>(m_) * n_;
    const long bland_after = 50 * arcs + 1000;
    const long hard_cap = 2000 * arcs + 100000;
    const double scale = std::max(1.0, c_.cwiseAbs().maxCoeff());
    eps_ = 1e-13 * scale;
    const long block = std::max<long>(16, static_cast<long>(std::sqrt(static_cast<double>(arcs))));
    long cursor = 0;
    int iterations = 0;
    compute_potentials();
    for (;;) {
      const bool bland = iterations >= bland_after;
      long entering = bland ? price_bland() : price_block(block, cursor);
      if (entering < 0) break;
      pivot(static_cast<int>(entering / n_), static_cast<int>(entering % n_), bland);
      compute_potentials();
      if (++iterations > hard_cap) {
        throw Error(ErrorCode::kSolverFailure, "network simplex exceeded its pivot budget");
      }
    }
    return iterations;
  }

  TransportSolution extract(int iterations) {
    recompute_flows();
    TransportSolution s;
    s.flow = Eigen::MatrixXd::Zero(m_, n_);
    for (const Arc& e : arcs_) s.flow(e.row, e.col) = e.flow;
    s.u = u_;
    s.v = v_;
    double total = 0.0;
    for (const Arc& e : arcs_) total += c_(e.row, e.col) * e.flow;
    s.cost = total;
    s.iterations = iterations;
    return s;
  }

 private:
  int sink(int j) const { return m_ + j; }

  void add_arc(int i, int j, double flow) {
    const int id = static_cast<int>(arcs_.size());
    arcs_.push_back({i, j, flow});
    adj_[static_cast<std::size_t>(i)].push_back(id);
    adj_[static_cast<std::size_t>(sink(j))].push_back(id);
    in_tree_[static_cast<std::size_t>(i) * n_ + j] = id;
  }

  void northwest_corner() {
    std::vector<double> ra(a_.data(), a_.data() + m_);
    std::vector<double> rb(b_.data(), b_.data() + n_);
    int i = 0, j = 0;
    arcs_.reserve(static_cast<std::size_t>(m_ + n_ - 1));
    for (;;) {
      const double x = std::max(0.0, std::min(ra[i], rb[j]));
      add_arc(i, j, x);
      ra[i] -= x;
      rb[j] -= x;
      if (i == m_ - 1 && j == n_ - 1) break;
      if (i == m_ - 1) {
        ++j;
      } else if (j == n_ - 1) {
        ++i;
      } else if (ra[i] <= rb[j]) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  void compute_potentials() {
    const int nodes = m_ + n_;
    seen_.assign(static_cast<std::size_t>(nodes), 0);
    stack_.clear();
    u_(0) = 0.0;
    seen_[0] = 1;
    stack_.push_back(0);
    while (!stack_.empty()) {
      const int node = stack_.back();
      stack_.pop_back();
      for (int id : adj_[static_cast<std::size_t>(node)]) {
        const Arc& e = arcs_[static_cast<std::size_t>(id)];
        const int other = node < m_ ? sink(e.col) : e.row;
        if (seen_[static_cast<std::size_t>(other)]) continue;
        seen_[static_cast<std::size_t>(other)] = 1;
        if (node < m_) {
          v_(e.col) = c_(e.row, e.col) - u_(e.row);
        } else {
          u_(e.row) = c_(e.row, e.col) - v_(e.col);
        }
        stack_.push_back(other);
      }
    }
  }

  double reduced(long k) const {
    const int i = static_cast<int>(k / n_);
    const int j = static_cast<int>(k % n_);
    return c_(i, j) - u_(i) - v_(j);
  }

  long price_block(long block, long& cursor) {
    const long arcs = static_cast<long>(m_) * n_;
    long best = -1;
    double best_rc = -eps_;
    long scanned = 0;
    while (scanned < arcs) {
      const long stop = std::min(arcs, scanned + block);
      for (; scanned < stop; ++scanned) {
        const long k = cursor;
        cursor = cursor + 1 == arcs ? 0 : cursor + 1;
        if (in_tree_[static_cast<std::size_t>(k)] >= 0) continue;
        const double rc = reduced(k);
        if (rc < best_rc) {
          best_rc = rc;
          best = k;
        }
      }
      if (best >= 0) return best;
    }
    return -1;
  }

  long price_bland() const {
    const long arcs = static_cast<long>(m_) * n_;
    for (long k = 0; k < arcs; ++k) {
      if (in_tree_[static_cast<std::size_t>(k)] >= 0) continue;
      if (reduced(k) < -eps_) return k;
    }
    return -1;
  }

  // Tree path from sink(j) to source i as a list of arc ids, via DFS.
  void tree_path(int i, int j) {
    const int nodes = m_ + n_;
    parent_arc_.assign(static_cast<std::size_t>(nodes), -2);
    stack_.clear();
    const int start = sink(j);
    parent_arc_[static_cast<std::size_t>(start)] = -1;
    stack_.push_back(start);
    while (!stack_.empty()) {
      const int node = stack_.back();
      stack_.pop_back();
      if (node == i) break;
      for (int id : adj_[static_cast<std::size_t>(node)]) {
        const Arc& e = arcs_[static_cast<std::size_t>(id)];
        const int other = node < m_ ? sink(e.col) : e.row;
        if (parent_arc_[static_cast<std::size_t>(other)] != -2) continue;
        parent_arc_[static_cast<std::size_t>(other)] = id;
        stack_.push_back(other);
      }
    }
    path_.clear();
    int node = i;
    while (node != start) {
      const int id = parent_arc_[static_cast<std::size_t>(node)];
      path_.push_back(id);
      const Arc& e = arcs_[static_cast<std::size_t>(id)];
      node = node < m_ ? sink(e.col) : e.row;
    }
    // path_ now runs from source i back to sink j; reverse so it starts at j.
    std::reverse(path_.begin(), path_.end());
  }

  void pivot(int i, int j, bool bland) {
    tree_path(i, j);
    // Arcs at even positions (counted from sink j) lose flow.
    double theta = std::numeric_limits<double>::infinity();
    int leave_pos = -1;
    for (std::size_t t = 0; t < path_.size(); t += 2) {
      const Arc& e = arcs_[static_cast<std::size_t>(path_[t])];
      bool better = e.flow < theta;
      if (!better && e.flow == theta) {
        if (bland) {
          const long key = static_cast<long>(e.row) * n_ + e.col;
          const Arc& cur = arcs_[static_cast<std::size_t>(path_[static_cast<std::size_t>(leave_pos)])];
          better = key < static_cast<long>(cur.row) * n_ + cur.col;
        } else {
          better = true;  // prefer the arc nearest the entering source
        }
      }
      if (better) {
        theta = e.flow;
        leave_pos = static_cast<int>(t);
      }
    }
    for (std::size_t t = 0; t < path_.size(); ++t) {
      Arc& e = arcs_[static_cast<std::size_t>(path_[t])];
      if (t % 2 == 0) {
        e.flow = std::max(0.0, e.flow - theta);
      } else {
        e.flow += theta;
      }
    }
    const int leave = path_[static_cast<std::size_t>(leave_pos)];
    replace_arc(leave, i, j, theta);
  }

  void replace_arc(int id, int i, int j, double flow) {
    Arc& e = arcs_[static_cast<std::size_t>(id)];
    auto drop = [&](int node) {
      auto& list = adj_[static_cast<std::size_t>(node)];
      list.erase(std::find(list.begin(), list.end(), id));
    };
    drop(e.row);
    drop(sink(e.col));
    in_tree_[static_cast<std::size_t>(e.row) * n_ + e.col] = -1;
    e = {i, j, flow};
    adj_[static_cast<std::size_t>(i)].push_back(id);
    adj_[static_cast<std::size_t>(sink(j))].push_back(id);
    in_tree_[static_cast<std::size_t>(i) * n_ + j] = id;
  }

  // Basic flows are determined by the supplies; peel leaves so the final
  // marginals are as exact as floating point allows.
  void recompute_flows() {
    const int nodes = m_ + n_;
    std::vector<double> residual(static_cast<std::size_t>(nodes));
    for (int i = 0; i < m_; ++i) residual[static_cast<std::size_t>(i)] = a_(i);
    for (int j = 0; j < n_; ++j) residual[static_cast<std::size_t>(sink(j))] = b_(j);
    std::vector<int> degree(static_cast<std::size_t>(nodes));
    for (int v = 0; v < nodes; ++v) degree[static_cast<std::size_t>(v)] = static_cast<int>(adj_[static_cast<std::size_t>(v)].size());
    std::vector<char> done(arcs_.size(), 0);
    std::vector<int> leaves;
    for (int v = 0; v < nodes; ++v) {
      if (degree[static_cast<std::size_t>(v)] == 1) leaves.push_back(v);
    }
    while (!leaves.empty()) {
      const int leaf = leaves.back();
      leaves.pop_back();
      if (degree[static_cast<std::size_t>(leaf)] != 1) continue;
      int id = -1;
      for (int cand : adj_[static_cast<std::size_t>(leaf)]) {
        if (!done[static_cast<std::size_t>(cand)]) {
          id = cand;
          break;
        }
      }
      Arc& e = arcs_[static_cast<std::size_t>(id)];
      done[static_cast<std::size_t>(id)] = 1;
      const double f = std::max(0.0, residual[static_cast<std::size_t>(leaf)]);
      e.flow = f;
      const int other = leaf < m_ ? sink(e.col) : e.row;
      residual[static_cast<std::size_t>(leaf)] -= f;
      residual[static_cast<std::size_t>(other)] -= f;
      --degree[static_cast<std::size_t>(leaf)];
      if (--degree[static_cast<std::size_t>(other)] == 1) leaves.push_back(other);
    }
  }

  const Eigen::VectorXd& a_;
  const Eigen::VectorXd& b_;
  const Eigen::MatrixXd& c_;
  int m_;
  int n_;
  double eps_ = 0.0;
  std::vector<Arc> arcs_;
  std::vector<std::vector<int>> adj_;
  std::vector<int> in_tree_;
  Eigen::VectorXd u_;
  Eigen::VectorXd v_;
  std::vector<char> seen_;
  std::vector<int> stack_;
  std::vector<int> parent_arc_;
  std::vector<int> path_;
};

}  // namespace

TransportSolution solve_transport(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                  const Eigen::MatrixXd& cost) {
  if (a.size() == 0 || b.size() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "transport problem needs nonempty supports");
  }
  if (cost.rows() != a.size() || cost.cols() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "cost matrix shape does not match the marginals");
  }
  if ((a.array() <= 0.0).any() || (b.array() <= 0.0).any()) {
    throw Error(ErrorCode::kInvalidArgument, "transport marginals must be strictly positive");
  }
  if (std::abs(a.sum() - b.sum()) > 1e-9 * std::max(1.0, a.sum())) {
    throw Error(ErrorCode::kInvalidArgument, "transport marginals have different total mass");
  }
  if (!cost.allFinite()) throw Error(ErrorCode::kInvalidArgument, "cost matrix must be finite");
  Simplex solver(a, b, cost);
  const int iterations = solver.run();
  return solver.extract(iterations);
}

}  // namespace wspace
