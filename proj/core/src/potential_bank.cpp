#include "wspace/potential_bank.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "wspace/error.hpp"
#include "wspace/parallel.hpp"
#include "wspace/transport.hpp"

namespace wspace {

PotentialBank build_bank(const std::vector<DiscreteMeasure>& train, const DiscreteMeasure& theta,
                         const std::vector<std::size_t>& indices, double p) {
  for (std::size_t k : indices) {
    if (k >= train.size()) {
      throw Error(ErrorCode::kInvalidArgument, "bank index " + std::to_string(k) + " out of range");
    }
  }
  PotentialBank bank;
  bank.ground = theta.ground();
  bank.p = p;
  bank.ref_hash = measure_hash(theta);
  bank.entries.resize(indices.size());
  parallel_for(indices.size(), [&](std::size_t i) {
    const std::size_t k = indices[i];
    const OtResult ot = exact_ot(theta, train[k], p);
    BankEntry& e = bank.entries[i];
    e.index = k;
    e.phi = ot.potentials.phi;
    e.psi_bar = theta.integrate(ot.potentials.psi);
    e.wpp = ot.wpp;
  });
  return bank;
}

std::size_t argmax_G(const PotentialBank& bank, const DiscreteMeasure& mu) {
  if (bank.empty()) throw Error(ErrorCode::kEmptyBank, "potential bank is empty");
  std::size_t best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < bank.entries.size(); ++i) {
    const double v = mu.integrate(bank.entries[i].phi) + bank.entries[i].psi_bar;
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  return best;
}

double eval_G(const PotentialBank& bank, const DiscreteMeasure& mu) {
  const auto& e = bank.entries[argmax_G(bank, mu)];
  return mu.integrate(e.phi) + e.psi_bar;
}

AffineExport export_affine(const PotentialBank& bank) {
  if (bank.empty()) throw Error(ErrorCode::kEmptyBank, "potential bank is empty");
  const auto rows = static_cast<Eigen::Index>(bank.size());
  const auto cols = static_cast<Eigen::Index>(bank.ground->size());
  AffineExport out;
  out.A.resize(rows, cols);
  out.b.resize(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    out.A.row(i) = bank.entries[static_cast<std::size_t>(i)].phi.transpose();
    out.b(i) = bank.entries[static_cast<std::size_t>(i)].psi_bar;
  }
  return out;
}

std::vector<std::size_t> select_cover_indices(const std::vector<DiscreteMeasure>& train,
                                              const DiscreteMeasure& theta, double delta,
                                              double p) {
  if (!(delta > 0.0)) throw Error(ErrorCode::kInvalidArgument, "cover radius must be > 0");
  for (const auto& mu : train) require_same_ground(mu, theta);
  std::vector<std::size_t> centers;
  std::vector<Eigen::VectorXd> center_means;
  for (std::size_t k = 0; k < train.size(); ++k) {
    const Eigen::VectorXd mean = train[k].ground()->points().transpose() * train[k].weights();
    bool covered = false;
    for (std::size_t c = 0; c < centers.size() && !covered; ++c) {
      if ((mean - center_means[c]).norm() > delta) continue;
      covered = wasserstein(train[centers[c]], train[k], p) <= delta;
    }
    if (!covered) {
      centers.push_back(k);
      center_means.push_back(mean);
    }
  }
  return centers;
}

double lipschitz_constant(const Eigen::VectorXd& f, const GroundSpace& ground) {
  const auto n = static_cast<Eigen::Index>(ground.size());
  double best = 0.0;
  for (Eigen::Index x = 0; x < n; ++x) {
    for (Eigen::Index y = x + 1; y < n; ++y) {
      best = std::max(best, std::abs(f(x) - f(y)) / ground.distance(static_cast<std::size_t>(x),
                                                                    static_cast<std::size_t>(y)));
    }
  }
  return best;
}

double bank_lipschitz(const PotentialBank& bank) {
  double best = 0.0;
  for (const auto& e : bank.entries) best = std::max(best, lipschitz_constant(e.phi, *bank.ground));
  return best;
}

double wpp_lipschitz_bound(const GroundSpace& ground, double p) {
  return p * std::pow(ground.diameter(), p - 1.0);
}

AccuracyCover cover_for_accuracy(const std::vector<DiscreteMeasure>& train,
                                 const DiscreteMeasure& theta, double eps, double p) {
  if (!(eps > 0.0)) throw Error(ErrorCode::kInvalidArgument, "accuracy must be > 0");
  const double lip_F = wpp_lipschitz_bound(*theta.ground(), p);
  auto attempt = [&](double assumed) {
    AccuracyCover c;
    c.lip_F = lip_F;
    c.delta = eps / (lip_F + assumed);
    c.indices = select_cover_indices(train, theta, c.delta, p);
    c.bank = build_bank(train, theta, c.indices, p);
    c.lip_G = bank_lipschitz(c.bank);
    return c;
  };
  // Every potential is c-concave, so lip_F bounds its Lipschitz constant and
  // the first round is always valid. Later rounds assume the measured
  // constant and are kept only if the bank they produce honours it.
  AccuracyCover best = attempt(lip_F);
  best.rounds = 1;
  double assumed = best.lip_G;
  for (int round = 2; round <= 8; ++round) {
    AccuracyCover next = attempt(assumed);
    if (next.lip_G > assumed) break;
    next.rounds = round;
    const bool settled = next.indices == best.indices;
    best = std::move(next);
    if (settled || best.lip_G >= assumed) break;
    assumed = best.lip_G;
  }
  return best;
}

std::vector<std::size_t> random_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

std::vector<std::size_t> random_indices(std::size_t n, std::size_t j, std::uint64_t seed) {
  if (j > n) throw Error(ErrorCode::kInvalidArgument, "cannot draw more indices than measures");
  auto perm = random_permutation(n, seed);
  perm.resize(j);
  return perm;
}

void write_bank(const PotentialBank& bank, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error(ErrorCode::kIo, "cannot write " + path);
  std::fprintf(f, "%zu %zu %.17g %s\n", bank.size(), bank.ground->size(), bank.p,
               bank.ref_hash.c_str());
  for (const auto& e : bank.entries) {
    std::fprintf(f, "%zu %.17g %.17g\n", e.index, e.wpp, e.psi_bar);
    for (Eigen::Index i = 0; i < e.phi.size(); ++i) std::fprintf(f, i ? " %.17g" : "%.17g", e.phi(i));
    std::fputc('\n', f);
  }
  if (std::fclose(f) != 0) throw Error(ErrorCode::kIo, "failed writing " + path);
}

PotentialBank read_bank(const std::string& path, GroundPtr ground) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open bank " + path);
  std::size_t count = 0, d = 0;
  PotentialBank bank;
  if (!(in >> count >> d >> bank.p >> bank.ref_hash)) {
    throw Error(ErrorCode::kParse, "bad bank header in " + path);
  }
  if (d != ground->size()) {
    throw Error(ErrorCode::kDimensionMismatch, "bank dimension does not match the ground space");
  }
  bank.ground = std::move(ground);
  bank.entries.resize(count);
  for (auto& e : bank.entries) {
    if (!(in >> e.index >> e.wpp >> e.psi_bar)) throw Error(ErrorCode::kParse, "truncated bank entry");
    e.phi.resize(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i) {
      if (!(in >> e.phi(static_cast<Eigen::Index>(i)))) {
        throw Error(ErrorCode::kParse, "truncated potential in bank file");
      }
    }
  }
  return bank;
}

double relative_error(double truth, double approx) {
  const double diff = std::abs(truth - approx);
  if (truth == 0.0) return diff;
  return diff / std::abs(truth);
}

}  // namespace wspace
