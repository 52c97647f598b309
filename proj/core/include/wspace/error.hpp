#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wspace {

enum class ErrorCode {
  kInvalidArgument,
  kDimensionMismatch,
  kAllZero,
  kNegativeEntry,
  kNotNormalized,
  kGroundMismatch,
  kSolverFailure,
  kNotConverged,
  kNoSpatialGradient,
  kEmptyBank,
  kEmptyCover,
  kRankDeficient,
  kSingular,
  kTooManyRows,
  kDiverged,
  kDegenerateAdversary,
  kParse,
  kIo,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so that
// callers (and tests) can dispatch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Raised by sinkhorn() when the marginal violation is still above tolerance
// after max_iter sweeps.
class NotConverged : public Error {
 public:
  NotConverged(double violation, int iterations)
      : Error(ErrorCode::kNotConverged,
              "sinkhorn did not converge: marginal violation " +
                  std::to_string(violation) + " after " +
                  std::to_string(iterations) + " iterations"),
        violation_(violation),
        iterations_(iterations) {}

  double violation() const noexcept { return violation_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double violation_;
  int iterations_;
};

class RankDeficient : public Error {
 public:
  RankDeficient(int rank, int expected)
      : Error(ErrorCode::kRankDeficient,
              "basis is rank deficient: numerical rank " +
                  std::to_string(rank) + " < " + std::to_string(expected)),
        rank_(rank) {}

  int rank() const noexcept { return rank_; }

 private:
  int rank_;
};

}  // namespace wspace
