#ifndef NTNQOS_LP_H_
#define NTNQOS_LP_H_

#include <chrono>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

namespace ntnqos::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// minimize cost'x  s.t.  row_lower <= A x <= row_upper,
//                        col_lower <= x <= col_upper.
// A is stored column-wise (CSC).
struct Problem {
  int num_rows = 0;
  int num_cols = 0;
  std::vector<double> cost;
  std::vector<double> col_lower;
  std::vector<double> col_upper;
  std::vector<double> row_lower;
  std::vector<double> row_upper;
  std::vector<int> col_start;  // size num_cols + 1
  std::vector<int> row_index;
  std::vector<double> value;

  // Appends a column; entries are (row, coefficient).
  int AddColumn(double cost, double lower, double upper,
                const std::vector<std::pair<int, double>>& entries);
  int AddRow(double lower, double upper);
};

enum class Status {
  kOptimal,
  kInfeasible,
  kUnbounded,
  kIterationLimit,
  kTimeLimit,
  kNumericalFailure,
};

const char* ToString(Status status);

struct Options {
  double primal_tolerance = 1e-7;
  double dual_tolerance = 1e-7;
  double pivot_tolerance = 1e-9;
  int refactor_interval = 100;
  // Consecutive degenerate pivots before switching to Bland's rule.
  int degenerate_limit = 50;
  // 0 picks a limit proportional to the problem size.
  int64_t max_iterations = 0;
  std::optional<std::chrono::steady_clock::time_point> deadline;
};

struct Result {
  Status status = Status::kNumericalFailure;
  double objective = 0;
  std::vector<double> x;
  std::vector<double> row_activity;
  int64_t iterations = 0;
};

// Basis snapshot: one status per structural column then per row.
struct Basis {
  std::vector<int8_t> status;
};

// Bounded primal revised simplex. Phase 1 minimizes the sum of
// infeasibilities, phase 2 the objective; Dantzig pricing with a Harris
// ratio test, falling back to Bland's rule after a run of degenerate pivots.
// The basis survives between Solve() calls, so re-solving after bound
// changes starts from the previous optimum.
class Solver {
 public:
  explicit Solver(Problem problem, Options options = {});
  ~Solver();
  Solver(Solver&&) noexcept;
  Solver& operator=(Solver&&) noexcept;

  const Problem& problem() const;
  Options& options() { return options_; }

  void SetColumnBounds(int col, double lower, double upper);
  double col_lower(int col) const;
  double col_upper(int col) const;

  Result Solve();

  Basis GetBasis() const;
  // Throws std::invalid_argument if the snapshot does not fit the problem.
  void SetBasis(const Basis& basis);

 private:
  class Impl;
  Options options_;
  std::unique_ptr<Impl> impl_;
};

// One-shot convenience wrapper.
Result Solve(const Problem& problem, const Options& options = {});

}  // namespace ntnqos::lp

#endif  // NTNQOS_LP_H_
