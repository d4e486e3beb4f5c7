#include <algorithm>
#include <chrono>
#include <cmath>
#include <fmt/format.h>
#include <memory>

#include "ntnqos/milp.h"

namespace ntnqos {

const char* ToString(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal: return "Optimal";
    case SolveStatus::kInfeasible: return "Infeasible";
    case SolveStatus::kTimeLimit: return "TimeLimit";
  }
  return "?";
}

namespace {

using Clock = std::chrono::steady_clock;

struct BoundChange {
  int col;
  double lower;
  double upper;
};

struct Node {
  int64_t id = 0;
  double bound = -lp::kInf;
  std::vector<BoundChange> changes;  // relative to the root bounds
  std::shared_ptr<const lp::Basis> basis;
};

class Search {
 public:
  Search(const MilpProblem& problem, const SolveOptions& options,
         const IncumbentRepair& repair, const IncumbentHeuristic& heuristic)
      : problem_(problem),
        options_(options),
        repair_(repair),
        heuristic_(heuristic),
        solver_(problem.ToLp()),
        start_(Clock::now()) {
    for (size_t j = 0; j < problem.variables().size(); ++j) {
      root_lower_.push_back(problem.variables()[j].lower);
      root_upper_.push_back(problem.variables()[j].upper);
      if (problem.variables()[j].integer) integer_cols_.push_back(static_cast<int>(j));
    }
    solver_.options().primal_tolerance = options.feasibility_tolerance;
    if (std::isfinite(options.time_limit_s)) {
      deadline_ = start_ + std::chrono::duration_cast<Clock::duration>(
                               std::chrono::duration<double>(options.time_limit_s));
      solver_.options().deadline = deadline_;
    }
  }

  MipResult Run() {
    open_.push_back(Node{next_id_++, -lp::kInf, {}, nullptr});
    bool timed_out = false;
    while (!open_.empty()) {
      if (deadline_ && Clock::now() >= *deadline_) {
        timed_out = true;
        break;
      }
      Node node = PopNext();
      if (result_.has_incumbent && node.bound >= Cutoff()) {
        pruned_bound_ = std::min(pruned_bound_, node.bound);
        // Best-first order: every remaining node is at least as bad.
        open_.clear();
        break;
      }
      if (!Process(node)) {
        timed_out = true;
        break;
      }
    }
    result_.solve_time_s =
        std::chrono::duration<double>(Clock::now() - start_).count();
    if (timed_out) {
      result_.status = SolveStatus::kTimeLimit;
      double bound = result_.has_incumbent ? result_.objective : lp::kInf;
      for (const Node& n : open_) bound = std::min(bound, n.bound);
      if (interrupted_bound_) bound = std::min(bound, *interrupted_bound_);
      result_.best_bound = bound;
    } else if (result_.has_incumbent) {
      result_.status = SolveStatus::kOptimal;
      result_.best_bound = std::min(result_.objective, pruned_bound_);
    } else {
      result_.status = SolveStatus::kInfeasible;
    }
    return result_;
  }

 private:
  bool diving() const { return !result_.has_incumbent; }

  double Cutoff() const {
    double tol = std::max(options_.abs_gap,
                          options_.rel_gap * std::abs(result_.objective));
    return result_.objective - tol;
  }

  // Depth first (newest node) until an incumbent exists, then best bound.
  // Bounds within kBoundTie count as equal and go to the newest node, so
  // the search keeps diving while the bound does not move.
  Node PopNext() {
    constexpr double kBoundTie = 1e-12;
    size_t pick = open_.size() - 1;
    if (!diving()) {
      for (size_t k = open_.size() - 1; k-- > 0;) {
        if (open_[k].bound < open_[pick].bound - kBoundTie) pick = k;
      }
    }
    Node node = std::move(open_[pick]);
    open_.erase(open_.begin() + static_cast<std::ptrdiff_t>(pick));
    return node;
  }

  void ApplyBounds(const std::vector<BoundChange>& changes) {
    for (int col : touched_) {
      solver_.SetColumnBounds(col, root_lower_[col], root_upper_[col]);
    }
    touched_.clear();
    for (const BoundChange& c : changes) {
      solver_.SetColumnBounds(c.col, c.lower, c.upper);
      touched_.push_back(c.col);
    }
  }

  lp::Result SolveLp() {
    lp::Result r = solver_.Solve();
    result_.lp_iterations += r.iterations;
    switch (r.status) {
      case lp::Status::kOptimal:
      case lp::Status::kInfeasible:
      case lp::Status::kTimeLimit:
        return r;
      case lp::Status::kUnbounded:
        throw SolverError("LP relaxation is unbounded");
      case lp::Status::kIterationLimit:
        throw SolverError("LP iteration limit reached (cycling guard)");
      case lp::Status::kNumericalFailure:
        throw SolverError("numerical failure in the LP subsolver");
    }
    throw SolverError("unexpected LP status");
  }

  // Returns false when the time limit interrupts the node.
  bool Process(const Node& node) {
    ++result_.nodes;
    ApplyBounds(node.changes);
    if (node.basis) solver_.SetBasis(*node.basis);
    lp::Result r = SolveLp();
    if (r.status == lp::Status::kTimeLimit) {
      interrupted_bound_ = node.bound;
      return false;
    }
    if (r.status == lp::Status::kInfeasible) return true;
    const double bound = std::max(r.objective, node.bound);
    if (result_.has_incumbent && bound >= Cutoff()) {
      pruned_bound_ = std::min(pruned_bound_, bound);
      return true;
    }

    int branch_col = -1;
    double best_dist = 0.5;
    for (int col : integer_cols_) {
      double v = r.x[col];
      double frac = v - std::floor(v);
      if (std::min(frac, 1 - frac) <= options_.integrality_tolerance) continue;
      double dist = std::abs(frac - 0.5);
      if (branch_col < 0 || dist < best_dist) {
        branch_col = col;
        best_dist = dist;
      }
    }

    if (branch_col < 0) return Incumbent(r, node);

    auto basis = std::make_shared<const lp::Basis>(solver_.GetBasis());
    if (heuristic_ && (result_.nodes == 1 || result_.nodes % kHeuristicPeriod == 0)) {
      if (!RunHeuristic(r.x, node)) return false;
      if (result_.has_incumbent && bound >= Cutoff()) {
        pruned_bound_ = std::min(pruned_bound_, bound);
        return true;
      }
    }
    double v = r.x[branch_col];
    Node down{0, bound, node.changes, basis};
    down.changes.push_back({branch_col, NodeLower(node, branch_col), std::floor(v)});
    Node up{0, bound, node.changes, basis};
    up.changes.push_back({branch_col, std::ceil(v), NodeUpper(node, branch_col)});
    // The child nearer the LP value gets the larger id, so a dive takes it
    // first.
    bool up_first = v - std::floor(v) >= 0.5;
    Node& first = up_first ? down : up;
    Node& second = up_first ? up : down;
    first.id = next_id_++;
    second.id = next_id_++;
    open_.push_back(std::move(first));
    open_.push_back(std::move(second));
    return true;
  }

  double NodeLower(const Node& node, int col) const {
    double lo = root_lower_[col];
    for (const BoundChange& c : node.changes) {
      if (c.col == col) lo = c.lower;
    }
    return lo;
  }

  double NodeUpper(const Node& node, int col) const {
    double up = root_upper_[col];
    for (const BoundChange& c : node.changes) {
      if (c.col == col) up = c.upper;
    }
    return up;
  }

  bool Incumbent(const lp::Result& r, const Node& node) {
    std::vector<double> values = r.x;
    if (repair_) {
      if (std::optional<std::vector<double>> fixed = repair_(r.x)) {
        std::vector<BoundChange> changes;
        for (int col : integer_cols_) {
          double v = std::round((*fixed)[col]);
          changes.push_back({col, v, v});
        }
        ApplyBounds(changes);
        lp::Result polished = SolveLp();
        if (polished.status == lp::Status::kTimeLimit) {
          // The unrepaired point may carry detached x-cycles; drop it.
          interrupted_bound_ = node.bound;
          return false;
        }
        if (polished.status == lp::Status::kOptimal) values = polished.x;
      }
    }
    Offer(values);
    return true;
  }

  // Polishes each heuristic candidate with its integer columns fixed, then
  // restores the node's bounds. Returns false on the time limit.
  bool RunHeuristic(const std::vector<double>& x, const Node& node) {
    for (const std::vector<double>& candidate : heuristic_(x)) {
      std::vector<BoundChange> changes;
      for (int col : integer_cols_) {
        double v = std::round(candidate[col]);
        changes.push_back({col, v, v});
      }
      ApplyBounds(changes);
      lp::Result polished = SolveLp();
      if (polished.status == lp::Status::kTimeLimit) {
        interrupted_bound_ = node.bound;
        return false;
      }
      if (polished.status == lp::Status::kOptimal) Offer(polished.x);
    }
    ApplyBounds(node.changes);
    return true;
  }

  void Offer(const std::vector<double>& values) {
    double obj = problem_.Objective(values);
    if (!result_.has_incumbent || obj < result_.objective) {
      result_.has_incumbent = true;
      result_.objective = obj;
      result_.values = values;
    }
  }

  const MilpProblem& problem_;
  const SolveOptions& options_;
  static constexpr int64_t kHeuristicPeriod = 100;

  const IncumbentRepair& repair_;
  const IncumbentHeuristic& heuristic_;
  lp::Solver solver_;
  Clock::time_point start_;
  std::optional<Clock::time_point> deadline_;
  std::vector<double> root_lower_, root_upper_;
  std::vector<int> integer_cols_;
  std::vector<int> touched_;
  std::vector<Node> open_;
  int64_t next_id_ = 0;
  double pruned_bound_ = lp::kInf;
  std::optional<double> interrupted_bound_;
  MipResult result_;
};

}  // namespace

MipResult SolveMilp(const MilpProblem& problem, const SolveOptions& options,
                    const IncumbentRepair& repair,
                    const IncumbentHeuristic& heuristic) {
  if (problem.empty()) throw ModelError("cannot solve an empty model");
  if (!(options.time_limit_s > 0)) {
    throw std::invalid_argument("time limit must be positive");
  }
  if (!(options.abs_gap >= 0) || !(options.rel_gap >= 0)) {
    throw std::invalid_argument("gaps must be non-negative");
  }
  return Search(problem, options, repair, heuristic).Run();
}

}  // namespace ntnqos
