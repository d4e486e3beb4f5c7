#ifndef NTNQOS_MILP_H_
#define NTNQOS_MILP_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ntnqos/constellation.h"
#include "ntnqos/lp.h"
#include "ntnqos/slicing.h"

namespace ntnqos {

// The model works in Mbps and milliseconds so that capacities, demands and
// latencies all sit within a few orders of magnitude of one.
inline constexpr double kModelFlowUnitBps = 1e6;
inline constexpr double kModelTimeUnitS = 1e-3;

struct OptimizationWeights {
  double w_flow = 0.5;
  double w_latency = 0.5;
  double flow_norm_bps = 1;    // F
  double latency_norm_s = 1;   // L

  // w_f, w_l >= 0, w_f + w_l = 1 (within 1e-9), F > 0, L > 0.
  void Validate() const;
};

struct MilpVariable {
  std::string name;
  double lower = 0;
  double upper = lp::kInf;
  double objective = 0;
  bool integer = false;
};

struct MilpRow {
  std::string name;
  double lower = -lp::kInf;
  double upper = lp::kInf;
  std::vector<std::pair<int, double>> terms;
};

// Minimization MILP with named rows and columns.
class MilpProblem {
 public:
  int AddVariable(MilpVariable v);
  int AddRow(MilpRow row);

  const std::vector<MilpVariable>& variables() const { return variables_; }
  const std::vector<MilpRow>& rows() const { return rows_; }
  int num_integer() const;
  bool empty() const { return variables_.empty(); }

  lp::Problem ToLp() const;
  double Objective(std::span<const double> values) const;

 private:
  std::vector<MilpVariable> variables_;
  std::vector<MilpRow> rows_;
};

// Column indices of one slice's variables. Links follow ascending link id:
// every ISL, then the feeders into the slice destination.
struct SliceVariables {
  int b = -1;
  int flow_gap = -1;
  int latency_gap = -1;
  std::vector<int> links;
  std::vector<int> x;
  std::vector<int> f;
};

class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The joint slice-level flow and routing MILP. Holds a pointer to the
// topology, which must outlive the model.
class MilpModel {
 public:
  const MilpProblem& problem() const { return problem_; }
  const std::vector<Slice>& slices() const { return slices_; }
  const Topology& topology() const { return *topology_; }
  const OptimizationWeights& weights() const { return weights_; }
  const std::vector<SliceVariables>& slice_vars() const { return vars_; }

  // Column of x_{i,e}, or -1 when the model fixes it to zero.
  int XVar(int slice, int link) const;
  int FVar(int slice, int link) const;

  double flow_gap_coefficient() const;     // per Mbps
  double latency_gap_coefficient() const;  // per ms

 private:
  friend MilpModel BuildModel(std::span<const Slice>, const Topology&,
                              const OptimizationWeights&);
  MilpProblem problem_;
  std::vector<Slice> slices_;
  const Topology* topology_ = nullptr;
  OptimizationWeights weights_;
  std::vector<SliceVariables> vars_;
};

// Throws ModelError when a slice's edge satellite or destination is not in
// the topology, or when there are no slices.
MilpModel BuildModel(std::span<const Slice> slices, const Topology& topology,
                     const OptimizationWeights& weights);

// ---------------------------------------------------------------------------
// Branch and bound.

struct SolveOptions {
  double time_limit_s = 600;
  double abs_gap = 1e-6;
  double rel_gap = 0;
  double integrality_tolerance = 1e-6;
  double feasibility_tolerance = 1e-7;
};

enum class SolveStatus { kOptimal, kInfeasible, kTimeLimit };
const char* ToString(SolveStatus status);

// Raised when the LP subsolver fails numerically or exhausts its cycling
// guard; never converted into a solution.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MipResult {
  SolveStatus status = SolveStatus::kInfeasible;
  bool has_incumbent = false;
  std::vector<double> values;
  double objective = lp::kInf;
  double best_bound = -lp::kInf;
  int64_t nodes = 0;
  int64_t lp_iterations = 0;
  double solve_time_s = 0;
};

// Maps an integral LP point to the integer assignment that should be
// polished into the incumbent (values for every column; only integer
// columns are read). Returning nullopt keeps the LP point as is.
using IncumbentRepair = std::function<std::optional<std::vector<double>>(
    std::span<const double> values)>;

// Maps a fractional LP point to integer assignments worth polishing into
// incumbents (only integer columns are read). Called at the root and
// periodically during the search.
using IncumbentHeuristic = std::function<std::vector<std::vector<double>>(
    std::span<const double> values)>;

// Best-bound branch and bound over the LP relaxation. Until the first
// incumbent it dives depth first. Branches on the most fractional integer
// column, ties to the lowest index. Deterministic for identical inputs.
MipResult SolveMilp(const MilpProblem& problem, const SolveOptions& options,
                    const IncumbentRepair& repair = {},
                    const IncumbentHeuristic& heuristic = {});

// ---------------------------------------------------------------------------
// Slice-level solution.

struct SliceRoute {
  bool has_route = false;
  std::vector<int> route;  // link ids from the edge satellite to d_i
  std::vector<std::pair<int, double>> link_flows_bps;  // links with x = 1
  double allocated_bps = 0;  // b_i
  double latency_s = 0;      // l_i
  double flow_gap_bps = 0;   // s_f,i as solved
  double latency_gap_s = 0;  // s_l,i as solved
};

struct Solution {
  SolveStatus status = SolveStatus::kInfeasible;
  bool has_incumbent = false;
  std::vector<SliceRoute> slices;
  double objective = 0;
  double best_bound = 0;
  double solve_time_s = 0;
  int64_t nodes = 0;
  int64_t lp_iterations = 0;
  std::vector<double> values;  // raw model values
};

// Solves the model. Integral points are cleaned of x-cycles that do not lie
// on the slice's route before polishing, so every returned route is a
// simple path.
Solution Solve(const MilpModel& model, const SolveOptions& options = {});

// Re-checks a solution against the constraint families using only the
// slices and topology. Returns one message per violation. Flows are compared
// in Mbps and latencies in ms, with absolute tolerance `tolerance`.
std::vector<std::string> VerifySolution(std::span<const Slice> slices,
                                        const Topology& topology,
                                        const Solution& solution,
                                        double tolerance = 1e-6);

// Fixed-format MPS (names may exceed eight characters). Throws ModelError
// for an empty model and std::runtime_error on I/O failure.
void ExportMps(const MilpProblem& problem, const std::filesystem::path& path,
               const std::string& name = "NTNSLICE");
std::string ToMps(const MilpProblem& problem,
                  const std::string& name = "NTNSLICE");

}  // namespace ntnqos

#endif  // NTNQOS_MILP_H_
