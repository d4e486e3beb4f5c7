#include "ntnqos/lp.h"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ntnqos::lp {
namespace {

using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Vec = Eigen::VectorXd;

enum VarStatus : int8_t {
  kBasic = 0,
  kAtLower = 1,
  kAtUpper = 2,
  kAtZero = 3,  // nonbasic free variable
};

// LU of the basis matrix plus a product-form eta file for the pivots since
// the last factorization.
class BasisFactor {
 public:
  bool Factorize(const SpMat& basis) {
    etas_.clear();
    lu_.compute(basis);
    return lu_.info() == Eigen::Success;
  }

  void Ftran(Vec& v) const {
    v = lu_.solve(v);
    for (const Eta& eta : etas_) {
      double pivot_value = v[eta.row] / eta.pivot;
      v[eta.row] = pivot_value;
      if (pivot_value == 0.0) continue;
      for (size_t k = 0; k < eta.index.size(); ++k) {
        v[eta.index[k]] -= eta.value[k] * pivot_value;
      }
    }
  }

  void Btran(Vec& v) const {
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      double s = v[it->row];
      for (size_t k = 0; k < it->index.size(); ++k) {
        s -= v[it->index[k]] * it->value[k];
      }
      v[it->row] = s / it->pivot;
    }
    v = lu_.transpose().solve(v);
  }

  void Push(int row, const Vec& alpha) {
    Eta eta;
    eta.row = row;
    eta.pivot = alpha[row];
    for (int i = 0; i < alpha.size(); ++i) {
      if (i != row && alpha[i] != 0.0) {
        eta.index.push_back(i);
        eta.value.push_back(alpha[i]);
      }
    }
    etas_.push_back(std::move(eta));
  }

  size_t num_etas() const { return etas_.size(); }

 private:
  struct Eta {
    int row = 0;
    double pivot = 1;
    std::vector<int> index;
    std::vector<double> value;
  };

  mutable Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu_;
  std::vector<Eta> etas_;
};

}  // namespace

const char* ToString(Status status) {
  switch (status) {
    case Status::kOptimal:
      return "optimal";
    case Status::kInfeasible:
      return "infeasible";
    case Status::kUnbounded:
      return "unbounded";
    case Status::kIterationLimit:
      return "iteration_limit";
    case Status::kTimeLimit:
      return "time_limit";
    case Status::kNumericalFailure:
      return "numerical_failure";
  }
  return "?";
}

int Problem::AddColumn(double c, double lower, double upper,
                       const std::vector<std::pair<int, double>>& entries) {
  if (col_start.empty()) col_start.push_back(0);
  cost.push_back(c);
  col_lower.push_back(lower);
  col_upper.push_back(upper);
  for (const auto& [row, v] : entries) {
    if (row < 0 || row >= num_rows) {
      throw std::out_of_range("LP column references unknown row " +
                              std::to_string(row));
    }
    if (v == 0.0) continue;
    row_index.push_back(row);
    value.push_back(v);
  }
  col_start.push_back(static_cast<int>(row_index.size()));
  return num_cols++;
}

int Problem::AddRow(double lower, double upper) {
  row_lower.push_back(lower);
  row_upper.push_back(upper);
  return num_rows++;
}

class Solver::Impl {
 public:
  Impl(Problem problem, const Options& o) : p_(std::move(problem)), opt_(o) {
    const Problem& p = p_;
    n_ = p.num_cols;
    m_ = p.num_rows;
    if (static_cast<int>(p.col_start.size()) != n_ + 1 && n_ > 0) {
      throw std::invalid_argument("LP problem has inconsistent column starts");
    }
    lo_.resize(n_ + m_);
    up_.resize(n_ + m_);
    cost_.assign(n_ + m_, 0.0);
    double max_cost = 0;
    for (int j = 0; j < n_; ++j) max_cost = std::max(max_cost, std::abs(p.cost[j]));
    cost_scale_ = max_cost > 0 ? 1.0 / max_cost : 1.0;
    for (int j = 0; j < n_; ++j) {
      lo_[j] = p.col_lower[j];
      up_[j] = p.col_upper[j];
      cost_[j] = p.cost[j] * cost_scale_;
    }
    for (int i = 0; i < m_; ++i) {
      lo_[n_ + i] = p.row_lower[i];
      up_[n_ + i] = p.row_upper[i];
    }
    for (int j = 0; j < n_ + m_; ++j) {
      if (lo_[j] > up_[j]) {
        throw std::invalid_argument("LP variable/row with lower > upper");
      }
    }
    x_.assign(n_ + m_, 0.0);
    SlackBasis();
  }

  void SetBounds(int j, double lower, double upper) {
    if (lower > upper) throw std::invalid_argument("column lower > upper");
    lo_[j] = lower;
    up_[j] = upper;
    // A nonbasic column keeps its value when the new bounds allow it.
    if (status_[j] != kBasic) status_[j] = NonbasicStatusFor(j, x_[j]);
  }
  double lower(int j) const { return lo_[j]; }
  const Problem& problem() const { return p_; }
  double upper(int j) const { return up_[j]; }

  Basis GetBasis() const { return Basis{status_}; }

  void SetBasis(const Basis& basis) {
    if (static_cast<int>(basis.status.size()) != n_ + m_) {
      throw std::invalid_argument("basis size does not match the LP");
    }
    int basic = 0;
    for (int8_t s : basis.status) basic += (s == kBasic);
    if (basic != m_) {
      throw std::invalid_argument("basis has the wrong number of basics");
    }
    status_ = basis.status;
    RebuildHead();
    factor_valid_ = false;
  }

  Result Run(const Options& opt) {
    opt_ = opt;
    Result result;
    int64_t iterations = 0;
    const int64_t limit = opt_.max_iterations > 0
                              ? opt_.max_iterations
                              : 50 * static_cast<int64_t>(n_ + m_) + 10000;
    const double ptol = opt_.primal_tolerance;
    const double dtol = opt_.dual_tolerance;

    SnapNonbasic();
    if (!factor_valid_ && !Refactor()) {
      SlackBasis();
      SnapNonbasic();
      if (!Refactor()) return Finish(Status::kNumericalFailure, iterations);
    }
    ComputePrimal();

    Vec y(m_), alpha(m_);
    int degenerate_run = 0;
    bool bland = false;
    bool verified = false;
    int recoveries = 0;

    while (true) {
      if (iterations >= limit) return Finish(Status::kIterationLimit, iterations);
      if (opt_.deadline && (iterations & 63) == 0 &&
          std::chrono::steady_clock::now() > *opt_.deadline) {
        return Finish(Status::kTimeLimit, iterations);
      }
      if (static_cast<int>(factor_.num_etas()) >= opt_.refactor_interval) {
        if (!Recover(recoveries)) {
          return Finish(Status::kNumericalFailure, iterations);
        }
      }

      bool phase1 = false;
      for (int r = 0; r < m_; ++r) {
        int b = head_[r];
        if (x_[b] < lo_[b] - ptol || x_[b] > up_[b] + ptol) {
          phase1 = true;
          break;
        }
      }
      for (int r = 0; r < m_; ++r) {
        int b = head_[r];
        if (phase1) {
          y[r] = x_[b] < lo_[b] - ptol ? -1.0 : (x_[b] > up_[b] + ptol ? 1.0 : 0.0);
        } else {
          y[r] = cost_[b];
        }
      }
      factor_.Btran(y);

      // Pricing.
      int entering = -1;
      int direction = 0;
      double best = 0;
      for (int j = 0; j < n_ + m_; ++j) {
        int8_t s = status_[j];
        if (s == kBasic || lo_[j] == up_[j]) continue;
        double d = phase1 ? 0.0 : cost_[j];
        if (j < n_) {
          for (int k = p_.col_start[j]; k < p_.col_start[j + 1]; ++k) {
            d -= y[p_.row_index[k]] * p_.value[k];
          }
        } else {
          d += y[j - n_];
        }
        int dir = 0;
        if (s == kAtLower) {
          if (d < -dtol) dir = 1;
        } else if (s == kAtUpper) {
          if (d > dtol) dir = -1;
        } else if (std::abs(d) > dtol) {
          dir = d < 0 ? 1 : -1;
        }
        if (dir == 0) continue;
        if (bland) {
          entering = j;
          direction = dir;
          break;
        }
        if (std::abs(d) > best) {
          best = std::abs(d);
          entering = j;
          direction = dir;
        }
      }

      if (entering < 0) {
        if (!verified) {
          // Confirm on a fresh factorization before declaring the end.
          if (!Recover(recoveries)) {
            return Finish(Status::kNumericalFailure, iterations);
          }
          verified = true;
          continue;
        }
        return Finish(phase1 ? Status::kInfeasible : Status::kOptimal,
                      iterations);
      }

      LoadColumn(entering, alpha);
      factor_.Ftran(alpha);

      // Ratio test.
      const int q = entering;
      const double flip =
          (std::isfinite(lo_[q]) && std::isfinite(up_[q])) ? up_[q] - lo_[q] : kInf;
      int leave = -1;
      double step = 0;
      double leave_bound = 0;
      if (bland) {
        double best_t = kInf;
        for (int r = 0; r < m_; ++r) {
          double bound, dist, rate;
          if (!Blocking(r, direction, alpha[r], phase1, &bound, &dist, &rate)) {
            continue;
          }
          double t = std::max(0.0, dist) / rate;
          if (leave < 0 || t < best_t - 1e-12 ||
              (t <= best_t + 1e-12 && head_[r] < head_[leave])) {
            best_t = t;
            leave = r;
            leave_bound = bound;
          }
        }
        step = best_t;
        if (flip <= step) leave = -1, step = flip;
      } else {
        double tmax = kInf;
        for (int r = 0; r < m_; ++r) {
          double bound, dist, rate;
          if (!Blocking(r, direction, alpha[r], phase1, &bound, &dist, &rate)) {
            continue;
          }
          tmax = std::min(tmax, (std::max(0.0, dist) + ptol) / rate);
        }
        if (flip <= tmax) {
          step = flip;
        } else if (std::isfinite(tmax)) {
          double best_pivot = 0;
          for (int r = 0; r < m_; ++r) {
            double bound, dist, rate;
            if (!Blocking(r, direction, alpha[r], phase1, &bound, &dist, &rate)) {
              continue;
            }
            double t = std::max(0.0, dist) / rate;
            if (t <= tmax && std::abs(alpha[r]) > best_pivot) {
              best_pivot = std::abs(alpha[r]);
              leave = r;
              leave_bound = bound;
              step = t;
            }
          }
        } else {
          step = kInf;
        }
      }

      if (!std::isfinite(step)) {
        if (phase1) {
          // The phase-1 objective is bounded below; an unbounded ray here is
          // a numerical artefact.
          if (!Recover(recoveries)) {
            return Finish(Status::kNumericalFailure, iterations);
          }
          continue;
        }
        return Finish(Status::kUnbounded, iterations);
      }

      ++iterations;
      verified = false;
      x_[q] += direction * step;
      for (int r = 0; r < m_; ++r) {
        if (alpha[r] != 0.0) x_[head_[r]] -= direction * step * alpha[r];
      }
      if (leave < 0) {
        status_[q] = direction > 0 ? kAtUpper : kAtLower;
        x_[q] = direction > 0 ? up_[q] : lo_[q];
      } else {
        int out = head_[leave];
        x_[out] = leave_bound;
        status_[out] = (leave_bound == lo_[out]) ? kAtLower : kAtUpper;
        status_[q] = kBasic;
        pos_[out] = -1;
        pos_[q] = leave;
        head_[leave] = q;
        factor_.Push(leave, alpha);
      }

      if (step < 1e-12) {
        if (++degenerate_run > opt_.degenerate_limit) bland = true;
      } else {
        degenerate_run = 0;
        bland = false;
      }
    }
  }

 private:
  // Whether basic position r limits the step, and if so toward which bound.
  bool Blocking(int r, int direction, double a, bool phase1, double* bound,
                double* dist, double* rate) const {
    if (std::abs(a) <= opt_.pivot_tolerance) return false;
    const double ptol = opt_.primal_tolerance;
    int b = head_[r];
    double delta = -direction * a;
    double xb = x_[b];
    if (delta < 0) {
      if (phase1 && xb > up_[b] + ptol) {
        *bound = up_[b];
        *dist = xb - up_[b];
      } else if (phase1 && xb < lo_[b] - ptol) {
        return false;
      } else if (std::isfinite(lo_[b])) {
        *bound = lo_[b];
        *dist = xb - lo_[b];
      } else {
        return false;
      }
    } else {
      if (phase1 && xb < lo_[b] - ptol) {
        *bound = lo_[b];
        *dist = lo_[b] - xb;
      } else if (phase1 && xb > up_[b] + ptol) {
        return false;
      } else if (std::isfinite(up_[b])) {
        *bound = up_[b];
        *dist = up_[b] - xb;
      } else {
        return false;
      }
    }
    *rate = std::abs(delta);
    return true;
  }

  void LoadColumn(int j, Vec& v) const {
    v.setZero();
    if (j < n_) {
      for (int k = p_.col_start[j]; k < p_.col_start[j + 1]; ++k) {
        v[p_.row_index[k]] = p_.value[k];
      }
    } else {
      v[j - n_] = -1.0;
    }
  }

  void SlackBasis() {
    status_.assign(n_ + m_, kAtLower);
    for (int j = 0; j < n_; ++j) status_[j] = NonbasicStatusFor(j, x_[j]);
    for (int i = 0; i < m_; ++i) status_[n_ + i] = kBasic;
    RebuildHead();
    factor_valid_ = false;
  }

  int8_t NonbasicStatusFor(int j, double near) const {
    bool has_lo = std::isfinite(lo_[j]);
    bool has_up = std::isfinite(up_[j]);
    if (has_lo && has_up) {
      return std::abs(near - lo_[j]) <= std::abs(up_[j] - near) ? kAtLower
                                                                 : kAtUpper;
    }
    if (has_lo) return kAtLower;
    if (has_up) return kAtUpper;
    return kAtZero;
  }

  void RebuildHead() {
    head_.clear();
    pos_.assign(n_ + m_, -1);
    for (int j = 0; j < n_ + m_; ++j) {
      if (status_[j] == kBasic) {
        pos_[j] = static_cast<int>(head_.size());
        head_.push_back(j);
      }
    }
  }

  // Puts every nonbasic variable on a bound that exists.
  void SnapNonbasic() {
    for (int j = 0; j < n_ + m_; ++j) {
      int8_t& s = status_[j];
      if (s == kBasic) continue;
      if (s == kAtLower && !std::isfinite(lo_[j])) s = NonbasicStatusFor(j, 0);
      if (s == kAtUpper && !std::isfinite(up_[j])) s = NonbasicStatusFor(j, 0);
      if (s == kAtZero && (std::isfinite(lo_[j]) || std::isfinite(up_[j]))) {
        s = NonbasicStatusFor(j, 0);
      }
      x_[j] = s == kAtLower ? lo_[j] : (s == kAtUpper ? up_[j] : 0.0);
    }
  }

  bool Refactor() {
    std::vector<Eigen::Triplet<double, int>> triplets;
    triplets.reserve(m_ * 3);
    for (int r = 0; r < m_; ++r) {
      int j = head_[r];
      if (j < n_) {
        for (int k = p_.col_start[j]; k < p_.col_start[j + 1]; ++k) {
          triplets.emplace_back(p_.row_index[k], r, p_.value[k]);
        }
      } else {
        triplets.emplace_back(j - n_, r, -1.0);
      }
    }
    SpMat basis(m_, m_);
    basis.setFromTriplets(triplets.begin(), triplets.end());
    basis.makeCompressed();
    factor_valid_ = m_ == 0 || factor_.Factorize(basis);
    return factor_valid_;
  }

  // Refactorizes and recomputes basics; falls back to the slack basis when
  // the current basis has become singular.
  bool Recover(int& recoveries) {
    if (Refactor()) {
      ComputePrimal();
      return true;
    }
    if (++recoveries > 3) return false;
    for (int j = 0; j < n_; ++j) {
      if (status_[j] == kBasic) status_[j] = NonbasicStatusFor(j, x_[j]);
    }
    SlackBasis();
    SnapNonbasic();
    if (!Refactor()) return false;
    ComputePrimal();
    return true;
  }

  void ComputePrimal() {
    if (m_ == 0) return;
    Vec rhs = Vec::Zero(m_);
    for (int j = 0; j < n_ + m_; ++j) {
      if (status_[j] == kBasic) continue;
      double v = x_[j];
      if (v == 0.0) continue;
      if (j < n_) {
        for (int k = p_.col_start[j]; k < p_.col_start[j + 1]; ++k) {
          rhs[p_.row_index[k]] -= p_.value[k] * v;
        }
      } else {
        rhs[j - n_] += v;
      }
    }
    factor_.Ftran(rhs);
    for (int r = 0; r < m_; ++r) x_[head_[r]] = rhs[r];
  }

  Result Finish(Status status, int64_t iterations) const {
    Result result;
    result.status = status;
    result.iterations = iterations;
    result.x.assign(x_.begin(), x_.begin() + n_);
    result.row_activity.assign(x_.begin() + n_, x_.end());
    double obj = 0;
    for (int j = 0; j < n_; ++j) obj += p_.cost[j] * x_[j];
    result.objective = obj;
    return result;
  }

  Problem p_;
  Options opt_;
  int n_ = 0;
  int m_ = 0;
  double cost_scale_ = 1;
  std::vector<double> lo_, up_, cost_, x_;
  std::vector<int8_t> status_;
  std::vector<int> head_, pos_;
  BasisFactor factor_;
  bool factor_valid_ = false;
};

Solver::Solver(Problem problem, Options options)
    : options_(options),
      impl_(std::make_unique<Impl>(std::move(problem), options_)) {}

Solver::~Solver() = default;
Solver::Solver(Solver&&) noexcept = default;
Solver& Solver::operator=(Solver&&) noexcept = default;

const Problem& Solver::problem() const { return impl_->problem(); }

void Solver::SetColumnBounds(int col, double lower, double upper) {
  if (col < 0 || col >= impl_->problem().num_cols) {
    throw std::out_of_range("LP column index out of range");
  }
  impl_->SetBounds(col, lower, upper);
}

double Solver::col_lower(int col) const { return impl_->lower(col); }
double Solver::col_upper(int col) const { return impl_->upper(col); }

Result Solver::Solve() { return impl_->Run(options_); }

Basis Solver::GetBasis() const { return impl_->GetBasis(); }
void Solver::SetBasis(const Basis& basis) { impl_->SetBasis(basis); }

Result Solve(const Problem& problem, const Options& options) {
  Solver solver(problem, options);
  return solver.Solve();
}

}  // namespace ntnqos::lp
