// Test-only oracle: textbook two-phase dense-tableau simplex with Bland's
// rule. Deliberately shares nothing with the library's revised simplex.

#ifndef NTNQOS_TESTS_ORACLE_DENSE_SIMPLEX_H_
#define NTNQOS_TESTS_ORACLE_DENSE_SIMPLEX_H_

#include <cmath>
#include <limits>
#include <vector>

namespace ntnqos::oracle {

struct DenseLp {
  // minimize c'x s.t. row_lo <= A x <= row_up, col_lo <= x <= col_up.
  std::vector<double> c;
  std::vector<std::vector<double>> a;  // row-major
  std::vector<double> row_lo, row_up;
  std::vector<double> col_lo, col_up;
};

enum class DenseStatus { kOptimal, kInfeasible, kUnbounded };

struct DenseResult {
  DenseStatus status = DenseStatus::kInfeasible;
  double objective = 0;
  std::vector<double> x;
};

inline DenseResult SolveDense(const DenseLp& lp) {
  constexpr double kEps = 1e-10;
  const double inf = std::numeric_limits<double>::infinity();
  const int n = static_cast<int>(lp.c.size());

  // Substitute x_j = shift_j + sign_j * y_j (y_j >= 0); free columns are
  // split into two nonnegative parts.
  struct Part {
    int col;
    double sign;
  };
  std::vector<Part> parts;
  std::vector<double> shift(n, 0.0);
  for (int j = 0; j < n; ++j) {
    if (std::isfinite(lp.col_lo[j])) {
      shift[j] = lp.col_lo[j];
      parts.push_back({j, 1.0});
    } else if (std::isfinite(lp.col_up[j])) {
      shift[j] = lp.col_up[j];
      parts.push_back({j, -1.0});
    } else {
      parts.push_back({j, 1.0});
      parts.push_back({j, -1.0});
    }
  }
  const int ny = static_cast<int>(parts.size());

  // Constraint rows over y: coeffs, sense (-1 <=, 0 =, +1 >=), rhs.
  struct Row {
    std::vector<double> coef;
    int sense;
    double rhs;
  };
  std::vector<Row> rows;
  auto add_row = [&](const std::vector<double>& ax, double lo, double up) {
    std::vector<double> coef(ny, 0.0);
    double offset = 0;
    for (int k = 0; k < ny; ++k) coef[k] = ax[parts[k].col] * parts[k].sign;
    for (int j = 0; j < n; ++j) offset += ax[j] * shift[j];
    if (std::isfinite(lo) && std::isfinite(up) && lo == up) {
      rows.push_back({coef, 0, lo - offset});
      return;
    }
    if (std::isfinite(up)) rows.push_back({coef, -1, up - offset});
    if (std::isfinite(lo)) rows.push_back({coef, 1, lo - offset});
  };
  for (size_t i = 0; i < lp.a.size(); ++i) {
    add_row(lp.a[i], lp.row_lo[i], lp.row_up[i]);
  }
  for (int j = 0; j < n; ++j) {
    if (std::isfinite(lp.col_lo[j]) && std::isfinite(lp.col_up[j])) {
      std::vector<double> e(n, 0.0);
      e[j] = 1.0;
      add_row(e, -inf, lp.col_up[j]);
    }
  }
  for (Row& r : rows) {
    if (r.rhs < 0) {
      for (double& v : r.coef) v = -v;
      r.rhs = -r.rhs;
      r.sense = -r.sense;
    }
  }

  const int m = static_cast<int>(rows.size());
  int num_slack = 0, num_art = 0;
  for (const Row& r : rows) {
    if (r.sense != 0) ++num_slack;
    if (r.sense >= 0) ++num_art;
  }
  const int total = ny + num_slack + num_art;
  const int art_begin = ny + num_slack;
  std::vector<std::vector<double>> t(m, std::vector<double>(total + 1, 0.0));
  std::vector<int> basis(m);
  int s = ny, a = art_begin;
  for (int i = 0; i < m; ++i) {
    for (int k = 0; k < ny; ++k) t[i][k] = rows[i].coef[k];
    t[i][total] = rows[i].rhs;
    if (rows[i].sense == -1) {
      t[i][s] = 1.0;
      basis[i] = s++;
    } else {
      if (rows[i].sense == 1) t[i][s++] = -1.0;
      t[i][a] = 1.0;
      basis[i] = a++;
    }
  }

  auto pivot = [&](int pr, int pc) {
    double pv = t[pr][pc];
    for (double& v : t[pr]) v /= pv;
    for (int i = 0; i < m; ++i) {
      if (i == pr || t[i][pc] == 0.0) continue;
      double f = t[i][pc];
      for (int k = 0; k <= total; ++k) t[i][k] -= f * t[pr][k];
    }
    basis[pr] = pc;
  };

  // Runs Bland's-rule simplex for cost vector `cost` over allowed columns.
  auto run = [&](const std::vector<double>& cost, int allowed) -> bool {
    while (true) {
      int enter = -1;
      for (int k = 0; k < allowed; ++k) {
        double d = cost[k];
        for (int i = 0; i < m; ++i) d -= cost[basis[i]] * t[i][k];
        if (d < -kEps) {
          enter = k;
          break;
        }
      }
      if (enter < 0) return true;
      int leave = -1;
      double best = inf;
      for (int i = 0; i < m; ++i) {
        if (t[i][enter] > kEps) {
          double ratio = t[i][total] / t[i][enter];
          if (ratio < best - kEps ||
              (ratio <= best + kEps && leave >= 0 && basis[i] < basis[leave])) {
            best = ratio;
            leave = i;
          }
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
  };

  DenseResult result;
  std::vector<double> phase1(total, 0.0);
  for (int k = art_begin; k < total; ++k) phase1[k] = 1.0;
  run(phase1, total);
  double infeas = 0;
  for (int i = 0; i < m; ++i) {
    if (basis[i] >= art_begin) infeas += t[i][total];
  }
  if (infeas > 1e-7) {
    result.status = DenseStatus::kInfeasible;
    return result;
  }
  // Drive remaining (zero-valued) artificials out of the basis.
  for (int i = 0; i < m; ++i) {
    if (basis[i] < art_begin) continue;
    for (int k = 0; k < art_begin; ++k) {
      if (std::abs(t[i][k]) > 1e-9) {
        pivot(i, k);
        break;
      }
    }
  }

  std::vector<double> phase2(total, 0.0);
  for (int k = 0; k < ny; ++k) phase2[k] = lp.c[parts[k].col] * parts[k].sign;
  if (!run(phase2, art_begin)) {
    result.status = DenseStatus::kUnbounded;
    return result;
  }

  std::vector<double> y(total, 0.0);
  for (int i = 0; i < m; ++i) y[basis[i]] = t[i][total];
  result.x = shift;
  for (int k = 0; k < ny; ++k) result.x[parts[k].col] += parts[k].sign * y[k];
  result.objective = 0;
  for (int j = 0; j < n; ++j) result.objective += lp.c[j] * result.x[j];
  result.status = DenseStatus::kOptimal;
  return result;
}

}  // namespace ntnqos::oracle

#endif  // NTNQOS_TESTS_ORACLE_DENSE_SIMPLEX_H_
