#include <cmath>
#include <fstream>
#include <sstream>

#include "ntnqos/milp.h"

namespace ntnqos {
namespace {

std::string Num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void Line(std::ostream& os, std::string_view a, std::string_view b,
          std::string_view c, std::string_view d = {}) {
  os << ' ' << a;
  for (size_t k = a.size(); k < 3; ++k) os << ' ';
  os << b;
  for (size_t k = b.size(); k < 10; ++k) os << ' ';
  os << ' ' << c;
  if (!d.empty()) {
    for (size_t k = c.size(); k < 10; ++k) os << ' ';
    os << ' ' << d;
  }
  os << '\n';
}

}  // namespace

std::string ToMps(const MilpProblem& problem, const std::string& name) {
  if (problem.empty()) throw ModelError("cannot export an empty model");
  const auto& vars = problem.variables();
  const auto& rows = problem.rows();
  const std::string obj = "COST";

  std::vector<std::vector<std::pair<int, double>>> by_col(vars.size());
  for (size_t r = 0; r < rows.size(); ++r) {
    for (const auto& [col, coef] : rows[r].terms) {
      by_col[col].emplace_back(static_cast<int>(r), coef);
    }
  }

  std::ostringstream os;
  os << "NAME          " << name << '\n';
  os << "OBJSENSE\n    MIN\n";
  os << "ROWS\n";
  Line(os, "N", obj, "");
  for (const MilpRow& r : rows) {
    const char* type = "N";
    if (r.lower == r.upper) {
      type = "E";
    } else if (std::isfinite(r.lower)) {
      type = "G";
    } else if (std::isfinite(r.upper)) {
      type = "L";
    }
    Line(os, type, r.name, "");
  }

  os << "COLUMNS\n";
  bool in_int = false;
  int marker = 0;
  for (size_t j = 0; j < vars.size(); ++j) {
    const MilpVariable& v = vars[j];
    if (v.integer != in_int) {
      os << "    MARKER" << marker++ << "  'MARKER'  "
         << (v.integer ? "'INTORG'" : "'INTEND'") << '\n';
      in_int = v.integer;
    }
    if (v.objective != 0 || by_col[j].empty()) {
      Line(os, "", v.name, obj, Num(v.objective));
    }
    for (const auto& [r, coef] : by_col[j]) {
      Line(os, "", v.name, rows[r].name, Num(coef));
    }
  }
  if (in_int) os << "    MARKER" << marker << "  'MARKER'  'INTEND'\n";

  os << "RHS\n";
  std::ostringstream ranges;
  for (const MilpRow& r : rows) {
    double rhs = 0;
    if (r.lower == r.upper || std::isfinite(r.lower)) {
      rhs = r.lower;
    } else if (std::isfinite(r.upper)) {
      rhs = r.upper;
    }
    if (rhs != 0) Line(os, "", "RHS", r.name, Num(rhs));
    if (r.lower != r.upper && std::isfinite(r.lower) && std::isfinite(r.upper)) {
      Line(ranges, "", "RNG", r.name, Num(r.upper - r.lower));
    }
  }
  if (!ranges.str().empty()) os << "RANGES\n" << ranges.str();

  os << "BOUNDS\n";
  for (const MilpVariable& v : vars) {
    if (v.lower == v.upper) {
      Line(os, "FX", "BND", v.name, Num(v.lower));
      continue;
    }
    if (!std::isfinite(v.lower)) {
      Line(os, "MI", "BND", v.name);
    } else if (v.lower != 0) {
      Line(os, "LO", "BND", v.name, Num(v.lower));
    }
    if (std::isfinite(v.upper)) {
      Line(os, "UP", "BND", v.name, Num(v.upper));
    } else if (v.integer) {
      Line(os, "PL", "BND", v.name);
    }
  }
  os << "ENDATA\n";
  return os.str();
}

void ExportMps(const MilpProblem& problem, const std::filesystem::path& path,
               const std::string& name) {
  std::string text = ToMps(problem, name);
  std::ofstream out(path);
  if (!out) throw std::ios_base::failure("cannot open " + path.string() + " for writing");
  out << text;
  out.close();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace ntnqos
