// Command-line entry point: run, topo, export-mps, validate.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <fstream>
#include <iostream>
#include <map>

#include "ntnqos/milp.h"
#include "ntnqos/scenario.h"

namespace {

using namespace ntnqos;

constexpr int kExitConfig = 3;
constexpr int kExitIo = 4;
constexpr int kExitRuntime = 1;

struct Overrides {
  std::optional<uint64_t> seed;
  std::optional<double> time_limit_s;
  std::string out;
};

ScenarioConfig Load(const std::string& path, const Overrides& o) {
  ScenarioConfig c = LoadScenario(path);
  if (o.seed) c.seeds = {*o.seed};
  if (o.time_limit_s) c.solver.time_limit_s = *o.time_limit_s;
  c.Validate();
  return c;
}

int Run(const std::string& path, const Overrides& o, int workers, bool fresh, bool verbose) {
  ScenarioConfig c = Load(path, o);
  if (!o.out.empty()) c.csv_path = o.out;
  SweepOptions opts;
  opts.workers = workers;
  opts.resume = !fresh;
  opts.quiet = !verbose;
  RunRecord rec = RunSweep(c, opts);
  std::map<std::string, int> by_status;
  for (const CsvRow& r : rec.rows) ++by_status[r.status];
  std::cout << fmt::format("{} rows ({} resumed, {} run) -> {}\n", rec.rows.size(), rec.resumed,
                           rec.executed, rec.csv_path.string());
  for (const auto& [status, n] : by_status) std::cout << fmt::format("  {}: {}\n", status, n);
  return 0;
}

int Topo(const std::string& path, const Overrides& o) {
  ScenarioConfig c = Load(path, o);
  std::string json = BuildScenarioTopology(c).ToJson();
  if (o.out.empty()) {
    std::cout << json << "\n";
    return 0;
  }
  std::ofstream out(o.out);
  if (!out) throw std::ios_base::failure("cannot write " + o.out);
  out << json << "\n";
  return 0;
}

int ExportMpsCommand(const std::string& path, const Overrides& o, const std::string& point_text,
                     bool solve) {
  ScenarioConfig c = Load(path, o);
  SweepPoint p = ParsePoint(point_text, c);
  Topology topo = BuildScenarioTopology(c);
  PointInstance inst = BuildPointInstance(c, topo, p);
  MilpModel model = BuildModel(inst.slices, topo, inst.weights);
  std::string out = o.out.empty()
                        ? fmt::format("{}_c{}_f{}_w{}_s{}.mps", c.name.empty() ? "model" : c.name,
                                      p.condition, p.flows_per_ue, p.weights.w_flow, p.seed)
                        : o.out;
  ExportMps(model.problem(), out);
  std::cout << fmt::format("wrote {} ({} rows, {} columns, {} integer)\n", out,
                           model.problem().rows().size(), model.problem().variables().size(),
                           model.problem().num_integer());
  if (solve) {
    Solution sol = Solve(model, c.solver);
    std::cout << fmt::format("status {}\nincumbent {}\nobjective {:.12g}\nbest_bound {:.12g}\n"
                             "nodes {}\nlp_iterations {}\nsolve_time_s {:.3f}\n",
                             ToString(sol.status), sol.has_incumbent, sol.objective,
                             sol.best_bound, sol.nodes, sol.lp_iterations, sol.solve_time_s);
  }
  return 0;
}

int Validate(const std::string& path, const Overrides& o) {
  ScenarioConfig c = Load(path, o);
  std::cout << fmt::format("ok {} points, config hash {}\n", EnumeratePoints(c).size(),
                           c.HashHex());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NTN slice routing and allocation experiments"};
  app.require_subcommand(1);

  std::string config;
  Overrides o;
  uint64_t seed = 0;
  double time_limit = 0;
  int workers = 1;
  bool fresh = false, verbose = false, solve = false;
  std::string point;

  auto add_common = [&](CLI::App* sub, bool with_out) {
    sub->add_option("config", config, "Scenario file")->required();
    sub->add_option("--seed", seed, "Replace the seed list with one seed");
    sub->add_option("--time-limit", time_limit, "Per-solve time limit in seconds")
        ->check(CLI::PositiveNumber);
    if (with_out) sub->add_option("--out", o.out, "Output path");
  };
  CLI::App* run = app.add_subcommand("run", "Run the configured sweep");
  add_common(run, true);
  run->add_option("--workers", workers, "Concurrent sweep points")->check(CLI::PositiveNumber);
  run->add_flag("--fresh", fresh, "Ignore and overwrite an existing CSV");
  run->add_flag("-v,--verbose", verbose, "Report each point on stderr");
  CLI::App* topo = app.add_subcommand("topo", "Dump the topology as JSON");
  add_common(topo, true);
  CLI::App* mps = app.add_subcommand("export-mps", "Write one sweep point's model as MPS");
  add_common(mps, true);
  mps->add_option("--point", point, "cond=<id>,flows=<n>,w=<w_f>[,seed=<s>]")->required();
  mps->add_flag("--solve", solve, "Also solve and print the objective");
  CLI::App* validate = app.add_subcommand("validate", "Check a scenario file");
  add_common(validate, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--seed")) o.seed = seed;
  if (sub->count("--time-limit")) o.time_limit_s = time_limit;

  try {
    if (sub == run) return Run(config, o, workers, fresh, verbose);
    if (sub == topo) return Topo(config, o);
    if (sub == mps) return ExportMpsCommand(config, o, point, solve);
    return Validate(config, o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
