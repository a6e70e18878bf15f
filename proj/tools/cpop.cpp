#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cpop/driver.hpp"

using namespace cpop;

namespace {

// Raw option values, converted after parsing so that domain errors carry their own messages.
struct Flags {
  std::string input, mode = "moment", form = "complex", orders, invariance = "none", sphere_slack = "off";
  std::string objective = "cost", out, log;
  int order = 0, adapt_h = 2, adapt_spread = 2, max_iterations = 8, max_order = 4;
  double adapt_eps = 1.0, tol = default_tolerance(), merge = 0.0;
  std::uint64_t seed = 1;
  bool sparse = false, dense = false, no_line_limits = false, json = false;
};

void add_run_options(CLI::App& app, Flags& f, bool with_input) {
  if (with_input) app.add_option("input", f.input, "Case (.m or network .json) or POP (.json)")->required();
  app.add_option("--mode", f.mode, "shor-sdp, socp, moment or mismatch")
      ->check(CLI::IsMember({"shor-sdp", "socp", "moment", "mismatch"}));
  app.add_option("--form", f.form, "complex, real or coupled (shor-sdp, socp)")
      ->check(CLI::IsMember({"complex", "real", "coupled"}));
  app.add_option("--order", f.order, "Uniform relaxation order d_i");
  app.add_option("--orders", f.orders, "Per-constraint orders i=d,... (1-based)");
  app.add_option("--adapt-eps", f.adapt_eps, "Mismatch tolerance epsilon (native units)");
  app.add_option("--adapt-h", f.adapt_h, "Largest mismatches considered per iteration");
  app.add_option("--adapt-spread", f.adapt_spread, "Cap on max H - min H");
  auto* sp = app.add_flag("--sparse", f.sparse, "Chordal sparse relaxation");
  auto* de = app.add_flag("--dense", f.dense, "Dense relaxation");
  sp->excludes(de);
  app.add_option("--invariance", f.invariance, "none, torus or pm1")->check(CLI::IsMember({"none", "torus", "pm1"}));
  app.add_option("--sphere-slack", f.sphere_slack, "off, global or per-clique")
      ->check(CLI::IsMember({"off", "global", "per-clique"}));
  app.add_option("--objective", f.objective, "OPF objective: loss or cost")->check(CLI::IsMember({"loss", "cost"}));
  app.add_flag("--no-line-limits", f.no_line_limits, "Drop OPF line-flow limits");
  app.add_option("--merge-threshold", f.merge, "Merge lines below this impedance (p.u.)");
  app.add_option("--tol", f.tol, "Solver tolerance (default from CPOP_TOL, else 1e-8)");
  app.add_option("--seed", f.seed, "Random seed");
  app.add_option("--max-iterations", f.max_iterations, "Hierarchy iteration limit");
  app.add_option("--max-order", f.max_order, "Hierarchy order limit");
  app.add_option("--out", f.out, "Result JSON path");
  app.add_option("--log", f.log, "Iteration log path (JSON lines)");
}

RunConfig to_config(const Flags& f) {
  RunConfig c;
  c.input = f.input;
  c.mode = run_mode_from_string(f.mode);
  c.form = form_from_string(f.form);
  c.order = f.order;
  c.orders = parse_orders(f.orders);
  c.adapt = {f.adapt_eps, f.adapt_h, f.adapt_spread};
  if (f.sparse) c.sparse = true;
  if (f.dense) c.sparse = false;
  c.invariance = invariance_from_string(f.invariance);
  c.sphere_slack = sphere_slack_from_string(f.sphere_slack);
  c.objective = opf_objective_from_string(f.objective);
  c.line_limits = !f.no_line_limits;
  c.merge_threshold = f.merge;
  c.tol = f.tol;
  c.seed = f.seed;
  c.max_iterations = f.max_iterations;
  c.max_order = f.max_order;
  c.out = f.out;
  c.log = f.log;
  return c;
}

int solve_main(int argc, char** argv) {
  CLI::App app{"Complex polynomial optimization: moment/SOS hierarchies, Shor relaxations, OPF"};
  app.set_version_flag("--version", kVersion);
  Flags f;
  add_run_options(app, f, true);
  app.add_flag("--json", f.json, "Print the result JSON instead of the summary");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  RunConfig c;
  try {
    c = to_config(f);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  const RunOutcome o = run(c);
  if (f.json) std::cout << o.result.dump(2) << '\n';
  else std::cout << o.summary;
  return o.exit_code;
}

std::vector<std::string> split_words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

int compare_main(int argc, char** argv) {
  CLI::App app{"Run several configurations on one input and tabulate bounds"};
  std::string input, csv;
  std::vector<std::string> runs;
  app.add_option("input", input, "Input file")->required();
  app.add_option("--run", runs, "Options of one configuration, e.g. \"--mode socp --form real\"")->required();
  app.add_option("--csv", csv, "CSV output path");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  try {
    std::vector<std::pair<std::string, RunConfig>> configs;
    for (const auto& r : runs) {
      CLI::App sub{"run"};
      Flags f;
      add_run_options(sub, f, false);
      std::vector<std::string> words = split_words(r);
      std::reverse(words.begin(), words.end());
      sub.parse(words);
      f.input = input;
      configs.push_back({r, to_config(f)});
    }
    const auto rows = compare(configs);
    write_compare_table(rows, std::cout);
    if (!csv.empty()) {
      std::ofstream out(csv);
      if (!out) throw std::runtime_error("cannot write " + csv);
      write_compare_csv(rows, out);
    }
    for (const auto& row : rows)
      if (row.outcome.exit_code == 1) return 1;
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: --run: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1 && std::string(argv[1]) == "compare") return compare_main(argc - 1, argv + 1);
  return solve_main(argc, argv);
}
