// Experiment harness: smooth convergence, interior layer, conditioning and
// custom constant-data runs. Tables go to --out as CSV and Markdown.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "egbp/study.hpp"

namespace fs = std::filesystem;
using namespace egbp;

namespace {

struct Options {
  std::string config_path;
  std::string out_dir;
  bool check = false;
  bool emit_fields = false;
  bool verbatim_inner = false;
  bool verbatim_outer = false;
  std::optional<int> levels;
  std::optional<int> beta;
  std::optional<double> gamma;
  std::optional<double> omega;
  std::optional<double> tol_inner;
  std::optional<double> tol_outer;
};

void add_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config_path, "flat key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out_dir, "output directory");
  cmd->add_flag("--check", o.check, "evaluate the acceptance checks; nonzero exit on failure");
  cmd->add_option("--levels", o.levels, "number of meshes in the refinement sequence");
  cmd->add_option("--beta", o.beta, "penalty exponent");
  cmd->add_option("--gamma", o.gamma, "penalty factor");
  cmd->add_option("--omega", o.omega, "Richardson damping in (0, 1]");
  cmd->add_option("--tol-inner", o.tol_inner, "inner stopping tolerance");
  cmd->add_option("--tol-outer", o.tol_outer, "outer stopping tolerance");
  cmd->add_flag("--paper-verbatim-inner", o.verbatim_inner, "drop the constant coupling from the inner residual");
  cmd->add_flag("--paper-verbatim-outer", o.verbatim_outer, "use the untruncated previous linear part in step 2");
  cmd->add_flag("--emit-fields", o.emit_fields, "write per-vertex solution values for plotting");
  cmd->allow_extras();
}

/// Config file, then --key=value extras, then the named flags.
StudyConfig build_config(Experiment experiment, const Options& o, const std::vector<std::string>& extras) {
  StudyConfig c = default_config(experiment);
  if (!o.config_path.empty()) parse_config_file(o.config_path, c);
  for (const auto& arg : extras) {
    if (arg.rfind("--", 0) != 0 || arg.find('=') == std::string::npos) {
      throw std::invalid_argument("unrecognized argument '" + arg + "' (overrides take the form --key=value)");
    }
    const auto eq = arg.find('=');
    apply_setting(c, arg.substr(2, eq - 2), arg.substr(eq + 1));
  }
  c.experiment = experiment;
  if (!o.out_dir.empty()) c.output_dir = o.out_dir;
  if (o.levels) c.levels = *o.levels;
  if (o.beta) c.spec.beta = *o.beta;
  if (o.gamma) c.spec.gamma = *o.gamma;
  if (o.omega) c.spec.omega = *o.omega;
  if (o.tol_inner) c.spec.tol_inner = *o.tol_inner;
  if (o.tol_outer) c.spec.tol_outer = *o.tol_outer;
  if (o.verbatim_inner) c.spec.paper_verbatim_inner = true;
  if (o.verbatim_outer) c.spec.paper_verbatim_outer = true;
  if (o.emit_fields) c.emit_fields = true;
  return c;
}

std::ofstream open_output(const StudyConfig& c, const std::string& name) {
  fs::create_directories(c.output_dir);
  const fs::path path = fs::path(c.output_dir) / name;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

bool report_checks(const std::vector<CheckResult>& checks) {
  bool ok = true;
  for (const auto& c : checks) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    ok = ok && c.passed;
  }
  return ok;
}

void print_levels(const StudyReport& r) {
  for (const auto& l : r.levels) {
    std::cout << "  elements " << l.elements << "  outer " << l.outer_iters << "  inner " << l.inner_iters
              << (l.converged ? "" : "  NOT CONVERGED") << "  " << l.seconds << " s\n";
  }
}

int run_study(Experiment experiment, const StudyConfig& c, bool check) {
  const std::string name = to_string(experiment);
  open_output(c, name + "_config.txt") << echo_config(c);
  bool converged = true;
  std::vector<CheckResult> checks;
  if (experiment == Experiment::smooth || experiment == Experiment::custom) {
    const StudyReport r = experiment == Experiment::smooth ? run_smooth(c) : run_custom(c);
    auto csv = open_output(c, name + ".csv");
    write_study_csv(csv, r.levels);
    auto md = open_output(c, name + ".md");
    write_study_markdown(md, r.levels, name + " study");
    auto trace = open_output(c, name + "_trace.csv");
    for (std::size_t l = 0; l < r.traces.size(); ++l) write_trace_csv(trace, r.traces[l], static_cast<int>(l), l == 0);
    if (c.emit_fields) {
      for (std::size_t l = 0; l < r.solutions.size(); ++l) {
        auto fields = open_output(c, name + "_fields_" + std::to_string(l) + ".csv");
        write_fields_csv(fields, r.meshes[l], {"u_plus"}, {&r.solutions[l].u_plus});
      }
    }
    print_levels(r);
    converged = r.all_converged();
    if (check && experiment == Experiment::smooth) checks = check_smooth(r);
  } else if (experiment == Experiment::layer) {
    const LayerReport r = run_layer(c);
    auto csv = open_output(c, "layer.csv");
    write_layer_csv(csv, r);
    auto md = open_output(c, "layer.md");
    write_layer_markdown(md, r);
    auto trace = open_output(c, "layer_trace.csv");
    write_trace_csv(trace, r.bp_solution.trace, 0);
    if (c.emit_fields) {
      auto fields = open_output(c, "layer_fields.csv");
      write_fields_csv(fields, r.mesh, {"standard_eg", "bound_preserving"}, {&r.standard_solution, &r.bp_solution.u_plus});
    }
    std::cout << "  standard EG min " << r.standard.min_val << " max " << r.standard.max_val << '\n'
              << "  bound-preserving min " << r.bound_preserving.min_val << " max " << r.bound_preserving.max_val
              << "  outer " << r.bound_preserving.outer_iters << '\n';
    converged = r.bound_preserving.converged;
    if (check) checks = check_layer(r);
  } else {
    const ConditionReport r = run_condition(c);
    auto csv = open_output(c, "condition.csv");
    write_condition_csv(csv, r);
    auto md = open_output(c, "condition.md");
    write_condition_markdown(md, r);
    if (check) checks = check_condition(r);
  }
  if (!converged) std::cout << "some levels did not converge\n";
  const bool passed = report_checks(checks);
  std::cout << "results written to " << c.output_dir << '\n';
  return converged && passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bound-preserving enriched Galerkin experiments"};
  app.require_subcommand(1);
  Options options;
  const std::vector<std::pair<Experiment, std::string>> commands = {
      {Experiment::smooth, "convergence study for a smooth manufactured solution"},
      {Experiment::layer, "interior layer: standard EG against the bound-preserving method"},
      {Experiment::condition, "condition numbers of A, A1 and A0 under refinement"},
      {Experiment::custom, "constant data on a structured or imported mesh"},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [experiment, help] : commands) {
    CLI::App* sub = app.add_subcommand(to_string(experiment), help);
    add_options(sub, options);
    subs.push_back(sub);
  }
  CLI11_PARSE(app, argc, argv);
  try {
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (!subs[i]->parsed()) continue;
      const Experiment experiment = commands[i].first;
      const StudyConfig config = build_config(experiment, options, subs[i]->remaining());
      return run_study(experiment, config, options.check);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
