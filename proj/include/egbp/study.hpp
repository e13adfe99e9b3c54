#ifndef EGBP_STUDY_HPP
#define EGBP_STUDY_HPP

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "egbp/analysis.hpp"
#include "egbp/mesh_io.hpp"

namespace egbp {

enum class Experiment { smooth, layer, condition, custom };

inline std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::smooth: return "smooth";
    case Experiment::layer: return "layer";
    case Experiment::condition: return "condition";
    case Experiment::custom: return "custom";
  }
  return "?";
}

inline Experiment parse_experiment(const std::string& name) {
  if (name == "smooth") return Experiment::smooth;
  if (name == "layer") return Experiment::layer;
  if (name == "condition") return Experiment::condition;
  if (name == "custom") return Experiment::custom;
  throw std::invalid_argument("config: unknown experiment '" + name + "'");
}

/// Parameters of one study. `levels` counts the meshes of the sequence: the
/// base grid nx x ny on `domain` followed by levels - 1 uniform refinements.
struct StudyConfig {
  Experiment experiment = Experiment::smooth;
  int levels = 1;
  int nx = 1;
  int ny = 1;
  Rect domain{};
  ProblemSpec spec{};
  std::string output_dir = ".";
  bool emit_fields = false;
  bool compute_condition = false;  // add kappa(A), kappa(A1), kappa(A0) to every level
  std::vector<int> betas{1, 2, 4};  // condition study only
  // custom study only
  double source_value = 0.0;
  double boundary_value = 0.0;
  std::string mesh_file;
  bool bounds_given = false;

  void validate() const {
    if (levels < 1) throw std::invalid_argument("config: levels must be >= 1");
    if (nx < 1 || ny < 1) throw std::invalid_argument("config: nx and ny must be >= 1");
    if (!(domain.width() > 0.0) || !(domain.height() > 0.0)) throw std::invalid_argument("config: degenerate domain");
    if (experiment == Experiment::layer && (nx % 4 != 0 || ny % 4 != 0)) {
      throw std::invalid_argument("config: the layer study needs nx and ny divisible by 4");
    }
    if (experiment == Experiment::condition && betas.empty()) throw std::invalid_argument("config: betas must not be empty");
    spec.validate();
  }
};

namespace smooth_case {
inline double solution(Point p) {
  constexpr double pi = std::numbers::pi;
  return std::sin(pi * (p.x + 1.0) / 2.0) * std::sin(pi * p.y);
}
inline Point gradient(Point p) {
  constexpr double pi = std::numbers::pi;
  return {pi / 2.0 * std::cos(pi * (p.x + 1.0) / 2.0) * std::sin(pi * p.y),
          pi * std::sin(pi * (p.x + 1.0) / 2.0) * std::cos(pi * p.y)};
}
/// -eps Laplace(u) + mu u for the solution above.
inline ScalarField source(double epsilon, double mu) {
  constexpr double pi = std::numbers::pi;
  const double factor = epsilon * (pi * pi / 4.0 + pi * pi) + mu;
  return [factor](Point p) { return factor * solution(p); };
}
}  // namespace smooth_case

namespace layer_case {
/// Zero on the inner square [1/4, 3/4]^2, one elsewhere.
inline double source(Point p) {
  const bool inner = p.x > 0.25 && p.x < 0.75 && p.y > 0.25 && p.y < 0.75;
  return inner ? 0.0 : 1.0;
}
}  // namespace layer_case

/// Defaults of each experiment, applied before the config file is read.
inline StudyConfig default_config(Experiment experiment) {
  StudyConfig c;
  c.experiment = experiment;
  switch (experiment) {
    case Experiment::smooth:
      c.levels = 6;
      c.nx = 8;
      c.ny = 4;
      c.domain = {-1.0, 0.0, 1.0, 1.0};
      c.spec.epsilon = 1e-5;
      c.spec.tol_inner = 1e-9;
      c.spec.tol_outer = 1e-12;
      break;
    case Experiment::layer:
      c.levels = 1;
      c.nx = 12;
      c.ny = 12;
      c.spec.epsilon = 1e-7;
      c.spec.source_quadrature = SourceQuadrature::centroid;
      break;
    case Experiment::condition:
      c.levels = 5;
      c.nx = 2;
      c.ny = 2;
      c.spec.epsilon = 1.0;
      c.spec.mu = 1.0;
      c.spec.gamma = 1.0;
      break;
    case Experiment::custom:
      c.levels = 3;
      c.nx = 8;
      c.ny = 8;
      break;
  }
  return c;
}

namespace detail {
inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw std::invalid_argument("config: " + key + " expects a boolean, got '" + value + "'");
}

inline int parse_int(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  int out = 0;
  try {
    out = std::stoi(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) throw std::invalid_argument("config: " + key + " expects an integer, got '" + value + "'");
  return out;
}

inline double parse_real(const std::string& key, const std::string& value) {
  try {
    return parse_double(value);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: " + key + " expects a number, got '" + value + "'");
  }
}

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  std::string out = s.substr(first, last - first + 1);
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}
}  // namespace detail

/// Applies one key = value setting; unknown keys are errors.
inline void apply_setting(StudyConfig& c, const std::string& raw_key, const std::string& value) {
  std::string key = raw_key;
  for (char& ch : key) {
    if (ch == '-') ch = '_';
  }
  using namespace detail;
  ProblemSpec& s = c.spec;
  if (key == "experiment") c.experiment = parse_experiment(value);
  else if (key == "levels") c.levels = parse_int(key, value);
  else if (key == "nx") c.nx = parse_int(key, value);
  else if (key == "ny") c.ny = parse_int(key, value);
  else if (key == "x0") c.domain.x0 = parse_real(key, value);
  else if (key == "y0") c.domain.y0 = parse_real(key, value);
  else if (key == "x1") c.domain.x1 = parse_real(key, value);
  else if (key == "y1") c.domain.y1 = parse_real(key, value);
  else if (key == "epsilon") s.epsilon = parse_real(key, value);
  else if (key == "mu") s.mu = parse_real(key, value);
  else if (key == "gamma") s.gamma = parse_real(key, value);
  else if (key == "beta") s.beta = parse_int(key, value);
  else if (key == "alpha") s.alpha = parse_real(key, value);
  else if (key == "omega") s.omega = parse_real(key, value);
  else if (key == "lower") { s.bounds.lower = parse_real(key, value); c.bounds_given = true; }
  else if (key == "upper") { s.bounds.upper = parse_real(key, value); c.bounds_given = true; }
  else if (key == "tol_inner") s.tol_inner = parse_real(key, value);
  else if (key == "tol_outer") s.tol_outer = parse_real(key, value);
  else if (key == "max_inner") s.max_inner = parse_int(key, value);
  else if (key == "max_outer") s.max_outer = parse_int(key, value);
  else if (key == "paper_verbatim_inner") s.paper_verbatim_inner = parse_bool(key, value);
  else if (key == "paper_verbatim_outer") s.paper_verbatim_outer = parse_bool(key, value);
  else if (key == "inner_operator") {
    if (value == "a_h") s.inner_operator = InnerOperator::a_h;
    else if (value == "active_set") s.inner_operator = InnerOperator::active_set;
    else throw std::invalid_argument("config: inner_operator must be a_h or active_set");
  } else if (key == "penalty_weight") {
    if (value == "reaction_diffusion") s.penalty_weight = PenaltyWeight::reaction_diffusion;
    else if (value == "diffusion_only") s.penalty_weight = PenaltyWeight::diffusion_only;
    else throw std::invalid_argument("config: penalty_weight must be reaction_diffusion or diffusion_only");
  } else if (key == "source_quadrature") {
    if (value == "dunavant") s.source_quadrature = SourceQuadrature::dunavant;
    else if (value == "centroid") s.source_quadrature = SourceQuadrature::centroid;
    else throw std::invalid_argument("config: source_quadrature must be dunavant or centroid");
  } else if (key == "output_dir" || key == "out") c.output_dir = value;
  else if (key == "emit_fields") c.emit_fields = parse_bool(key, value);
  else if (key == "compute_condition") c.compute_condition = parse_bool(key, value);
  else if (key == "betas") {
    c.betas.clear();
    std::stringstream list(value);
    std::string item;
    while (std::getline(list, item, ',')) c.betas.push_back(parse_int(key, trim(item)));
  } else if (key == "source_value") c.source_value = parse_real(key, value);
  else if (key == "boundary_value") c.boundary_value = parse_real(key, value);
  else if (key == "mesh_file") c.mesh_file = value;
  else throw std::invalid_argument("config: unknown key '" + raw_key + "'");
}

/// Flat "key = value" text; '#' and ';' start comments, [section] lines are
/// ignored.
inline void parse_config(std::istream& in, StudyConfig& c) {
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = detail::trim(line);
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config: line " + std::to_string(number) + " has no '='");
    apply_setting(c, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
}

inline void parse_config_file(const std::string& path, StudyConfig& c) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  parse_config(in, c);
}

/// Effective settings, one "key = value" line each.
inline std::string echo_config(const StudyConfig& c) {
  const ProblemSpec& s = c.spec;
  std::ostringstream out;
  out << "experiment = " << to_string(c.experiment) << '\n'
      << "levels = " << c.levels << "\nnx = " << c.nx << "\nny = " << c.ny << '\n'
      << "x0 = " << format_double(c.domain.x0) << "\ny0 = " << format_double(c.domain.y0) << '\n'
      << "x1 = " << format_double(c.domain.x1) << "\ny1 = " << format_double(c.domain.y1) << '\n'
      << "epsilon = " << format_double(s.epsilon) << "\nmu = " << format_double(s.mu) << '\n'
      << "gamma = " << format_double(s.gamma) << "\nbeta = " << s.beta << "\nalpha = " << format_double(s.alpha) << '\n'
      << "omega = " << format_double(s.omega) << '\n'
      << "lower = " << format_double(s.bounds.lower) << "\nupper = " << format_double(s.bounds.upper) << '\n'
      << "tol_inner = " << format_double(s.tol_inner) << "\ntol_outer = " << format_double(s.tol_outer) << '\n'
      << "max_inner = " << s.max_inner << "\nmax_outer = " << s.max_outer << '\n'
      << "paper_verbatim_inner = " << (s.paper_verbatim_inner ? "true" : "false") << '\n'
      << "paper_verbatim_outer = " << (s.paper_verbatim_outer ? "true" : "false") << '\n'
      << "inner_operator = " << (s.inner_operator == InnerOperator::a_h ? "a_h" : "active_set") << '\n'
      << "penalty_weight = " << (s.penalty_weight == PenaltyWeight::reaction_diffusion ? "reaction_diffusion" : "diffusion_only") << '\n'
      << "source_quadrature = " << (s.source_quadrature == SourceQuadrature::dunavant ? "dunavant" : "centroid") << '\n'
      << "emit_fields = " << (c.emit_fields ? "true" : "false") << '\n'
      << "compute_condition = " << (c.compute_condition ? "true" : "false") << '\n';
  if (c.experiment == Experiment::condition) {
    out << "betas = ";
    for (std::size_t i = 0; i < c.betas.size(); ++i) out << (i ? "," : "") << c.betas[i];
    out << '\n';
  }
  if (c.experiment == Experiment::custom) {
    out << "source_value = " << format_double(c.source_value) << "\nboundary_value = " << format_double(c.boundary_value) << '\n';
    if (!c.mesh_file.empty()) out << "mesh_file = " << c.mesh_file << '\n';
  }
  return out.str();
}

/// One refinement level of a study.
struct LevelRecord {
  std::size_t elements = 0;
  double h = 0.0;
  double err_l2 = std::numeric_limits<double>::quiet_NaN();
  double err_h1 = std::numeric_limits<double>::quiet_NaN();
  double jump_norm = 0.0;
  double const_l2 = 0.0;
  int outer_iters = 0;
  int inner_iters = 0;
  double min_val = 0.0;
  double max_val = 0.0;
  int violations = 0;
  double cons_residual = 0.0;  // max_T |b_h(1_T) - a_h(u+, 1_T)|
  double rhs_norm = 0.0;       // ||b||_2
  double nonlinear_residual = 0.0;
  bool converged = true;
  int feasibility_violations = 0;
  double cond_A = std::numeric_limits<double>::quiet_NaN();
  double cond_A1 = std::numeric_limits<double>::quiet_NaN();
  double cond_A0 = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0.0;
};

struct StudyReport {
  StudyConfig config;
  std::vector<LevelRecord> levels;
  std::vector<SolveTrace> traces;
  std::vector<Mesh> meshes;             // kept only when fields are emitted
  std::vector<EGSolution> solutions;    // idem

  std::vector<double> column(double LevelRecord::*field) const {
    std::vector<double> out;
    for (const auto& l : levels) out.push_back(l.*field);
    return out;
  }
  std::vector<double> h() const { return column(&LevelRecord::h); }
  bool all_converged() const {
    for (const auto& l : levels) {
      if (!l.converged) return false;
    }
    return true;
  }
};

/// EOC between consecutive entries; the first entry is NaN.
inline std::vector<double> eoc_column(const std::vector<double>& values) {
  std::vector<double> out(values.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 1; i < values.size(); ++i) out[i] = eoc(values[i - 1], values[i]);
  return out;
}

inline std::vector<Mesh> mesh_sequence(const StudyConfig& c) {
  std::vector<Mesh> meshes;
  meshes.push_back(c.mesh_file.empty() ? build_structured(c.nx, c.ny, c.domain) : read_mesh_file(c.mesh_file));
  for (int l = 1; l < c.levels; ++l) meshes.push_back(refine_uniform(meshes.back()));
  return meshes;
}

namespace detail {
inline LevelRecord solve_level(const Mesh& mesh, const ProblemSpec& spec, const ScalarField* exact,
                               const VectorField* gradient, bool with_condition, SolveTrace& trace,
                               std::optional<EGSolution>* keep) {
  const auto start = std::chrono::steady_clock::now();
  const DofMap dofs(mesh);
  const SplitSolver solver(mesh, spec, dofs);
  EGSolution sol = solver.solve();
  LevelRecord r;
  r.elements = mesh.num_elements();
  r.h = mesh.h();
  if (exact) r.err_l2 = error_l2(mesh, *exact, sol.u_plus);
  if (gradient) r.err_h1 = error_h1_linear(mesh, *gradient, sol.u_plus);
  r.jump_norm = jump_norm(mesh, spec, sol.u_plus);
  r.const_l2 = const_l2(mesh, sol.u_plus.constant);
  r.outer_iters = sol.trace.outer_iters;
  for (int n : sol.trace.inner_iters_per_outer) r.inner_iters += n;
  const BoundViolation bv = bound_violation(mesh, sol.u_plus, spec.bounds, 1e-10);
  r.min_val = bv.min_val;
  r.max_val = bv.max_val;
  r.violations = bv.violation_count;
  r.cons_residual = conservation_report(solver.system(), dofs, sol).cwiseAbs().maxCoeff();
  r.rhs_norm = solver.system().rhs().norm();
  r.nonlinear_residual = sol.nonlinear_residual;
  r.converged = sol.trace.converged;
  r.feasibility_violations = sol.trace.feasibility_violations;
  if (with_condition) {
    const BlockSystem& sys = solver.system();
    r.cond_A = condition_number(sys.monolithic());
    r.cond_A1 = condition_number(sys.A11);
    r.cond_A0 = condition_number(sys.A00);
  }
  trace = sol.trace;
  if (keep) *keep = std::move(sol);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

inline StudyReport run_levels(const StudyConfig& c, const ProblemSpec& spec, const ScalarField* exact,
                              const VectorField* gradient) {
  StudyReport report;
  report.config = c;
  for (const Mesh& mesh : mesh_sequence(c)) {
    SolveTrace trace;
    std::optional<EGSolution> kept;
    report.levels.push_back(solve_level(mesh, spec, exact, gradient, c.compute_condition, trace, c.emit_fields ? &kept : nullptr));
    report.traces.push_back(std::move(trace));
    if (kept) {
      report.meshes.push_back(mesh);
      report.solutions.push_back(std::move(*kept));
    }
  }
  return report;
}
}  // namespace detail

/// Convergence study for the smooth manufactured solution on (-1, 1) x (0, 1).
inline StudyReport run_smooth(const StudyConfig& config) {
  config.validate();
  ProblemSpec spec = config.spec;
  spec.source = smooth_case::source(spec.epsilon, spec.mu);
  spec.boundary = [](Point) { return 0.0; };
  const ScalarField exact = smooth_case::solution;
  const VectorField gradient = smooth_case::gradient;
  StudyReport report = detail::run_levels(config, spec, &exact, &gradient);
  return report;
}

/// Constant data f = source_value, u_D = boundary_value on a structured or
/// imported mesh; no exact solution, so the error columns stay empty. Unless
/// bounds are configured they follow from the comparison principle.
inline StudyReport run_custom(const StudyConfig& config) {
  config.validate();
  ProblemSpec spec = config.spec;
  const double f = config.source_value;
  const double g = config.boundary_value;
  spec.source = [f](Point) { return f; };
  spec.boundary = [g](Point) { return g; };
  if (!config.bounds_given) spec.bounds = comparison_bound(std::abs(f), std::abs(g), spec.mu, f >= 0.0 && g >= 0.0);
  StudyConfig effective = config;
  effective.spec.bounds = spec.bounds;
  return detail::run_levels(effective, spec, nullptr, nullptr);
}

/// Standard EG against the bound-preserving method on one mesh.
struct LayerRecord {
  std::string method;
  std::size_t elements = 0;
  double min_val = 0.0;
  double max_val = 0.0;
  int violations = 0;
  double cons_residual = 0.0;
  double rhs_norm = 0.0;
  double nonlinear_residual = std::numeric_limits<double>::quiet_NaN();
  int outer_iters = 0;
  bool converged = true;
};

struct LayerReport {
  StudyConfig config;
  Mesh mesh;
  LayerRecord standard;
  LayerRecord bound_preserving;
  EGFunction standard_solution;
  EGSolution bp_solution;
};

inline LayerReport run_layer(const StudyConfig& config) {
  config.validate();
  LayerReport report;
  report.config = config;
  report.mesh = mesh_sequence(config).back();
  const Mesh& mesh = report.mesh;
  const DofMap dofs(mesh);

  ProblemSpec base = config.spec;
  base.source = layer_case::source;
  base.boundary = [](Point) { return 0.0; };
  base.source_quadrature = SourceQuadrature::centroid;

  ProblemSpec standard = base;
  standard.beta = 1;
  standard.alpha = 0.0;
  const BlockSystem standard_system = assemble_system(mesh, standard, dofs);
  report.standard_solution = solve_standard_eg(mesh, standard, dofs);
  const BoundViolation sv = bound_violation(mesh, report.standard_solution, base.bounds, 1e-10);
  report.standard = {"standard_eg", mesh.num_elements(), sv.min_val, sv.max_val, sv.violation_count,
                     conservation_report(standard_system, dofs, report.standard_solution).cwiseAbs().maxCoeff(),
                     standard_system.rhs().norm(), std::numeric_limits<double>::quiet_NaN(), 0, true};

  const SplitSolver solver(mesh, base, dofs);
  report.bp_solution = solver.solve();
  const BoundViolation bv = bound_violation(mesh, report.bp_solution.u_plus, base.bounds, 1e-10);
  report.bound_preserving = {"bound_preserving", mesh.num_elements(), bv.min_val, bv.max_val, bv.violation_count,
                             conservation_report(solver.system(), dofs, report.bp_solution).cwiseAbs().maxCoeff(),
                             solver.system().rhs().norm(), report.bp_solution.nonlinear_residual,
                             report.bp_solution.trace.outer_iters, report.bp_solution.trace.converged};
  return report;
}

struct ConditionRow {
  int beta = 0;
  double h = 0.0;
  double cond_A = 0.0;
  double cond_A1 = 0.0;
  double cond_A0 = 0.0;
  bool A_definite = true;
};

struct ConditionReport {
  StudyConfig config;
  std::vector<ConditionRow> rows;

  std::vector<ConditionRow> for_beta(int beta) const {
    std::vector<ConditionRow> out;
    for (const auto& r : rows) {
      if (r.beta == beta) out.push_back(r);
    }
    return out;
  }
  /// Growth rate of a condition number: minus the fitted slope against h.
  double growth_rate(int beta, double ConditionRow::*field, std::size_t count) const {
    std::vector<double> h, v;
    for (const auto& r : for_beta(beta)) {
      h.push_back(r.h);
      v.push_back(r.*field);
    }
    return -fitted_rate(h, v, count);
  }
};

/// kappa of A, A1 and A0 (without s_h) on the configured mesh sequence for
/// every beta in config.betas.
inline ConditionReport run_condition(const StudyConfig& config) {
  config.validate();
  ConditionReport report;
  report.config = config;
  const std::vector<Mesh> meshes = mesh_sequence(config);
  for (int beta : config.betas) {
    ProblemSpec spec = config.spec;
    spec.beta = beta;
    spec.validate();
    for (const Mesh& mesh : meshes) {
      const DofMap dofs(mesh);
      const BlockSystem sys = assemble_a(mesh, spec, dofs);
      const ConditionEstimate full = spectral_condition(sys.monolithic());
      report.rows.push_back({beta, mesh.h(), full.kappa, condition_number(sys.A11), condition_number(sys.A00), full.definite});
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Table output

inline const char* study_csv_header() {
  return "elements,h,err_l2,eoc_l2,err_h1,eoc_h1,jump_norm,eoc_jump,const_l2,eoc_const,iters,min_val,max_val,cons_residual";
}

namespace detail {
inline std::string csv_number(double v) { return std::isnan(v) ? "--" : format_double(v); }
inline double csv_parse(const std::string& s) {
  return s == "--" ? std::numeric_limits<double>::quiet_NaN() : parse_double(s);
}
/// Three significant digits in scientific notation, "--" for NaN.
inline std::string sci3(double v) {
  if (std::isnan(v)) return "--";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}
inline std::string fixed2(double v) {
  if (std::isnan(v)) return "--";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}
}  // namespace detail

inline void write_study_csv(std::ostream& out, const std::vector<LevelRecord>& levels) {
  out << study_csv_header() << '\n';
  std::vector<double> l2, h1, jump, cst;
  for (const auto& l : levels) {
    l2.push_back(l.err_l2);
    h1.push_back(l.err_h1);
    jump.push_back(l.jump_norm);
    cst.push_back(l.const_l2);
  }
  const auto e_l2 = eoc_column(l2), e_h1 = eoc_column(h1), e_j = eoc_column(jump), e_c = eoc_column(cst);
  using detail::csv_number;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const auto& l = levels[i];
    out << l.elements << ',' << csv_number(l.h) << ',' << csv_number(l.err_l2) << ',' << csv_number(e_l2[i]) << ','
        << csv_number(l.err_h1) << ',' << csv_number(e_h1[i]) << ',' << csv_number(l.jump_norm) << ','
        << csv_number(e_j[i]) << ',' << csv_number(l.const_l2) << ',' << csv_number(e_c[i]) << ',' << l.outer_iters
        << ',' << csv_number(l.min_val) << ',' << csv_number(l.max_val) << ',' << csv_number(l.cons_residual) << '\n';
  }
}

/// Reads the columns written by write_study_csv back into level records.
inline std::vector<LevelRecord> read_study_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != study_csv_header()) throw std::invalid_argument("read_study_csv: unexpected header");
  std::vector<LevelRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != 14) throw std::invalid_argument("read_study_csv: expected 14 columns");
    LevelRecord r;
    r.elements = static_cast<std::size_t>(std::stoull(cells[0]));
    r.h = detail::csv_parse(cells[1]);
    r.err_l2 = detail::csv_parse(cells[2]);
    r.err_h1 = detail::csv_parse(cells[4]);
    r.jump_norm = detail::csv_parse(cells[6]);
    r.const_l2 = detail::csv_parse(cells[8]);
    r.outer_iters = std::stoi(cells[10]);
    r.min_val = detail::csv_parse(cells[11]);
    r.max_val = detail::csv_parse(cells[12]);
    r.cons_residual = detail::csv_parse(cells[13]);
    out.push_back(r);
  }
  return out;
}

/// Table in the layout of the convergence tables: errors with their eoc in
/// parentheses and the outer iteration count.
inline void write_study_markdown(std::ostream& out, const std::vector<LevelRecord>& levels, const std::string& title) {
  std::vector<double> l2, h1, jump, cst;
  for (const auto& l : levels) {
    l2.push_back(l.err_l2);
    h1.push_back(l.err_h1);
    jump.push_back(l.jump_norm);
    cst.push_back(l.const_l2);
  }
  const auto e_l2 = eoc_column(l2), e_h1 = eoc_column(h1), e_j = eoc_column(jump), e_c = eoc_column(cst);
  using detail::fixed2;
  using detail::sci3;
  out << "## " << title << "\n\n"
      << "| elements | h | L2 error | eoc | H1 error | eoc | jump norm | eoc | const L2 | eoc | its | min | max | cons. residual |\n"
      << "|---:|---:|---:|:---:|---:|:---:|---:|:---:|---:|:---:|---:|---:|---:|---:|\n";
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const auto& l = levels[i];
    out << "| " << l.elements << " | " << sci3(l.h) << " | " << sci3(l.err_l2) << " | (" << fixed2(e_l2[i]) << ") | "
        << sci3(l.err_h1) << " | (" << fixed2(e_h1[i]) << ") | " << sci3(l.jump_norm) << " | (" << fixed2(e_j[i])
        << ") | " << sci3(l.const_l2) << " | (" << fixed2(e_c[i]) << ") | " << l.outer_iters << " | " << sci3(l.min_val)
        << " | " << sci3(l.max_val) << " | " << sci3(l.cons_residual) << " |\n";
  }
}

inline void write_condition_csv(std::ostream& out, const ConditionReport& report) {
  out << "beta,h,cond_A,rate_A,cond_A1,rate_A1,cond_A0,rate_A0,A_definite\n";
  for (int beta : report.config.betas) {
    const auto rows = report.for_beta(beta);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto growth = [&](double ConditionRow::*f) {
        return i == 0 ? std::numeric_limits<double>::quiet_NaN() : eoc(rows[i].*f, rows[i - 1].*f);
      };
      out << beta << ',' << format_double(rows[i].h) << ',' << format_double(rows[i].cond_A) << ','
          << detail::csv_number(growth(&ConditionRow::cond_A)) << ',' << format_double(rows[i].cond_A1) << ','
          << detail::csv_number(growth(&ConditionRow::cond_A1)) << ',' << format_double(rows[i].cond_A0) << ','
          << detail::csv_number(growth(&ConditionRow::cond_A0)) << ',' << (rows[i].A_definite ? 1 : 0) << '\n';
    }
  }
}

inline void write_condition_markdown(std::ostream& out, const ConditionReport& report) {
  using detail::fixed2;
  using detail::sci3;
  out << "## Condition numbers\n\n";
  for (int beta : report.config.betas) {
    const auto rows = report.for_beta(beta);
    out << "### beta = " << beta << "\n\n| h | kappa(A) | rate | kappa(A1) | rate | kappa(A0) | rate |\n"
        << "|---:|---:|:---:|---:|:---:|---:|:---:|\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto growth = [&](double ConditionRow::*f) {
        return i == 0 ? std::numeric_limits<double>::quiet_NaN() : eoc(rows[i].*f, rows[i - 1].*f);
      };
      out << "| " << sci3(rows[i].h) << " | " << sci3(rows[i].cond_A) << (rows[i].A_definite ? "" : " *") << " | (" << fixed2(growth(&ConditionRow::cond_A))
          << ") | " << sci3(rows[i].cond_A1) << " | (" << fixed2(growth(&ConditionRow::cond_A1)) << ") | "
          << sci3(rows[i].cond_A0) << " | (" << fixed2(growth(&ConditionRow::cond_A0)) << ") |\n";
    }
    out << '\n';
  }
  bool any_indefinite = false;
  for (const auto& row : report.rows) any_indefinite = any_indefinite || !row.A_definite;
  if (any_indefinite) out << "\\* A is indefinite; kappa is max |lambda| / min |lambda|.\n";
}

inline void write_layer_csv(std::ostream& out, const LayerReport& report) {
  out << "method,elements,min_val,max_val,violations,cons_residual,rhs_norm,nonlinear_residual,iters,converged\n";
  for (const LayerRecord* r : {&report.standard, &report.bound_preserving}) {
    out << r->method << ',' << r->elements << ',' << format_double(r->min_val) << ',' << format_double(r->max_val) << ','
        << r->violations << ',' << format_double(r->cons_residual) << ',' << format_double(r->rhs_norm) << ','
        << detail::csv_number(r->nonlinear_residual) << ',' << r->outer_iters << ',' << (r->converged ? 1 : 0) << '\n';
  }
}

inline void write_layer_markdown(std::ostream& out, const LayerReport& report) {
  using detail::sci3;
  out << "## Interior layer\n\n| method | elements | min | max | violations | cons. residual | its |\n"
      << "|---|---:|---:|---:|---:|---:|---:|\n";
  for (const LayerRecord* r : {&report.standard, &report.bound_preserving}) {
    out << "| " << r->method << " | " << r->elements << " | " << sci3(r->min_val) << " | " << sci3(r->max_val) << " | "
        << r->violations << " | " << sci3(r->cons_residual) << " | " << r->outer_iters << " |\n";
  }
}

/// Per element-vertex values "x,y,element,<name>..." ready for external plotting.
inline void write_fields_csv(std::ostream& out, const Mesh& mesh, const std::vector<std::string>& names,
                             const std::vector<const EGFunction*>& fields) {
  out << "x,y,element";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (int t = 0; t < static_cast<int>(mesh.num_elements()); ++t) {
    for (int v : mesh.triangle(t)) {
      const Point p = mesh.vertex(v);
      out << format_double(p.x) << ',' << format_double(p.y) << ',' << t;
      for (const EGFunction* f : fields) out << ',' << format_double(f->linear[v] + f->constant[t]);
      out << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Checks behind `--check`

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace detail {
inline std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}
inline bool within(double v, double lo, double hi) { return v >= lo && v <= hi; }
}  // namespace detail

/// Rate and bound checks for a smooth run: eoc of the two finest levels,
/// outer iteration cap, local conservation and fixed-point consistency.
inline std::vector<CheckResult> check_smooth(const StudyReport& r) {
  using detail::fmt;
  std::vector<CheckResult> out;
  const auto e_l2 = eoc_column(r.column(&LevelRecord::err_l2));
  const auto e_h1 = eoc_column(r.column(&LevelRecord::err_h1));
  const std::size_t n = r.levels.size();
  if (n >= 3) {
    const bool l2 = detail::within(e_l2[n - 1], 1.9, 2.1) && detail::within(e_l2[n - 2], 1.9, 2.1);
    const bool h1 = detail::within(e_h1[n - 1], 0.9, 1.1) && detail::within(e_h1[n - 2], 0.9, 1.1);
    out.push_back({"eoc_l2_finest", l2, "eoc " + fmt(e_l2[n - 2]) + ", " + fmt(e_l2[n - 1]) + " in [1.9, 2.1]"});
    out.push_back({"eoc_h1_finest", h1, "eoc " + fmt(e_h1[n - 2]) + ", " + fmt(e_h1[n - 1]) + " in [0.9, 1.1]"});
  } else {
    out.push_back({"eoc_finest", false, "needs at least 3 levels"});
  }
  int max_outer = 0;
  double cons = 0.0, res = 0.0;
  for (const auto& l : r.levels) {
    max_outer = std::max(max_outer, l.outer_iters);
    cons = std::max(cons, l.cons_residual / l.rhs_norm);
    res = std::max(res, l.nonlinear_residual);
  }
  out.push_back({"outer_iterations", max_outer <= 30, "max outer iterations " + std::to_string(max_outer) + " <= 30"});
  out.push_back({"local_conservation", cons <= 1e-8, "max |r_T| / ||b|| = " + fmt(cons) + " <= 1e-8"});
  const double target = 10.0 * (r.config.spec.tol_outer + 1e-12);
  out.push_back({"fixed_point_residual", res <= target, "max residual " + fmt(res) + " <= " + fmt(target)});
  return out;
}

inline std::vector<CheckResult> check_layer(const LayerReport& r) {
  using detail::fmt;
  const auto& bp = r.bound_preserving;
  const auto& st = r.standard;
  const double target = 10.0 * (r.config.spec.tol_outer + 1e-12);
  return {
      {"bounds_preserved", bp.min_val >= -1e-10 && bp.max_val <= 1.0 + 1e-10,
       "u+ in [" + fmt(bp.min_val) + ", " + fmt(bp.max_val) + "]"},
      {"standard_violates", st.min_val < 0.0, "standard EG min " + fmt(st.min_val) + " < 0"},
      {"local_conservation", st.cons_residual <= 1e-8 * st.rhs_norm && bp.cons_residual <= 1e-8 * bp.rhs_norm,
       "max |r_T| / ||b||: standard " + fmt(st.cons_residual / st.rhs_norm) + ", limited " +
           fmt(bp.cons_residual / bp.rhs_norm)},
      {"fixed_point_residual", bp.nonlinear_residual <= target, "residual " + fmt(bp.nonlinear_residual) + " <= " + fmt(target)},
  };
}

inline std::vector<CheckResult> check_condition(const ConditionReport& r) {
  using detail::fmt;
  std::vector<CheckResult> out;
  const auto& betas = r.config.betas;
  std::vector<double> reference;
  bool identical = true;
  for (int beta : betas) {
    const auto rows = r.for_beta(beta);
    if (reference.empty()) {
      for (const auto& row : rows) reference.push_back(row.cond_A1);
    } else {
      for (std::size_t i = 0; i < rows.size(); ++i) {
        identical = identical && std::abs(rows[i].cond_A1 - reference[i]) <= 1e-9 * reference[i];
      }
    }
    const double a1 = r.growth_rate(beta, &ConditionRow::cond_A1, 3);
    const double a = r.growth_rate(beta, &ConditionRow::cond_A, 2);
    const double a0 = r.growth_rate(beta, &ConditionRow::cond_A0, 3);
    const std::string b = "beta=" + std::to_string(beta);
    out.push_back({"rate_A1 " + b, detail::within(a1, 1.7, 2.1), "rate " + fmt(a1) + " in [1.7, 2.1]"});
    int indefinite = 0;
    for (const auto& row : rows) indefinite += row.A_definite ? 0 : 1;
    out.push_back({"rate_A " + b, detail::within(a, beta + 0.5, beta + 1.3),
                   "rate " + fmt(a) + " in [" + fmt(beta + 0.5) + ", " + fmt(beta + 1.3) + "]" +
                       (indefinite ? "; A indefinite on " + std::to_string(indefinite) + " of " + std::to_string(rows.size()) + " meshes" : "")});
    out.push_back({"rate_A0 " + b, a0 <= 2.2, "rate " + fmt(a0) + " <= 2.2"});
  }
  out.push_back({"A1_independent_of_beta", identical, "kappa(A1) equal across beta to 1e-9 relative"});
  return out;
}

}  // namespace egbp

#endif  // EGBP_STUDY_HPP
