#pragma once
// Declarative scenario runner: a line-oriented sectioned config describes a
// problem (operators, kernels, lags, forcing), a transform setup, and an
// ordered pipeline of build/solve/verify steps.  Running a scenario emits
// full-precision CSV artifacts plus a report regenerable from the CSVs alone.

#include <optional>
#include <string>
#include <vector>

#include "voldisc/resolvent.hpp"
#include "voldisc/solver.hpp"

namespace voldisc {

struct PipelineStep {
  std::string command;  // build-family | build-shifted | poissonize | solve |
                        // exp-solve | summability | verify:<identity> |
                        // ap-decompose | report
  std::string arg;      // the <identity> part of verify:<identity>
  long line = 0;        // config line (for error reporting)
};

struct Scenario {
  std::string name = "scenario";
  long dim = 1;
  ProblemSpec<double> spec;
  bool has_spec = false;

  // forcing: f(v) = profile(v) * x with exact-zero extension below lo
  std::string f_kind = "delta";  // delta | explicit
  std::vector<double> f_values;
  Mat<double> x;
  long f_lo = 0;
  std::vector<double> h_period;  // periodic forcing block (ap-decompose)
  std::vector<double> q_values;  // vanishing forcing part (ap-decompose)
  double weight = 0.0;           // exp-solve weight

  double tol_identity = 1e-10;
  double tol_solve = 1e-8;
  long horizon = 120;
  long window = 48;

  // continuous-family source (poissonize)
  std::optional<Mat<double>> ml_matrix;
  double ml_alpha = 1.0;
  std::string ml_flavor = "caputo";  // caputo | rl
  double ml_rate = 0.0;
  std::string sampled_path;  // delimited text: t entry00 entry01 ...

  double p_a = 1.0;
  double p_omega = 1.0;
  std::string p_scheme = "composite";  // laguerre | composite
  int p_nodes = 48;
  double p_target = 1e-10;
  std::optional<double> growth_bound;  // ||reg(t)|| <= bound * e^{rate t}
  std::optional<double> growth_rate;

  std::vector<PipelineStep> pipeline;
  std::string out_dir = "out";
};

struct StepResult {
  long index = 0;
  std::string name;
  double max_residual = 0.0;
  double tol = 0.0;
  double max_tail = 0.0;
  bool is_check = false;  // counts toward the exit code
  bool pass = true;
  std::string note;
};

struct RunOutcome {
  std::vector<StepResult> steps;
  bool error = false;       // a step threw
  bool checks_pass = true;  // all verify-type steps passed
  int exit_code() const { return error ? 2 : (checks_pass ? 0 : 1); }
};

// Parse a scenario file; throws parse_error with file:line context.
Scenario parse_scenario(const std::string& path);

// Execute the pipeline; when write_artifacts is set, CSV outputs and the
// report are written under scenario.out_dir.
RunOutcome run_scenario(const Scenario& scenario, bool write_artifacts);

// Regenerate report.txt in dir from steps.csv / certificates.csv; returns the
// report text (also written to dir/report.txt when write is set).
std::string regenerate_report(const std::string& dir, bool write);

}  // namespace voldisc
