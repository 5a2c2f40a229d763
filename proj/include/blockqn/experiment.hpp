#pragma once

// Experiment configuration, trace serialization and the verification suite
// behind the command-line tool.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "blockqn/dataset.hpp"
#include "blockqn/solvers.hpp"

namespace blockqn {

enum class ProblemKind { Dataset, Synthetic, Quadratic };

struct ProblemSpec {
  ProblemKind kind = ProblemKind::Synthetic;
  std::string path;  // Dataset
  double gamma = 0.01;  // Dataset, Synthetic
  Eigen::Index n = 500;  // Synthetic
  Eigen::Index d = 50;  // Synthetic, Quadratic
  double kappa = 100.0;  // Quadratic
  std::uint64_t seed = 0;  // Synthetic, Quadratic
  double sc_m = 1.0;  // logistic self-concordance constant
};

struct MethodSpec {
  std::string label;
  SolverConfig config;
};

struct ExperimentSpec {
  ProblemSpec problem;
  std::vector<MethodSpec> methods;
  int warm_start_steps = 0;
  int repetitions = 1;
  std::uint64_t seed = 0;
  std::string output = "trace.csv";
  std::string summary;  // defaults to <output stem>.json
};

/// Parses the INI-style config:
///
///   [problem]      kind = synthetic|dataset|quadratic, n, d, gamma, seed,
///                  kappa, path, m
///   [experiment]   seed, repetitions, warm_start_steps, output, summary
///   [method.NAME]  method, strategy, k, m, g0_scale, max_iters, grad_tol,
///                  inverse_mode, diagnostics
///
/// Method sections run in file order. Throws Config on unknown keys or
/// malformed values.
ExperimentSpec parse_experiment(std::istream& in);
ExperimentSpec load_experiment(const std::string& path);

/// Builds the objective described by spec. Dataset problems may throw the
/// dataset error kinds.
std::unique_ptr<Objective> build_objective(const ProblemSpec& spec);

struct TraceRow {
  std::string method;
  Eigen::Index k = 0;
  std::uint64_t seed = 0;
  int t = 0;
  double lambda = 0.0;
  double grad_norm = 0.0;
  double r_t = 0.0;
  double elapsed_seconds = 0.0;
  std::optional<double> tau;
  std::optional<double> sigma;
  std::optional<double> eta;

  bool operator==(const TraceRow&) const = default;
};

inline constexpr const char* kTraceHeader = "method,k,seed,t,lambda,grad_norm,r_t,elapsed_seconds,tau,sigma,eta";

TraceRow to_trace_row(const std::string& method, Eigen::Index k, std::uint64_t seed, const IterationRecord& rec);
void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows);
std::vector<TraceRow> read_trace_csv(std::istream& in);

struct RunSummary {
  std::string method;
  Eigen::Index k = 0;
  std::uint64_t seed = 0;
  int iterations = 0;
  std::optional<int> iterations_to_tol;
  StopReason stop = StopReason::None;
  double final_grad_norm = 0.0;
  double wall_seconds = 0.0;
  int factor_resets = 0;
};

struct ExperimentResult {
  std::vector<TraceRow> rows;
  std::vector<RunSummary> runs;
};

/// Runs every (method, repetition) pair from x₀ = 0 after the warm start.
/// Repetition r uses solver seed spec.seed + r; nothing else varies.
ExperimentResult run_experiment(const ExperimentSpec& spec);

/// run_experiment plus the CSV trace and summary JSON files.
ExperimentResult run_experiment_to_files(const ExperimentSpec& spec);

std::string summary_json(const ExperimentSpec& spec, const ExperimentResult& result);

struct VerifyCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Update-level property and contraction suites. `trials` scales the
/// Monte-Carlo sample sizes (default 2000).
std::vector<VerifyCheck> run_verify(std::uint64_t seed, int trials = 2000);

}  // namespace blockqn
