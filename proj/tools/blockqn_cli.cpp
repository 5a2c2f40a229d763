// blockqn: block quasi-Newton solver, benchmark and verification tool.
//
//   blockqn solve   [--config f | problem/method flags]
//   blockqn bench   --config f [--seed s] [--output trace.csv]
//   blockqn verify  [--seed s] [--trials n]
//   blockqn inspect <dataset> [--gamma g]
//
// Exit codes: 0 ok, 2 config error, 3 dataset error, 4 solver failure,
// 5 verification failure.

#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "blockqn/dataset.hpp"
#include "blockqn/experiment.hpp"
#include "blockqn/metrics.hpp"

using namespace blockqn;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDataset = 3;
constexpr int kExitSolver = 4;
constexpr int kExitVerify = 5;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::DimensionMismatch: return kExitConfig;
    case ErrorKind::ParseError:
    case ErrorKind::EmptyDataset:
    case ErrorKind::Io: return kExitDataset;
    default: return kExitSolver;
  }
}

struct SolveOptions {
  std::string config;
  std::string data;
  Eigen::Index synth_n = 500;
  Eigen::Index synth_d = 50;
  double gamma = 0.01;
  std::uint64_t problem_seed = 0;
  std::string method = "srk";
  std::string strategy = "randomized";
  Eigen::Index k = 1;
  double m = 1.0;
  double g0_scale = 0.0;
  int max_iters = 1000;
  double grad_tol = 1e-9;
  std::string inverse_mode = "refactorize";
  bool diagnostics = false;
  int warm_start = 0;
};

ExperimentSpec spec_from_flags(const SolveOptions& o) {
  ExperimentSpec spec;
  if (!o.data.empty()) {
    spec.problem.kind = ProblemKind::Dataset;
    spec.problem.path = o.data;
  } else {
    spec.problem.kind = ProblemKind::Synthetic;
    spec.problem.n = o.synth_n;
    spec.problem.d = o.synth_d;
    spec.problem.seed = o.problem_seed;
  }
  spec.problem.gamma = o.gamma;
  spec.problem.sc_m = o.m;
  MethodSpec m;
  m.config.method = parse_method(o.method);
  m.config.strategy = parse_strategy(o.strategy);
  m.config.k = o.k;
  m.config.sc_m = o.m;
  if (o.g0_scale > 0.0) m.config.g0_scale = o.g0_scale;
  m.config.max_iters = o.max_iters;
  m.config.grad_tol = o.grad_tol;
  m.config.inverse_mode = parse_inverse_mode(o.inverse_mode);
  m.config.record_diagnostics = o.diagnostics;
  m.label = method_label(m.config);
  spec.methods.push_back(m);
  spec.warm_start_steps = o.warm_start;
  return spec;
}

void print_runs(const ExperimentResult& res) {
  for (const auto& r : res.runs) {
    std::printf("%-12s k=%-4lld seed=%-6llu iters=%-5d to_tol=%-6s stop=%-10s |grad|=%.3e  %.3fs\n",
                r.method.c_str(), static_cast<long long>(r.k), static_cast<unsigned long long>(r.seed), r.iterations,
                r.iterations_to_tol ? std::to_string(*r.iterations_to_tol).c_str() : "-",
                std::string(to_string(r.stop)).c_str(), r.final_grad_norm, r.wall_seconds);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Block quasi-Newton methods (SR-k, block BFGS/DFP) for strongly convex minimization"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress progress output");

  SolveOptions so;
  std::uint64_t seed = 0;
  std::string output;
  auto* solve = app.add_subcommand("solve", "Run a single solver");
  solve->add_option("--config", so.config, "Experiment config; runs its first method once");
  solve->add_option("--data", so.data, "Dataset in sparse classification text format");
  solve->add_option("--n", so.synth_n, "Synthetic problem samples");
  solve->add_option("--d", so.synth_d, "Synthetic problem dimension");
  solve->add_option("--problem-seed", so.problem_seed, "Synthetic problem seed");
  solve->add_option("--gamma", so.gamma, "L2 regularization");
  solve->add_option("--method", so.method, "srk | bfgs | dfp | faster-bfgs | newton");
  solve->add_option("--strategy", so.strategy, "randomized | greedy (srk only)");
  solve->add_option("--k", so.k, "Block size");
  solve->add_option("--m", so.m, "Self-concordance constant M");
  solve->add_option("--g0", so.g0_scale, "Initial estimator scale (default: L)");
  solve->add_option("--max-iters", so.max_iters, "Iteration cap");
  solve->add_option("--tol", so.grad_tol, "Gradient-norm tolerance");
  solve->add_option("--inverse-mode", so.inverse_mode, "refactorize | woodbury");
  solve->add_flag("--diagnostics", so.diagnostics, "Record tau/sigma/eta against the dense Hessian");
  solve->add_option("--warm-start", so.warm_start, "Gradient-descent steps before solving");
  solve->add_option("--seed", seed, "Solver seed");
  solve->add_option("--output", output, "Trace CSV path");

  std::string bench_config;
  std::optional<std::uint64_t> bench_seed;
  auto* bench = app.add_subcommand("bench", "Run every method and repetition of an experiment config");
  bench->add_option("--config", bench_config, "Experiment config")->required();
  bench->add_option("--seed", bench_seed, "Override the experiment seed");
  bench->add_option("--output", output, "Override the trace CSV path");

  std::uint64_t verify_seed = 0;
  int verify_trials = 2000;
  auto* verify = app.add_subcommand("verify", "Run the update-level contraction and property suites");
  verify->add_option("--seed", verify_seed, "Base seed");
  verify->add_option("--trials", verify_trials, "Monte-Carlo trials per sweep")->check(CLI::Range(100, 1000000));

  std::string inspect_path;
  double inspect_gamma = 0.01;
  auto* inspect = app.add_subcommand("inspect", "Print dataset statistics");
  inspect->add_option("dataset", inspect_path, "Dataset path")->required();
  inspect->add_option("--gamma", inspect_gamma, "Regularization used for the reported constants");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*solve) {
      ExperimentSpec spec;
      if (!so.config.empty()) {
        spec = load_experiment(so.config);
        spec.methods.resize(1);
        spec.repetitions = 1;
      } else {
        spec = spec_from_flags(so);
      }
      spec.seed = seed;
      spec.output = output.empty() ? "solve.csv" : output;
      const ExperimentResult res = run_experiment_to_files(spec);
      if (!quiet) {
        for (const auto& r : res.rows)
          std::printf("t=%-4d lambda=%.6e |grad|=%.6e r=%.3e\n", r.t, r.lambda, r.grad_norm, r.r_t);
        print_runs(res);
      }
      return 0;
    }
    if (*bench) {
      ExperimentSpec spec = load_experiment(bench_config);
      if (bench_seed) spec.seed = *bench_seed;
      if (!output.empty()) {
        spec.output = output;
        spec.summary.clear();
      }
      const ExperimentResult res = run_experiment_to_files(spec);
      if (!quiet) print_runs(res);
      return 0;
    }
    if (*verify) {
      const auto checks = run_verify(verify_seed, verify_trials);
      bool all = true;
      for (const auto& c : checks) {
        all = all && c.passed;
        if (!quiet || !c.passed)
          std::printf("[%s] %s: %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
      }
      return all ? 0 : kExitVerify;
    }
    if (*inspect) {
      const LogisticData data = load_dataset(inspect_path);
      const DatasetStats st = dataset_stats(data);
      const LogisticConstants c = logistic_constants(data, inspect_gamma);
      std::printf("samples   %lld\nfeatures  %lld\nnonzeros  %lld\npositive  %lld\nnegative  %lld\n",
                  static_cast<long long>(st.n), static_cast<long long>(st.d), static_cast<long long>(st.nnz),
                  static_cast<long long>(st.positives), static_cast<long long>(st.n - st.positives));
      std::printf("mu        %.6g\nL         %.6g\nkappa     %.6g\n", c.mu, c.lip_l, c.lip_l / c.mu);
      return 0;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "blockqn: %s\n", e.what());
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "blockqn: %s\n", e.what());
    return kExitSolver;
  }
  return 0;
}
