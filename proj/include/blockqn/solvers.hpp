#pragma once

// Block quasi-Newton iterations: SR-k, randomized block BFGS/DFP, the
// scaled-direction ("faster") block BFGS, and an exact Newton reference.
//
// Every method shares one skeleton per iteration:
//   x₊ = x − G⁻¹∇f(x),  r = ‖x₊ − x‖_x,  G̃ = (1 + M r) G,
// then an estimator update towards ∇²f(x₊) along k directions. The Hessian
// is only touched through hess_mat / hess_diag, except in diagnostics mode.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "blockqn/matcore.hpp"
#include "blockqn/objectives.hpp"
#include "blockqn/updates.hpp"

namespace blockqn {

enum class Method { SrK, BlockBfgs, BlockDfp, FasterBlockBfgs, Newton };
enum class InverseMode { Refactorize, Woodbury };
enum class StopReason { None, Converged, MaxIters };

std::string_view to_string(Method m);
std::string_view to_string(StrategyKind s);
std::string_view to_string(InverseMode m);
std::string_view to_string(StopReason r);
Method parse_method(std::string_view s);
StrategyKind parse_strategy(std::string_view s);
InverseMode parse_inverse_mode(std::string_view s);

struct SolverConfig {
  Method method = Method::SrK;
  /// Only SR-k honours Greedy; the block BFGS/DFP methods are randomized.
  StrategyKind strategy = StrategyKind::Randomized;
  Eigen::Index k = 1;
  /// Overrides the objective's M when set.
  std::optional<double> sc_m;
  /// G₀ = g0_scale·I; defaults to the objective's L.
  std::optional<double> g0_scale;
  int max_iters = 1000;
  double grad_tol = 1e-9;
  std::uint64_t seed = 0;
  InverseMode inverse_mode = InverseMode::Refactorize;
  /// τ, σ, η (and the factor error for the scaled BFGS) against the dense
  /// Hessian at every iteration. Small d only.
  bool record_diagnostics = false;
  /// Abort when λ(x_t) exceeds this multiple of λ(x₀).
  double divergence_factor = 1e3;
};

/// Throws Config when the configuration cannot run on a d-dimensional problem.
void validate(const SolverConfig& config, Eigen::Index d);

/// Short label used in traces, e.g. "G-SR-k", "RB-BFGS", "FRB-BFGS".
std::string method_label(const SolverConfig& config);

/// Current estimator G plus the means to apply G⁻¹.
class HessianEstimator {
 public:
  /// Cholesky of g, recomputed on every replace().
  static HessianEstimator factorized(SymMatrix g);
  /// g together with an explicitly maintained inverse.
  static HessianEstimator with_inverse(SymMatrix g, SymMatrix h);
  /// g together with L, LᵀL = g⁻¹.
  static HessianEstimator with_scaled_factor(SymMatrix g, Matrix l);

  const SymMatrix& g() const { return g_; }
  const std::optional<SymMatrix>& inverse() const { return h_; }
  const std::optional<Matrix>& l_factor() const { return l_; }

  /// G⁻¹·rhs
  Vector solve(const Vector& rhs) const;

 private:
  explicit HessianEstimator(SymMatrix g) : g_(std::move(g)) {}

  SymMatrix g_;
  std::optional<SpdFactor> factor_;
  std::optional<SymMatrix> h_;
  std::optional<Matrix> l_;
};

struct SolverState {
  Vector x;
  HessianEstimator estimator;
  int t = 0;
  Rng rng;
  int factor_resets = 0;
};

/// G₀ = g0_scale·I (and L₀ = g0_scale^{-1/2}·I for the scaled BFGS).
SolverState init_state(const Objective& oracle, const SolverConfig& config, const Vector& x0);

struct IterationRecord {
  int t = 0;
  double lambda = 0.0;
  double grad_norm = 0.0;
  double r_t = 0.0;
  double step_norm = 0.0;
  double elapsed_seconds = 0.0;
  std::optional<double> tau;
  std::optional<double> sigma;
  std::optional<double> eta;
  /// Smallest generalized eigenvalue of (G_t, ∇²f(x_t)).
  std::optional<double> eta_min;
  /// ‖LᵀL − G⁻¹‖_F / ‖G⁻¹‖_F after the update (scaled BFGS only).
  std::optional<double> factor_error;
  StopReason stop = StopReason::None;
};

/// λ(x) = √(∇fᵀ ∇²f(x)⁻¹ ∇f), via the dense Hessian when available and
/// conjugate gradients on hess_mat otherwise.
double lambda_metric(const Objective& oracle, const Vector& x, const Vector& grad);

/// ‖x_new − x_old‖ in the local norm at x_old.
double weighted_step_norm(const Objective& oracle, const Vector& x_old, const Vector& x_new);

IterationRecord step_sr_k(SolverState& state, const Objective& oracle, const SolverConfig& config);
IterationRecord step_block_bfgs_dfp(SolverState& state, const Objective& oracle, const SolverConfig& config);
IterationRecord step_faster_bfgs(SolverState& state, const Objective& oracle, const SolverConfig& config);
IterationRecord step_newton(SolverState& state, const Objective& oracle, const SolverConfig& config);
/// Dispatches on config.method.
IterationRecord step(SolverState& state, const Objective& oracle, const SolverConfig& config);

struct RunResult {
  std::vector<IterationRecord> records;
  Vector x;
  StopReason stop = StopReason::None;
  int factor_resets = 0;

  /// Index of the first record with ‖∇f‖ ≤ tol, if any.
  std::optional<int> iterations_to(double tol) const;
};

/// Iterates until ‖∇f‖ ≤ grad_tol or max_iters steps. The last record is the
/// final point and carries the stop reason.
RunResult run(const Objective& oracle, const SolverConfig& config, const Vector& x0);

/// Plain gradient descent with step 1/L, used to enter the local region.
Vector warm_start(const Objective& oracle, Vector x0, int steps);

}  // namespace blockqn
