#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "blockqn/matcore.hpp"
#include "blockqn/solvers.hpp"

namespace blockqn {

/// Tightest η with g ⪯ η·h.
double eta_diagnostic(const SymMatrix& g, const SymMatrix& h);

/// Random test pair with μI ⪯ A ⪯ LI and A ⪯ G ⪯ ηA.
struct MatrixInstance {
  SymMatrix a;
  SymMatrix g;
};

/// A = QΛQᵀ with Q Haar-orthogonal and Λ log-uniform in [mu, mu·kappa]
/// (both endpoints attained); G = A + c·BBᵀ for a Gaussian d×d B, with c
/// drawn so that the tightest η of (G, A) is uniform in (1, eta].
MatrixInstance random_instance(Eigen::Index d, double kappa, double eta, Rng& rng, double mu = 1.0);

/// Haar-distributed orthogonal matrix.
Matrix random_orthogonal(Eigen::Index d, Rng& rng);

enum class UpdateKind {
  SrKRandomized,  // τ, bound 1 − k/d
  SrKGreedy,      // τ, bound 1 − k/d, deterministic
  BlockBfgs,      // σ, bound 1 − k/(dκ)
  BlockDfp,       // σ, bound 1 − k/(dκ)
  ScaledBfgs,     // σ, bound 1 − k/d, directions Lᵀu with LᵀL = G⁻¹
};

std::string_view to_string(UpdateKind kind);

struct ContractionReport {
  UpdateKind kind = UpdateKind::SrKRandomized;
  Eigen::Index d = 0;
  Eigen::Index k = 0;
  double kappa = 1.0;
  int n_trials = 0;
  double mean_ratio = 0.0;
  double max_ratio = 0.0;
  double theory_bound = 0.0;
  double slack = 0.0;

  bool passed() const { return mean_ratio <= theory_bound + slack; }
};

/// Averages the per-trial progress ratio (τ for SR-k, σ otherwise) over
/// n_trials seeded instances (η = 4) and compares with the matching
/// expected-contraction bound, slack 3/√n_trials.
ContractionReport contraction_sweep(UpdateKind kind, Eigen::Index d, Eigen::Index k, double kappa, int n_trials,
                                    std::uint64_t seed);

/// λ values below this are rounding noise and excluded from rate fitting.
inline constexpr double kLambdaFloor = 1e-13;

struct RateEstimate {
  std::vector<double> ratios;  // λ_{t+1}/λ_t
  double per_step_factor = 0.0;  // geometric mean of the ratios
  bool superlinear = false;      // final window strictly decreasing
};

/// Ratios stop at the first λ at or below the floor. Throws InsufficientData
/// when no ratio can be formed.
RateEstimate rate_estimate(const std::vector<IterationRecord>& records);
RateEstimate rate_estimate(const std::vector<double>& lambdas);

}  // namespace blockqn
