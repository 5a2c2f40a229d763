#pragma once

// Hessian-estimator update operators.
//
// Each operator comes in two forms. The dense form takes the target A as a
// SymMatrix and is what the property tests exercise. The *_action form takes
// only the product A·U (d×k), which is all a solver can get cheaply from an
// objective through Hessian-matrix products; the dense form forwards to it.
//
// All outputs are symmetrized.

#include <optional>

#include "blockqn/matcore.hpp"

namespace blockqn {

/// Condition number beyond which a k×k block is treated as singular.
inline constexpr double kBlockCondLimit = 1e12;

// -- SR-k -------------------------------------------------------------------

/// G − (G−A)U (Uᵀ(G−A)U)† Uᵀ(G−A). Returns g unchanged when
/// τ_A(G) ≤ 1e-12·tr(A).
SymMatrix sr_k(const SymMatrix& g, const SymMatrix& a, const DirectionBlock& u);
SymMatrix sr_k_action(const SymMatrix& g, const DirectionBlock& u, const Matrix& au);

/// Inverse of sr_k_action's output given h = g⁻¹, via Woodbury on the
/// nonzero part of the pseudoinverse.
SymMatrix sr_k_inverse_action(const SymMatrix& h, const SymMatrix& g, const DirectionBlock& u,
                              const Matrix& au);

// -- block BFGS / DFP -------------------------------------------------------

/// G − GU(UᵀGU)⁻¹UᵀG + AU(UᵀAU)⁻¹UᵀA. Throws SingularBlock when UᵀGU or
/// UᵀAU is numerically singular.
SymMatrix block_bfgs(const SymMatrix& g, const SymMatrix& a, const DirectionBlock& u);
SymMatrix block_bfgs_action(const SymMatrix& g, const DirectionBlock& u, const Matrix& au);

/// Inverse form of block_bfgs from h = G⁻¹:
/// U(UᵀAU)⁻¹Uᵀ + (I − U(UᵀAU)⁻¹UᵀA) h (I − AU(UᵀAU)⁻¹Uᵀ).
SymMatrix block_bfgs_inverse(const SymMatrix& h, const SymMatrix& a, const DirectionBlock& u);
SymMatrix block_bfgs_inverse_action(const SymMatrix& h, const DirectionBlock& u, const Matrix& au);

/// AU(UᵀAU)⁻¹UᵀA + (I − AU(UᵀAU)⁻¹Uᵀ) G (I − U(UᵀAU)⁻¹UᵀA).
SymMatrix block_dfp(const SymMatrix& g, const SymMatrix& a, const DirectionBlock& u);
SymMatrix block_dfp_action(const SymMatrix& g, const DirectionBlock& u, const Matrix& au);

/// Inverse of block_dfp from h = G⁻¹ (the BFGS formula with the roles of U
/// and AU exchanged): h − h·AU(UᵀAhAU)⁻¹UᵀAh + U(UᵀAU)⁻¹Uᵀ.
SymMatrix block_dfp_inverse_action(const SymMatrix& h, const DirectionBlock& u, const Matrix& au);

// -- factor update for scaled-direction BFGS --------------------------------

/// Given lᵀl = G⁻¹ and a raw block u, returns L₊ with L₊ᵀL₊ = G₊⁻¹ where
/// G₊ = block_bfgs(G, A, lᵀu).
Matrix update_l(const Matrix& l, const SymMatrix& a, const DirectionBlock& u);
/// `a_s` is A·(lᵀu).
Matrix update_l_action(const Matrix& l, const DirectionBlock& u, const Matrix& a_s);

/// The scaled directions lᵀu handed to block BFGS alongside update_l.
DirectionBlock scaled_directions(const Matrix& l, const DirectionBlock& u);

// -- correction and direction choice ---------------------------------------

/// (1 + m·r)·g
SymMatrix correct(const SymMatrix& g, double m_const, double r);
/// l / √(1 + m·r)
Matrix correct_factor(const Matrix& l, double m_const, double r);

enum class StrategyKind { Randomized, Greedy };

struct Strategy {
  StrategyKind kind = StrategyKind::Randomized;
  Eigen::Index k = 1;
};

/// Randomized: Gaussian d×k block. Greedy: basis vectors of the k largest
/// entries of residual_diag = diag(G̃ − A). If no entry is positive the k
/// lowest indices are used.
DirectionBlock pick_directions(const Strategy& strategy, const std::optional<Vector>& residual_diag,
                               Eigen::Index d, Rng& rng);

// -- progress measures ------------------------------------------------------

/// tr(g − a)
double tau(const SymMatrix& g, const SymMatrix& a);
/// tr(a⁻¹(g − a))
double sigma(const SymMatrix& g, const SymMatrix& a);

}  // namespace blockqn
