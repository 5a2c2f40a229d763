#pragma once

// Dense symmetric kernels shared by the update operators, objectives and
// solvers. Storage is Eigen; the wrappers below only add the invariants the
// rest of the library relies on (symmetry, lower-triangular factors, block
// widths).

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

#include "blockqn/error.hpp"

namespace blockqn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// (m + mᵀ)/2.
Matrix symmetrize(const Matrix& m);

/// Dense symmetric d×d matrix. Construction symmetrizes its input, so
/// entries(i, j) == entries(j, i) always holds bit-for-bit.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Matrix& m);

  static SymMatrix identity(Eigen::Index d);
  static SymMatrix diagonal(const Vector& diag);

  Eigen::Index dim() const { return m_.rows(); }
  const Matrix& mat() const { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }
  Vector diag() const { return m_.diagonal(); }
  double trace() const { return m_.trace(); }

  SymMatrix scaled(double s) const;

  friend SymMatrix operator+(const SymMatrix& a, const SymMatrix& b);
  friend SymMatrix operator-(const SymMatrix& a, const SymMatrix& b);

 private:
  Matrix m_;
};

/// d×k matrix of probe directions. Greedy blocks remember which basis
/// indices they select so callers can avoid dense products with them.
class DirectionBlock {
 public:
  DirectionBlock() = default;
  explicit DirectionBlock(Matrix cols);
  static DirectionBlock basis(Eigen::Index d, std::vector<Eigen::Index> indices);

  Eigen::Index dim() const { return cols_.rows(); }
  Eigen::Index width() const { return cols_.cols(); }
  const Matrix& mat() const { return cols_; }
  bool is_basis() const { return !indices_.empty(); }
  const std::vector<Eigen::Index>& indices() const { return indices_; }

 private:
  Matrix cols_;
  std::vector<Eigen::Index> indices_;
};

/// Lower-triangular Cholesky factor R with R·Rᵀ = source.
class SpdFactor {
 public:
  explicit SpdFactor(Matrix lower) : lower_(std::move(lower)) {}

  Eigen::Index dim() const { return lower_.rows(); }
  const Matrix& lower() const { return lower_; }
  Matrix reconstruct() const { return lower_ * lower_.transpose(); }
  /// R⁻¹, i.e. a matrix L with LᵀL = source⁻¹.
  Matrix inverse_factor() const;

 private:
  Matrix lower_;
};

SpdFactor cholesky(const SymMatrix& m);
Vector solve_spd(const SpdFactor& f, const Vector& rhs);
Matrix solve_spd(const SpdFactor& f, const Matrix& rhs);

/// Default relative eigenvalue cutoff for pinv_small.
inline constexpr double kPinvTol = 1e-12;

/// Moore-Penrose pseudoinverse of a small symmetric matrix. Eigenvalues with
/// |λ| ≤ tol·max|λ| are treated as zero.
Matrix pinv_small(const Matrix& m, double tol = kPinvTol);

/// Symmetric inverse square root of a symmetric positive definite k×k matrix.
Matrix inv_sqrt_spd(const Matrix& m);

struct LoewnerBounds {
  double min = 0.0;
  double max = 0.0;
};

/// Extreme generalized eigenvalues of (g, h): the spectrum of h^{-1/2} g h^{-1/2}.
LoewnerBounds loewner_bounds(const SymMatrix& g, const SymMatrix& h);

/// Seeded generator. Streams are derived from (seed, stream) so that any
/// sub-sequence (iteration t, Monte-Carlo trial i) is reproducible on its own.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  Rng split(std::uint64_t stream) const { return Rng(seed_, mix(stream_, stream)); }
  std::uint64_t seed() const { return seed_; }

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  std::uint64_t next_u64() { return engine_(); }

 private:
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b);

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// d×k block of i.i.d. standard normals.
DirectionBlock gaussian_block(Eigen::Index d, Eigen::Index k, Rng& rng);

/// Basis vectors for the k largest diagonal entries; ties go to the lowest index.
DirectionBlock top_k_diag_basis(const SymMatrix& r, Eigen::Index k);
DirectionBlock top_k_diag_basis(const Vector& diag, Eigen::Index k);

}  // namespace blockqn
