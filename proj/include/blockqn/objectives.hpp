#pragma once

#include <Eigen/SparseCore>

#include <vector>

#include "blockqn/matcore.hpp"

namespace blockqn {

using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Default dimension cap for dense Hessians.
inline constexpr Eigen::Index kDefaultHessFullCap = 2000;

/// Smooth strongly convex objective with the accesses the block solvers
/// need. Implementations are immutable after construction.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual Eigen::Index dim() const = 0;
  virtual double value(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;
  /// ∇²f(x)·V for a d×k block V.
  virtual Matrix hess_mat(const Vector& x, const Matrix& v) const = 0;
  virtual Vector hess_diag(const Vector& x) const = 0;
  /// Dense Hessian. Throws DimensionMismatch above hess_full_cap().
  virtual SymMatrix hess_full(const Vector& x) const = 0;

  virtual double mu() const = 0;
  virtual double lip_l() const = 0;
  /// Strong self-concordance constant M used by the correction step.
  virtual double sc_m() const = 0;

  double kappa() const { return lip_l() / mu(); }
  bool has_hess_full() const { return dim() <= hess_full_cap_; }
  Eigen::Index hess_full_cap() const { return hess_full_cap_; }
  void set_hess_full_cap(Eigen::Index cap) { hess_full_cap_ = cap; }

 protected:
  void check_x(const Vector& x) const;
  void check_block(const Matrix& v) const;
  void check_full_cap() const;

 private:
  Eigen::Index hess_full_cap_ = kDefaultHessFullCap;
};

// ---------------------------------------------------------------------------
// Regularized logistic regression
//   f(x) = (1/n) Σ ln(1 + exp(−bᵢ aᵢᵀx)) + (γ/2)‖x‖²

struct LogisticData {
  SparseRows features;        // n×d, compressed rows
  std::vector<double> labels;  // ±1
};

struct LogisticConstants {
  double mu = 0.0;
  double lip_l = 0.0;
};

/// μ = γ and L = λ_max(AᵀA/(4n)) + γ, the top eigenvalue by power iteration.
LogisticConstants logistic_constants(const LogisticData& data, double gamma);

class LogisticObjective final : public Objective {
 public:
  /// Throws Config for γ ≤ 0 or labels outside {−1, +1}.
  LogisticObjective(LogisticData data, double gamma, double sc_m = 1.0);

  Eigen::Index dim() const override { return data_.features.cols(); }
  Eigen::Index samples() const { return data_.features.rows(); }
  double gamma() const { return gamma_; }
  const LogisticData& data() const { return data_; }

  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  Matrix hess_mat(const Vector& x, const Matrix& v) const override;
  Vector hess_diag(const Vector& x) const override;
  SymMatrix hess_full(const Vector& x) const override;

  double mu() const override { return constants_.mu; }
  double lip_l() const override { return constants_.lip_l; }
  double sc_m() const override { return sc_m_; }

 private:
  /// σ'(bᵢaᵢᵀx) per sample, already divided by n.
  Vector curvature_weights(const Vector& x) const;

  LogisticData data_;
  double gamma_;
  double sc_m_;
  LogisticConstants constants_;
};

// ---------------------------------------------------------------------------
// Quadratic ½xᵀHx − bᵀx; constant Hessian so M = 0.

class QuadraticObjective final : public Objective {
 public:
  QuadraticObjective(SymMatrix h, Vector b);

  Eigen::Index dim() const override { return h_.dim(); }
  const SymMatrix& hessian() const { return h_; }
  const Vector& rhs() const { return b_; }
  Vector minimizer() const;

  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  Matrix hess_mat(const Vector& x, const Matrix& v) const override;
  Vector hess_diag(const Vector& x) const override;
  SymMatrix hess_full(const Vector& x) const override;

  double mu() const override { return mu_; }
  double lip_l() const override { return lip_l_; }
  double sc_m() const override { return 0.0; }

 private:
  SymMatrix h_;
  Vector b_;
  double mu_ = 0.0;
  double lip_l_ = 0.0;
};

/// Numerically stable building blocks, exposed for tests.
double sigmoid(double z);
double softplus(double z);

}  // namespace blockqn
