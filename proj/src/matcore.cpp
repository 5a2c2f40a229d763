#include "blockqn/matcore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace blockqn {

namespace {

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    std::ostringstream os;
    os << what << " must be square, got " << m.rows() << "x" << m.cols();
    throw Error(ErrorKind::DimensionMismatch, os.str());
  }
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

Matrix symmetrize(const Matrix& m) {
  require_square(m, "symmetrize input");
  return 0.5 * (m + m.transpose());
}

SymMatrix::SymMatrix(const Matrix& m) : m_(symmetrize(m)) {
  if (m_.rows() < 1) throw Error(ErrorKind::DimensionMismatch, "SymMatrix needs dim >= 1");
}

SymMatrix SymMatrix::identity(Eigen::Index d) { return SymMatrix(Matrix::Identity(d, d)); }

SymMatrix SymMatrix::diagonal(const Vector& diag) { return SymMatrix(Matrix(diag.asDiagonal())); }

SymMatrix SymMatrix::scaled(double s) const {
  SymMatrix out;
  out.m_ = s * m_;
  return out;
}

SymMatrix operator+(const SymMatrix& a, const SymMatrix& b) {
  if (a.dim() != b.dim()) throw Error(ErrorKind::DimensionMismatch, "SymMatrix sum");
  SymMatrix out;
  out.m_ = a.m_ + b.m_;
  return out;
}

SymMatrix operator-(const SymMatrix& a, const SymMatrix& b) {
  if (a.dim() != b.dim()) throw Error(ErrorKind::DimensionMismatch, "SymMatrix difference");
  SymMatrix out;
  out.m_ = a.m_ - b.m_;
  return out;
}

DirectionBlock::DirectionBlock(Matrix cols) : cols_(std::move(cols)) {
  if (cols_.cols() < 1 || cols_.cols() > cols_.rows()) {
    std::ostringstream os;
    os << "direction block width " << cols_.cols() << " outside [1, " << cols_.rows() << "]";
    throw Error(ErrorKind::DimensionMismatch, os.str());
  }
}

DirectionBlock DirectionBlock::basis(Eigen::Index d, std::vector<Eigen::Index> indices) {
  const auto k = static_cast<Eigen::Index>(indices.size());
  Matrix cols = Matrix::Zero(d, k);
  for (Eigen::Index j = 0; j < k; ++j) cols(indices[j], j) = 1.0;
  DirectionBlock out(std::move(cols));
  out.indices_ = std::move(indices);
  return out;
}

Matrix SpdFactor::inverse_factor() const {
  return lower_.triangularView<Eigen::Lower>().solve(Matrix::Identity(dim(), dim()));
}

SpdFactor cholesky(const SymMatrix& m) {
  const Eigen::Index d = m.dim();
  const double scale = std::max(1.0, m.mat().diagonal().cwiseAbs().maxCoeff());
  const double pivot_tol = 1e-14 * scale;

  // Plain left-looking factorization so the pivot test sees every pivot.
  Matrix l = Matrix::Zero(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    double pivot = m(j, j) - l.row(j).head(j).squaredNorm();
    if (!(pivot > pivot_tol)) {
      std::ostringstream os;
      os << "pivot " << pivot << " at index " << j;
      throw Error(ErrorKind::NotPositiveDefinite, os.str());
    }
    const double ljj = std::sqrt(pivot);
    l(j, j) = ljj;
    if (j + 1 < d) {
      const Eigen::Index rest = d - j - 1;
      l.col(j).tail(rest) =
          (m.mat().col(j).tail(rest) - l.bottomLeftCorner(rest, j) * l.row(j).head(j).transpose()) / ljj;
    }
  }
  return SpdFactor(std::move(l));
}

Vector solve_spd(const SpdFactor& f, const Vector& rhs) {
  if (rhs.size() != f.dim()) throw Error(ErrorKind::DimensionMismatch, "solve_spd rhs length");
  Vector y = f.lower().triangularView<Eigen::Lower>().solve(rhs);
  return f.lower().transpose().triangularView<Eigen::Upper>().solve(y);
}

Matrix solve_spd(const SpdFactor& f, const Matrix& rhs) {
  if (rhs.rows() != f.dim()) throw Error(ErrorKind::DimensionMismatch, "solve_spd rhs rows");
  Matrix y = f.lower().triangularView<Eigen::Lower>().solve(rhs);
  return f.lower().transpose().triangularView<Eigen::Upper>().solve(y);
}

Matrix pinv_small(const Matrix& m, double tol) {
  require_square(m, "pinv_small input");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(m));
  const Vector& vals = eig.eigenvalues();
  const double cutoff = tol * vals.cwiseAbs().maxCoeff();
  Vector inv = Vector::Zero(vals.size());
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    if (std::abs(vals(i)) > cutoff && vals(i) != 0.0) inv(i) = 1.0 / vals(i);
  }
  const Matrix& q = eig.eigenvectors();
  return symmetrize(q * inv.asDiagonal() * q.transpose());
}

Matrix inv_sqrt_spd(const Matrix& m) {
  require_square(m, "inv_sqrt_spd input");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(m));
  if (!(eig.eigenvalues().minCoeff() > 0.0)) {
    throw Error(ErrorKind::NotPositiveDefinite, "inv_sqrt_spd of a matrix with a non-positive eigenvalue");
  }
  const Matrix& q = eig.eigenvectors();
  return symmetrize(q * eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * q.transpose());
}

LoewnerBounds loewner_bounds(const SymMatrix& g, const SymMatrix& h) {
  if (g.dim() != h.dim()) throw Error(ErrorKind::DimensionMismatch, "loewner_bounds dims");
  const SpdFactor fh = cholesky(h);
  // R⁻¹ g R⁻ᵀ has the same spectrum as h^{-1/2} g h^{-1/2}.
  Matrix tmp = fh.lower().triangularView<Eigen::Lower>().solve(g.mat());
  Matrix w = fh.lower().triangularView<Eigen::Lower>().solve(tmp.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(w), Eigen::EigenvaluesOnly);
  return {eig.eigenvalues().minCoeff(), eig.eigenvalues().maxCoeff()};
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {
  const std::uint64_t a = splitmix64(seed);
  const std::uint64_t b = splitmix64(a ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  engine_.seed(seq);
}

std::uint64_t Rng::mix(std::uint64_t a, std::uint64_t b) { return splitmix64(a * 0x9e3779b97f4a7c15ULL + b); }

DirectionBlock gaussian_block(Eigen::Index d, Eigen::Index k, Rng& rng) {
  if (k < 1 || k > d) throw Error(ErrorKind::DimensionMismatch, "gaussian_block needs 1 <= k <= d");
  Matrix u(d, k);
  // Column-major fill keeps the draw order independent of Eigen internals.
  for (Eigen::Index j = 0; j < k; ++j)
    for (Eigen::Index i = 0; i < d; ++i) u(i, j) = rng.normal();
  return DirectionBlock(std::move(u));
}

DirectionBlock top_k_diag_basis(const Vector& diag, Eigen::Index k) {
  const Eigen::Index d = diag.size();
  if (k < 1 || k > d) throw Error(ErrorKind::DimensionMismatch, "top_k_diag_basis needs 1 <= k <= d");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return diag(a) > diag(b); });
  order.resize(static_cast<std::size_t>(k));
  return DirectionBlock::basis(d, std::move(order));
}

DirectionBlock top_k_diag_basis(const SymMatrix& r, Eigen::Index k) { return top_k_diag_basis(r.diag(), k); }

}  // namespace blockqn
