#include "blockqn/updates.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace blockqn {

namespace {

void check_action(const SymMatrix& g, const DirectionBlock& u, const Matrix& au, const char* op) {
  if (u.dim() != g.dim() || au.rows() != g.dim() || au.cols() != u.width()) {
    std::ostringstream os;
    os << op << ": estimator dim " << g.dim() << ", block " << u.dim() << "x" << u.width() << ", A-block "
       << au.rows() << "x" << au.cols();
    throw Error(ErrorKind::DimensionMismatch, os.str());
  }
}

void check_dense(const SymMatrix& g, const SymMatrix& a, const DirectionBlock& u, const char* op) {
  if (g.dim() != a.dim() || u.dim() != g.dim()) {
    std::ostringstream os;
    os << op << ": G is " << g.dim() << ", A is " << a.dim() << ", U has " << u.dim() << " rows";
    throw Error(ErrorKind::DimensionMismatch, os.str());
  }
}

// Inverse of a small SPD block, rejecting it when it is indefinite or worse
// conditioned than kBlockCondLimit.
Matrix block_inverse(const Matrix& m, const char* what) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(m));
  const Vector& vals = eig.eigenvalues();
  const double lo = vals.minCoeff();
  const double hi = vals.maxCoeff();
  if (!(lo > 0.0) || !(hi <= kBlockCondLimit * lo)) {
    std::ostringstream os;
    os << what << " has eigenvalues in [" << lo << ", " << hi << "]";
    throw Error(ErrorKind::SingularBlock, os.str());
  }
  const Matrix& q = eig.eigenvectors();
  return symmetrize(q * vals.cwiseInverse().asDiagonal() * q.transpose());
}

Matrix block_inv_sqrt(const Matrix& m, const char* what) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(m));
  const Vector& vals = eig.eigenvalues();
  const double lo = vals.minCoeff();
  const double hi = vals.maxCoeff();
  if (!(lo > 0.0) || !(hi <= kBlockCondLimit * lo)) {
    std::ostringstream os;
    os << what << " has eigenvalues in [" << lo << ", " << hi << "]";
    throw Error(ErrorKind::SingularBlock, os.str());
  }
  const Matrix& q = eig.eigenvectors();
  return symmetrize(q * vals.cwiseSqrt().cwiseInverse().asDiagonal() * q.transpose());
}

// The BFGS/DFP updates depend on U only through its range, so they are
// evaluated on an orthonormal basis Q = U R⁻¹ (thin QR) with AQ = AU R⁻¹.
// This keeps the rounding error from growing with cond(U)².
struct OrthoBlock {
  Matrix q;
  Matrix aq;
};

OrthoBlock orthonormalize(const Matrix& u, const Matrix& au) {
  const Eigen::Index k = u.cols();
  Eigen::HouseholderQR<Matrix> qr(u);
  const Matrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  const double rmax = r.diagonal().cwiseAbs().maxCoeff();
  if (!(r.diagonal().cwiseAbs().minCoeff() > 1e-14 * rmax)) {
    throw Error(ErrorKind::SingularBlock, "direction block is rank deficient");
  }
  OrthoBlock out;
  out.q = qr.householderQ() * Matrix::Identity(u.rows(), k);
  // Q R = U, with R's diagonal possibly negative; AQ = AU R⁻¹.
  out.aq = r.triangularView<Eigen::Upper>().solve<Eigen::OnTheRight>(au);
  return out;
}

}  // namespace

SymMatrix sr_k(const SymMatrix& g, const SymMatrix& a, const DirectionBlock& u) {
  check_dense(g, a, u, "sr_k");
  if (tau(g, a) <= 1e-12 * a.trace()) return g;
  return sr_k_action(g, u, a.mat() * u.mat());
}

SymMatrix sr_k_action(const SymMatrix& g, const DirectionBlock& u, const Matrix& au) {
  check_action(g, u, au, "sr_k");
  // For G ⪰ A the update is E·P·E with E = (G − A)^{1/2} and P the projector
  // onto E·range(U), so an orthonormal basis of range(U) gives the same G₊.
  const OrthoBlock ob = u.is_basis() ? OrthoBlock{u.mat(), au} : orthonormalize(u.mat(), au);
  const Matrix gu = g.mat() * ob.q;
  const Matrix v = gu - ob.aq;
  const Matrix s = ob.q.transpose() * v;
  // Residual already annihilated along U.
  if (s.trace() <= 1e-12 * (ob.q.transpose() * gu).trace()) return g;
  return SymMatrix(g.mat() - v * pinv_small(s) * v.transpose());
}

SymMatrix sr_k_inverse_action(const SymMatrix& h, const SymMatrix& g, const DirectionBlock& u,
                              const Matrix& au) {
  check_action(g, u, au, "sr_k_inverse");
  if (h.dim() != g.dim()) throw Error(ErrorKind::DimensionMismatch, "sr_k_inverse: h and g dims differ");
  const OrthoBlock ob = u.is_basis() ? OrthoBlock{u.mat(), au} : orthonormalize(u.mat(), au);
  const Matrix gu = g.mat() * ob.q;
  const Matrix v = gu - ob.aq;
  const Matrix s = symmetrize(ob.q.transpose() * v);
  if (s.trace() <= 1e-12 * (ob.q.transpose() * gu).trace()) return h;

  // S† = Q_r Λ_r⁻¹ Q_rᵀ on the retained eigenpairs, so G₊ = G − W Λ_r⁻¹ Wᵀ with
  // W = V Q_r, and Woodbury gives H₊ = H + HW (Λ_r − WᵀHW)⁻¹ WᵀH.
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
  const Vector& vals = eig.eigenvalues();
  const double cutoff = kPinvTol * vals.cwiseAbs().maxCoeff();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < vals.size(); ++i)
    if (std::abs(vals(i)) > cutoff && vals(i) != 0.0) keep.push_back(i);
  if (keep.empty()) return h;
  const auto r = static_cast<Eigen::Index>(keep.size());
  Matrix qr(s.rows(), r);
  Vector lam(r);
  for (Eigen::Index j = 0; j < r; ++j) {
    qr.col(j) = eig.eigenvectors().col(keep[static_cast<std::size_t>(j)]);
    lam(j) = vals(keep[static_cast<std::size_t>(j)]);
  }
  const Matrix w = v * qr;
  const Matrix hw = h.mat() * w;
  Matrix core = -(w.transpose() * hw);
  core.diagonal() += lam;
  const Matrix sol = core.partialPivLu().solve(hw.transpose());
  return SymMatrix(h.mat() + hw * sol);
}

SymMatrix block_bfgs(const SymMatrix& g, const SymMatrix& a, const DirectionBlock& u) {
  check_dense(g, a, u, "block_bfgs");
  return block_bfgs_action(g, u, a.mat() * u.mat());
}

SymMatrix block_bfgs_action(const SymMatrix& g, const DirectionBlock& u, const Matrix& au) {
  check_action(g, u, au, "block_bfgs");
  const auto [q, aq] = orthonormalize(u.mat(), au);
  const Matrix gq = g.mat() * q;
  const Matrix w_g = block_inverse(q.transpose() * gq, "UᵀGU");
  const Matrix w_a = block_inverse(q.transpose() * aq, "UᵀAU");
  return SymMatrix(g.mat() - gq * w_g * gq.transpose() + aq * w_a * aq.transpose());
}

SymMatrix block_bfgs_inverse(const SymMatrix& h, const SymMatrix& a, const DirectionBlock& u) {
  check_dense(h, a, u, "block_bfgs_inverse");
  return block_bfgs_inverse_action(h, u, a.mat() * u.mat());
}

SymMatrix block_bfgs_inverse_action(const SymMatrix& h, const DirectionBlock& u, const Matrix& au) {
  check_action(h, u, au, "block_bfgs_inverse");
  const auto [q, aq] = orthonormalize(u.mat(), au);
  const Matrix w = block_inverse(q.transpose() * aq, "UᵀAU");
  // With T = UW the projected term expands to
  // h − T(h·AU)ᵀ − (h·AU)Tᵀ + T(AUᵀ h AU)Tᵀ.
  const Matrix t = q * w;
  const Matrix haq = h.mat() * aq;
  const Matrix mid = aq.transpose() * haq;
  return SymMatrix(t * q.transpose() + h.mat() - t * haq.transpose() - haq * t.transpose() +
                   t * mid * t.transpose());
}

SymMatrix block_dfp(const SymMatrix& g, const SymMatrix& a, const DirectionBlock& u) {
  check_dense(g, a, u, "block_dfp");
  return block_dfp_action(g, u, a.mat() * u.mat());
}

SymMatrix block_dfp_action(const SymMatrix& g, const DirectionBlock& u, const Matrix& au) {
  check_action(g, u, au, "block_dfp");
  const auto [q, aq] = orthonormalize(u.mat(), au);
  const Matrix w = block_inverse(q.transpose() * aq, "UᵀAU");
  const Matrix s = aq * w;
  const Matrix gq = g.mat() * q;
  const Matrix mid = q.transpose() * gq;
  return SymMatrix(s * aq.transpose() + g.mat() - s * gq.transpose() - gq * s.transpose() +
                   s * mid * s.transpose());
}

SymMatrix block_dfp_inverse_action(const SymMatrix& h, const DirectionBlock& u, const Matrix& au) {
  check_action(h, u, au, "block_dfp_inverse");
  const auto [q, aq] = orthonormalize(u.mat(), au);
  const Matrix w_a = block_inverse(q.transpose() * aq, "UᵀAU");
  const Matrix haq = h.mat() * aq;
  const Matrix w_h = block_inverse(aq.transpose() * haq, "UᵀAHAU");
  return SymMatrix(h.mat() - haq * w_h * haq.transpose() + q * w_a * q.transpose());
}

DirectionBlock scaled_directions(const Matrix& l, const DirectionBlock& u) {
  if (l.rows() != u.dim() || l.cols() != u.dim())
    throw Error(ErrorKind::DimensionMismatch, "scaled_directions: factor and block dims differ");
  return DirectionBlock(l.transpose() * u.mat());
}

Matrix update_l(const Matrix& l, const SymMatrix& a, const DirectionBlock& u) {
  if (a.dim() != l.rows()) throw Error(ErrorKind::DimensionMismatch, "update_l: factor and A dims differ");
  const DirectionBlock s = scaled_directions(l, u);
  return update_l_action(l, u, a.mat() * s.mat());
}

Matrix update_l_action(const Matrix& l, const DirectionBlock& u, const Matrix& a_s) {
  const Eigen::Index d = l.rows();
  if (l.cols() != d || u.dim() != d || a_s.rows() != d || a_s.cols() != u.width())
    throw Error(ErrorKind::DimensionMismatch, "update_l: inconsistent factor, block or A-block");

  // With B = L A Lᵀ and C = UᵀBU:
  //   L₊ = L + (U(UᵀU)^{-1/2} − BU C^{-1/2}) C^{-1/2} UᵀL.
  // The first term reproduces the U(UᵀAU)⁻¹Uᵀ part of the inverse update and
  // the cross terms vanish because (I − U C⁻¹ UᵀB)U = 0.
  // L₊ᵀL₊ only depends on range(U); with U orthonormal, Z = U.
  const auto [um, as] = orthonormalize(u.mat(), a_s);
  const Matrix s = l.transpose() * um;
  const Matrix bu = l * as;
  const Matrix c = s.transpose() * as;
  const Matrix c_isqrt = block_inv_sqrt(c, "UᵀLALᵀU");
  return l + (um - bu * c_isqrt) * c_isqrt * (um.transpose() * l);
}

SymMatrix correct(const SymMatrix& g, double m_const, double r) { return g.scaled(1.0 + m_const * r); }

Matrix correct_factor(const Matrix& l, double m_const, double r) { return l / std::sqrt(1.0 + m_const * r); }

DirectionBlock pick_directions(const Strategy& strategy, const std::optional<Vector>& residual_diag,
                               Eigen::Index d, Rng& rng) {
  if (strategy.k < 1 || strategy.k > d)
    throw Error(ErrorKind::DimensionMismatch, "pick_directions needs 1 <= k <= d");
  if (strategy.kind == StrategyKind::Randomized) return gaussian_block(d, strategy.k, rng);

  if (!residual_diag) throw Error(ErrorKind::MissingResidualDiag, "greedy strategy needs diag(G̃ − A)");
  const Vector& diag = *residual_diag;
  if (diag.size() != d) throw Error(ErrorKind::DimensionMismatch, "residual diagonal length");
  const double tol = 1e-14 * std::max(1.0, diag.cwiseAbs().maxCoeff());
  if (!(diag.maxCoeff() > tol)) {
    std::vector<Eigen::Index> first(static_cast<std::size_t>(strategy.k));
    std::iota(first.begin(), first.end(), Eigen::Index{0});
    return DirectionBlock::basis(d, std::move(first));
  }
  return top_k_diag_basis(diag, strategy.k);
}

double tau(const SymMatrix& g, const SymMatrix& a) {
  if (g.dim() != a.dim()) throw Error(ErrorKind::DimensionMismatch, "tau dims");
  return g.trace() - a.trace();
}

double sigma(const SymMatrix& g, const SymMatrix& a) {
  if (g.dim() != a.dim()) throw Error(ErrorKind::DimensionMismatch, "sigma dims");
  const SpdFactor fa = cholesky(a);
  return solve_spd(fa, Matrix(g.mat() - a.mat())).trace();
}

}  // namespace blockqn
