#include "blockqn/matcore.hpp"

#include <cmath>

#include "doctest.h"
#include "support.hpp"

using namespace blockqn;
using namespace blockqn::test;

TEST_CASE("SymMatrix symmetrizes its input") {
  const SymMatrix s(mat(2, 2, {1, 2, 4, 3}));
  CHECK(s(0, 1) == 3.0);
  CHECK(s(1, 0) == 3.0);
  CHECK(s.trace() == 4.0);
  CHECK((s + s)(0, 1) == 6.0);
  CHECK((s - s).mat().isZero());
  CHECK(error_kind_of([] { SymMatrix(Matrix(2, 3)); }) == ErrorKind::DimensionMismatch);
}

TEST_CASE("DirectionBlock width limits") {
  CHECK(error_kind_of([] { DirectionBlock(Matrix(3, 0)); }) == ErrorKind::DimensionMismatch);
  CHECK(error_kind_of([] { DirectionBlock(Matrix::Ones(2, 3)); }) == ErrorKind::DimensionMismatch);
  const DirectionBlock b = DirectionBlock::basis(4, {2, 0});
  CHECK(b.is_basis());
  CHECK(b.mat()(2, 0) == 1.0);
  CHECK(b.mat()(0, 1) == 1.0);
  CHECK(b.mat().sum() == 2.0);
}

TEST_CASE("cholesky") {
  SUBCASE("identity") {
    CHECK(cholesky(SymMatrix::identity(2)).lower() == Matrix::Identity(2, 2));
  }
  SUBCASE("diagonal") {
    const SpdFactor f = cholesky(SymMatrix::diagonal(vec({4, 9})));
    CHECK(max_abs_diff(f.lower(), mat(2, 2, {2, 0, 0, 3})) == 0.0);
  }
  SUBCASE("random SPD reconstructs") {
    Rng rng(11);
    const SymMatrix m = random_spd(5, rng);
    const SpdFactor f = cholesky(m);
    CHECK(max_abs_diff(f.reconstruct(), m.mat()) < 1e-10);
    CHECK(f.lower().triangularView<Eigen::StrictlyUpper>().toDenseMatrix().isZero());
    const Matrix l = f.inverse_factor();
    CHECK(max_abs_diff(l.transpose() * l * m.mat(), Matrix::Identity(5, 5)) < 1e-10);
  }
  SUBCASE("indefinite and singular inputs") {
    CHECK(error_kind_of([] { cholesky(SymMatrix(mat(2, 2, {1, 2, 2, 1}))); }) == ErrorKind::NotPositiveDefinite);
    CHECK(error_kind_of([] { cholesky(SymMatrix::diagonal(vec({1, 0}))); }) == ErrorKind::NotPositiveDefinite);
  }
}

TEST_CASE("solve_spd") {
  CHECK(solve_spd(cholesky(SymMatrix::identity(2)), vec({3, 4})) == vec({3, 4}));
  const Vector x = solve_spd(cholesky(SymMatrix::diagonal(vec({2, 4}))), vec({2, 4}));
  CHECK(max_abs_diff(x, vec({1, 1})) < 1e-15);

  Rng rng(12);
  const SymMatrix m = random_spd(6, rng);
  Vector rhs(6);
  for (Eigen::Index i = 0; i < 6; ++i) rhs(i) = rng.normal();
  CHECK((m.mat() * solve_spd(cholesky(m), rhs) - rhs).norm() < 1e-8);

  CHECK(error_kind_of([&] { solve_spd(cholesky(m), vec({1, 2})); }) == ErrorKind::DimensionMismatch);
}

TEST_CASE("pinv_small") {
  CHECK(pinv_small(Matrix::Zero(2, 2)).isZero());
  CHECK(max_abs_diff(pinv_small(mat(2, 2, {2, 0, 0, 0})), mat(2, 2, {0.5, 0, 0, 0})) < 1e-15);

  Rng rng(13);
  Matrix b(4, 2);
  for (Eigen::Index j = 0; j < 2; ++j)
    for (Eigen::Index i = 0; i < 4; ++i) b(i, j) = rng.normal();
  const Matrix m = b * mat(2, 2, {3, 0, 0, -1}) * b.transpose();  // symmetric, rank 2, indefinite
  const Matrix p = pinv_small(m);
  CHECK(max_abs_diff(m * p * m, m) < 1e-8);
  CHECK(max_abs_diff(p * m * p, p) < 1e-8);
  CHECK(max_abs_diff((m * p).transpose(), m * p) < 1e-8);
}

TEST_CASE("inv_sqrt_spd") {
  const Matrix s = inv_sqrt_spd(mat(2, 2, {4, 0, 0, 9}));
  CHECK(max_abs_diff(s, mat(2, 2, {0.5, 0, 0, 1.0 / 3.0})) < 1e-15);
  CHECK(error_kind_of([] { inv_sqrt_spd(mat(2, 2, {1, 0, 0, -1})); }) == ErrorKind::NotPositiveDefinite);
}

TEST_CASE("loewner_bounds") {
  LoewnerBounds b = loewner_bounds(SymMatrix::identity(3).scaled(2.0), SymMatrix::identity(3));
  CHECK(b.min == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(b.max == doctest::Approx(2.0).epsilon(1e-14));
  b = loewner_bounds(SymMatrix::diagonal(vec({1, 3})), SymMatrix::identity(2));
  CHECK(b.min == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(b.max == doctest::Approx(3.0).epsilon(1e-14));

  Rng rng(14);
  for (int i = 0; i < 20; ++i) {
    const SymMatrix a = random_spd(6, rng);
    Matrix c(6, 2);
    for (Eigen::Index j = 0; j < 2; ++j)
      for (Eigen::Index r = 0; r < 6; ++r) c(r, j) = rng.normal();
    const SymMatrix g(a.mat() + c * c.transpose());
    CHECK(loewner_bounds(g, a).min >= 1.0 - 1e-10);
  }
}

TEST_CASE("Rng streams are reproducible") {
  Rng a(3, 1), b(3, 1), c(3, 2);
  const double x = a.normal();
  CHECK(x == b.normal());
  CHECK(x != c.normal());
  const Rng base(99);
  Rng s1 = base.split(7), s2 = base.split(7), s3 = base.split(8);
  const auto v = s1.next_u64();
  CHECK(v == s2.next_u64());
  CHECK(v != s3.next_u64());
}

TEST_CASE("gaussian_block") {
  Rng r1(5), r2(5);
  CHECK(gaussian_block(3, 1, r1).mat() == gaussian_block(3, 1, r2).mat());
  CHECK(error_kind_of([&] { gaussian_block(3, 4, r1); }) == ErrorKind::DimensionMismatch);
}

namespace {

// Monte-Carlo mean of U(UᵀU)⁻¹Uᵀ over Gaussian blocks.
Matrix mean_projector(Eigen::Index d, Eigen::Index k, int samples, std::uint64_t seed) {
  Rng rng(seed);
  Matrix acc = Matrix::Zero(d, d);
  for (int s = 0; s < samples; ++s) {
    const Matrix u = gaussian_block(d, k, rng).mat();
    const Matrix q = u.householderQr().householderQ() * Matrix::Identity(d, k);
    acc.selfadjointView<Eigen::Lower>().rankUpdate(q);
  }
  acc = acc.selfadjointView<Eigen::Lower>();
  return acc / samples;
}

}  // namespace

TEST_CASE("random projector has mean (k/d) I") {
  SUBCASE("d=200, k=1, 1e5 samples") {
    const Matrix m = mean_projector(200, 1, 100000, 21);
    CHECK(max_abs_diff(m, Matrix::Identity(200, 200) / 200.0) <= 0.02);
  }
  SUBCASE("d=50, k=10, 1e4 samples") {
    const Matrix m = mean_projector(50, 10, 10000, 22);
    CHECK(max_abs_diff(m, Matrix::Identity(50, 50) * (10.0 / 50.0)) <= 0.02);
  }
}

TEST_CASE("top_k_diag_basis") {
  const SymMatrix r = SymMatrix::diagonal(vec({3, 1, 2}));
  CHECK(top_k_diag_basis(r, 1).indices() == std::vector<Eigen::Index>{0});
  CHECK(top_k_diag_basis(r, 2).indices() == std::vector<Eigen::Index>{0, 2});
  CHECK(top_k_diag_basis(SymMatrix::diagonal(vec({2, 2, 1})), 1).indices() == std::vector<Eigen::Index>{0});
  CHECK(error_kind_of([&] { top_k_diag_basis(r, 0); }) == ErrorKind::DimensionMismatch);

  // Selected diagonal mass is at least the k/d share of the trace.
  Rng rng(23);
  for (int i = 0; i < 50; ++i) {
    const SymMatrix m = random_spd(9, rng);
    const Eigen::Index k = 1 + i % 9;
    const DirectionBlock top = top_k_diag_basis(m, k);
    double picked = 0.0;
    for (Eigen::Index j : top.indices()) picked += m(j, j);
    CHECK(picked >= static_cast<double>(k) / 9.0 * m.trace() - 1e-12);
  }
}
