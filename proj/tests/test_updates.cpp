#include "blockqn/updates.hpp"

#include <cmath>

#include "blockqn/metrics.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace blockqn;
using namespace blockqn::test;

namespace {

// Fixed 4×4 instance; reference outputs come from tests/oracle/fixtures.py.
const SymMatrix kA(mat(4, 4, {4, 1, 0, 0, 1, 3, 1, 0, 0, 1, 2, 0.5, 0, 0, 0.5, 1}));
const SymMatrix kG(mat(4, 4, {5, 1.5, 0, 1, 1.5, 4.25, 1.5, -0.5, 0, 1.5, 2.25, 0, 1, -0.5, 0, 3}));
const DirectionBlock kU(mat(4, 2, {1, 0, 0, 1, 1, 1, 0, -1}));
const DirectionBlock kU1(mat(4, 1, {1, 0, 1, 0}));

const Matrix kSrK1 = mat(4, 4, {4.2, 0.7, -0.2, 0.6, 0.7, 3.45, 1.3, -0.9, -0.2, 1.3, 2.2, -0.1, 0.6, -0.9, -0.1, 2.8});
const Matrix kBfgs = mat(4, 4, {4.040088705803386, 0.9942946638326433, -0.040088705803386526, -0.04579404197074266,
                                0.9942946638326433, 3.461908490882649, 1.0057053361673562, 0.46761382705000554,
                                -0.040088705803386526, 1.0057053361673562, 2.0400887058033863, 0.5457940419707428,
                                -0.04579404197074288, 0.46761382705000554, 0.5457940419707428, 1.5134078690207486});
const Matrix kDfp = mat(4, 4, {4.069627851140456, 0.9213685474189679, -0.069627851140456, -0.14825930372148843,
                               0.9213685474189679, 3.801020408163265, 1.0786314525810323, 0.8796518607442977,
                               -0.069627851140456, 1.0786314525810323, 2.069627851140456, 0.6482593037214885,
                               -0.14825930372148843, 0.8796518607442977, 0.6482593037214885, 2.0279111644657863});
const Matrix kBfgsInv = mat(4, 4, {0.27138600538254515, -0.09416250160194793, 0.0462322183775471, 0.020633089837242033,
                                   -0.09416250160194795, 0.3731209259302849, -0.17064734390488215, -0.05659431528602726,
                                   0.0462322183775471, -0.17064734390488215, 0.6206051047870127, -0.1696887905488992,
                                   0.02063308983724207, -0.056594315286027264, -0.1696887905488992, 0.7400677046417694});
const Matrix kDfpInv = mat(4, 4, {0.26761224505761877, -0.08652589909484211, 0.04024314872910196, 0.044233041002010594,
                                  -0.08652589909484212, 0.35286131766420925, -0.15211964678023215, -0.11075949077717152,
                                  0.04024314872910195, -0.15211964678023215, 0.6025560304524186, -0.12369072452156092,
                                  0.044233041002010594, -0.11075949077717151, -0.12369072452156092, 0.5839365331788449});
const Matrix kScaledInv = mat(4, 4, {0.2677828959388272, -0.10859817401933983, 0.068790315967518, 0.0025669348319839564,
                                     -0.10859817401933985, 0.3506704609815014, -0.19953653302723695, 0.010850905031341966,
                                     0.06879031596751797, -0.19953653302723684, 0.680601317609316, -0.3092986910298008,
                                     0.002566934831983979, 0.010850905031341899, -0.3092986910298008, 0.9697125797232223});

Matrix inverse(const SymMatrix& m) { return solve_spd(cholesky(m), Matrix(Matrix::Identity(m.dim(), m.dim()))); }

const SymMatrix kI2 = SymMatrix::identity(2);
const DirectionBlock kE1(mat(2, 1, {1, 0}));

}  // namespace

TEST_CASE("sr_k") {
  SUBCASE("fixed point") { CHECK(max_abs_diff(sr_k(kA, kA, kU).mat(), kA.mat()) == 0.0); }
  SUBCASE("hand example") {
    CHECK(max_abs_diff(sr_k(SymMatrix::diagonal(vec({2, 3})), kI2, kE1).mat(), mat(2, 2, {1, 0, 0, 3})) < 1e-15);
  }
  SUBCASE("reference instance") {
    CHECK(max_abs_diff(sr_k(kG, kA, kU1).mat(), kSrK1) < 1e-12);
    // rank(G − A) = 2, so two generic directions already recover A.
    CHECK(max_abs_diff(sr_k(kG, kA, kU).mat(), kA.mat()) < 1e-12);
  }
  SUBCASE("full block recovers A") {
    Rng rng(31);
    const MatrixInstance inst = random_instance(7, 10.0, 3.0, rng);
    CHECK(max_abs_diff(sr_k(inst.g, inst.a, DirectionBlock(Matrix::Identity(7, 7))).mat(), inst.a.mat()) < 1e-9);
  }
  SUBCASE("interpolation and action form") {
    Rng rng(32);
    for (int i = 0; i < 20; ++i) {
      const MatrixInstance inst = random_instance(8, 20.0, 4.0, rng);
      const DirectionBlock u = gaussian_block(8, 1 + i % 8, rng);
      const SymMatrix gp = sr_k(inst.g, inst.a, u);
      const Matrix& um = u.mat();
      CHECK(max_abs_diff(um.transpose() * gp.mat() * um, um.transpose() * inst.a.mat() * um) < 1e-8);
      CHECK(max_abs_diff(sr_k_action(inst.g, u, inst.a.mat() * um).mat(), gp.mat()) < 1e-12);
    }
  }
  SUBCASE("inverse action") {
    Rng rng(33);
    for (int i = 0; i < 20; ++i) {
      const MatrixInstance inst = random_instance(8, 20.0, 4.0, rng);
      const DirectionBlock u = gaussian_block(8, 1 + i % 7, rng);
      const Matrix au = inst.a.mat() * u.mat();
      const SymMatrix gp = sr_k_action(inst.g, u, au);
      const SymMatrix hp = sr_k_inverse_action(SymMatrix(inverse(inst.g)), inst.g, u, au);
      CHECK(max_abs_diff(hp.mat() * gp.mat(), Matrix::Identity(8, 8)) < 1e-8);
    }
  }
}

TEST_CASE("block_bfgs") {
  SUBCASE("fixed point") { CHECK(max_abs_diff(block_bfgs(kA, kA, kU).mat(), kA.mat()) < 1e-12); }
  SUBCASE("hand example") {
    CHECK(max_abs_diff(block_bfgs(kI2.scaled(2.0), kI2, kE1).mat(), mat(2, 2, {1, 0, 0, 2})) < 1e-15);
  }
  SUBCASE("reference instance") { CHECK(max_abs_diff(block_bfgs(kG, kA, kU).mat(), kBfgs) < 1e-12); }
  SUBCASE("full block recovers A") {
    Rng rng(34);
    const MatrixInstance inst = random_instance(6, 10.0, 3.0, rng);
    CHECK(max_abs_diff(block_bfgs(inst.g, inst.a, DirectionBlock(Matrix::Identity(6, 6))).mat(), inst.a.mat()) < 1e-9);
  }
  SUBCASE("interpolation") {
    Rng rng(35);
    for (int i = 0; i < 20; ++i) {
      const MatrixInstance inst = random_instance(8, 20.0, 4.0, rng);
      const DirectionBlock u = gaussian_block(8, 1 + i % 8, rng);
      CHECK(max_abs_diff(block_bfgs(inst.g, inst.a, u).mat() * u.mat(), inst.a.mat() * u.mat()) < 1e-8);
    }
  }
  SUBCASE("singular block") {
    const DirectionBlock dup(mat(4, 2, {1, 1, 0, 0, 1, 1, 0, 0}));
    CHECK(error_kind_of([&] { block_bfgs(kG, kA, dup); }) == ErrorKind::SingularBlock);
  }
}

TEST_CASE("block_bfgs_inverse") {
  SUBCASE("fixed point") {
    const Matrix ainv = inverse(kA);
    CHECK(max_abs_diff(block_bfgs_inverse(SymMatrix(ainv), kA, kU).mat(), ainv) < 1e-12);
  }
  SUBCASE("hand example") {
    CHECK(max_abs_diff(block_bfgs_inverse(kI2.scaled(0.5), kI2, kE1).mat(), mat(2, 2, {1, 0, 0, 0.5})) < 1e-15);
  }
  SUBCASE("reference instance") {
    CHECK(max_abs_diff(block_bfgs_inverse(SymMatrix(inverse(kG)), kA, kU).mat(), kBfgsInv) < 1e-12);
    const Matrix au = kA.mat() * kU.mat();
    CHECK(max_abs_diff(block_bfgs_inverse_action(SymMatrix(inverse(kG)), kU, au).mat(), kBfgsInv) < 1e-12);
  }
  SUBCASE("mutual inverse on random instances") {
    Rng rng(36);
    for (int i = 0; i < 10; ++i) {
      const SymMatrix a = random_spd(8, rng);
      const SymMatrix g(a.mat() + random_spd(8, rng).mat());
      const DirectionBlock u = gaussian_block(8, 1 + i % 5, rng);
      const Matrix prod = block_bfgs_inverse(SymMatrix(inverse(g)), a, u).mat() * block_bfgs(g, a, u).mat();
      CHECK((prod - Matrix::Identity(8, 8)).norm() < 1e-6);
    }
  }
}

TEST_CASE("block_dfp") {
  SUBCASE("fixed point") { CHECK(max_abs_diff(block_dfp(kA, kA, kU).mat(), kA.mat()) < 1e-12); }
  SUBCASE("hand example") {
    CHECK(max_abs_diff(block_dfp(kI2.scaled(2.0), kI2, kE1).mat(), mat(2, 2, {1, 0, 0, 2})) < 1e-15);
  }
  SUBCASE("reference instance") {
    CHECK(max_abs_diff(block_dfp(kG, kA, kU).mat(), kDfp) < 1e-12);
    const Matrix au = kA.mat() * kU.mat();
    CHECK(max_abs_diff(block_dfp_inverse_action(SymMatrix(inverse(kG)), kU, au).mat(), kDfpInv) < 1e-12);
  }
  SUBCASE("full block recovers A") {
    Rng rng(37);
    const MatrixInstance inst = random_instance(6, 10.0, 3.0, rng);
    CHECK(max_abs_diff(block_dfp(inst.g, inst.a, DirectionBlock(Matrix::Identity(6, 6))).mat(), inst.a.mat()) < 1e-9);
  }
  SUBCASE("interpolation") {
    Rng rng(38);
    for (int i = 0; i < 20; ++i) {
      const MatrixInstance inst = random_instance(8, 20.0, 4.0, rng);
      const DirectionBlock u = gaussian_block(8, 1 + i % 8, rng);
      CHECK(max_abs_diff(block_dfp(inst.g, inst.a, u).mat() * u.mat(), inst.a.mat() * u.mat()) < 1e-8);
    }
  }
}

TEST_CASE("update_l") {
  SUBCASE("fixed point, checked on the product") {
    const Matrix l = cholesky(kA).inverse_factor();
    const Matrix lp = update_l(l, kA, kU);
    CHECK(max_abs_diff(lp.transpose() * lp, inverse(kA)) < 1e-12);
  }
  SUBCASE("hand example") {
    const Matrix l = Matrix::Identity(2, 2) / std::sqrt(2.0);
    const Matrix lp = update_l(l, kI2, kE1);
    CHECK(max_abs_diff(lp.transpose() * lp, mat(2, 2, {1, 0, 0, 0.5})) < 1e-15);
  }
  SUBCASE("reference instance") {
    const Matrix l = cholesky(kG).inverse_factor();
    const Matrix lp = update_l(l, kA, kU);
    CHECK(max_abs_diff(lp.transpose() * lp, kScaledInv) < 1e-12);
  }
  SUBCASE("random 10x10, k=3") {
    Rng rng(39);
    for (int i = 0; i < 10; ++i) {
      const MatrixInstance inst = random_instance(10, 50.0, 4.0, rng);
      const Matrix l = cholesky(inst.g).inverse_factor();
      const DirectionBlock u = gaussian_block(10, 3, rng);
      const Matrix lp = update_l(l, inst.a, u);
      const Matrix gp_inv = inverse(block_bfgs(inst.g, inst.a, scaled_directions(l, u)));
      CHECK((lp.transpose() * lp - gp_inv).norm() / gp_inv.norm() < 1e-6);
    }
  }
}

TEST_CASE("correct and correct_factor") {
  const SymMatrix g = kG;
  CHECK(correct(g, 0.0, 0.7).mat() == g.mat());
  CHECK(correct(g, 2.0, 0.0).mat() == g.mat());
  CHECK(max_abs_diff(correct(kI2, 1.0, 0.5).mat(), 1.5 * Matrix::Identity(2, 2)) == 0.0);

  const Matrix l = cholesky(g).inverse_factor();
  CHECK(correct_factor(l, 0.0, 0.3) == l);
  CHECK(max_abs_diff(correct_factor(Matrix::Identity(2, 2), 3.0, 1.0), 0.5 * Matrix::Identity(2, 2)) == 0.0);

  const Matrix lc = correct_factor(l, 1.3, 0.4);
  CHECK(max_abs_diff(lc.transpose() * lc, inverse(correct(g, 1.3, 0.4))) < 1e-12);
}

TEST_CASE("pick_directions") {
  Rng rng(40);
  const Strategy greedy2{StrategyKind::Greedy, 2};
  CHECK(pick_directions(greedy2, vec({3, 1, 2}), 3, rng).indices() == std::vector<Eigen::Index>{0, 2});

  Rng r1(41), r2(41);
  const Strategy rand1{StrategyKind::Randomized, 1};
  CHECK(pick_directions(rand1, std::nullopt, 5, r1).mat() == pick_directions(rand1, std::nullopt, 5, r2).mat());

  const DirectionBlock all = pick_directions({StrategyKind::Greedy, 4}, vec({0.5, 2, -1, 3}), 4, rng);
  CHECK(all.indices() == std::vector<Eigen::Index>{3, 1, 0, 2});

  CHECK(pick_directions({StrategyKind::Greedy, 2}, vec({0, -1, 0}), 3, rng).indices() ==
        std::vector<Eigen::Index>{0, 1});
  CHECK(error_kind_of([&] { pick_directions(greedy2, std::nullopt, 3, rng); }) == ErrorKind::MissingResidualDiag);
  CHECK(error_kind_of([&] { pick_directions({StrategyKind::Randomized, 4}, std::nullopt, 3, rng); }) ==
        ErrorKind::DimensionMismatch);
}

TEST_CASE("tau") {
  CHECK(tau(kA, kA) == 0.0);
  const SymMatrix g = SymMatrix::diagonal(vec({2, 3}));
  CHECK(tau(g, kI2) == 3.0);
  CHECK(tau(sr_k(g, kI2, kE1), kI2) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(tau(kG, kA) == doctest::Approx(4.5).epsilon(1e-15));
  CHECK(error_kind_of([&] { tau(kG, kI2); }) == ErrorKind::DimensionMismatch);
}

TEST_CASE("sigma") {
  CHECK(sigma(kA, kA) == 0.0);
  CHECK(sigma(kI2.scaled(4.0), kI2.scaled(2.0)) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(sigma(kG, kA) == doctest::Approx(3.1803278688524594).epsilon(1e-13));
  CHECK(error_kind_of([&] { sigma(kI2, SymMatrix::diagonal(vec({1, -1}))); }) == ErrorKind::NotPositiveDefinite);

  Rng rng(42);
  for (int i = 0; i < 50; ++i) {
    const double eta = i % 2 == 0 ? 1.5 : 4.0;
    const MatrixInstance inst = random_instance(10, 30.0, eta, rng);
    const double tight = loewner_bounds(inst.g, inst.a).max;
    CHECK(tight <= eta + 1e-9);
    CHECK(sigma(inst.g, inst.a) <= 10.0 * (tight - 1.0) + 1e-9);
  }
}

TEST_CASE("sandwich preservation for every operator") {
  Rng rng(43);
  for (int i = 0; i < 100; ++i) {
    const double eta = i % 2 == 0 ? 1.5 : 4.0;
    const MatrixInstance inst = random_instance(10, 50.0, eta, rng);
    const DirectionBlock u = gaussian_block(10, 1 + i % 10, rng);
    const Matrix l = cholesky(inst.g).inverse_factor();
    for (const SymMatrix& gp : {sr_k(inst.g, inst.a, u), block_bfgs(inst.g, inst.a, u), block_dfp(inst.g, inst.a, u),
                                block_bfgs(inst.g, inst.a, scaled_directions(l, u))}) {
      const LoewnerBounds b = loewner_bounds(gp, inst.a);
      CHECK(b.min >= 1.0 - 1e-8);
      CHECK(b.max <= eta + 1e-8);
    }
  }
}

TEST_CASE("greedy SR-k shrinks tau by at least 1 - k/d") {
  Rng rng(44);
  for (int i = 0; i < 100; ++i) {
    const MatrixInstance inst = random_instance(12, 100.0, 4.0, rng);
    const Eigen::Index k = 1 + i % 12;
    const SymMatrix gp = sr_k(inst.g, inst.a, top_k_diag_basis(inst.g - inst.a, k));
    CHECK(tau(gp, inst.a) <= (1.0 - static_cast<double>(k) / 12.0) * tau(inst.g, inst.a) + 1e-8);
  }
}

TEST_CASE("updates depend on the block only through its range") {
  Rng rng(45);
  for (int i = 0; i < 20; ++i) {
    const MatrixInstance inst = random_instance(9, 30.0, 4.0, rng);
    const Eigen::Index k = 1 + i % 9;
    const DirectionBlock u = gaussian_block(9, k, rng);
    Matrix r = gaussian_block(k, k, rng).mat();
    r.diagonal().array() += 3.0;
    const DirectionBlock ur(u.mat() * r);
    CHECK(max_abs_diff(sr_k(inst.g, inst.a, u).mat(), sr_k(inst.g, inst.a, ur).mat()) < 1e-9);
    CHECK(max_abs_diff(block_bfgs(inst.g, inst.a, u).mat(), block_bfgs(inst.g, inst.a, ur).mat()) < 1e-9);
    CHECK(max_abs_diff(block_dfp(inst.g, inst.a, u).mat(), block_dfp(inst.g, inst.a, ur).mat()) < 1e-9);
    const Matrix l = cholesky(inst.g).inverse_factor();
    const Matrix p1 = update_l(l, inst.a, u), p2 = update_l(l, inst.a, ur);
    CHECK(max_abs_diff(p1.transpose() * p1, p2.transpose() * p2) < 1e-10);
  }
  const DirectionBlock dup(mat(4, 2, {1, 2, 0, 0, 1, 2, 0, 0}));
  CHECK(error_kind_of([&] { block_dfp(kG, kA, dup); }) == ErrorKind::SingularBlock);
}
