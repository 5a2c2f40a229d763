#include "blockqn/metrics.hpp"

#include <cmath>

#include "blockqn/updates.hpp"

namespace blockqn {

double eta_diagnostic(const SymMatrix& g, const SymMatrix& h) { return loewner_bounds(g, h).max; }

Matrix random_orthogonal(Eigen::Index d, Rng& rng) {
  Matrix z(d, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < d; ++i) z(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  // Sign fix so Q is Haar distributed rather than biased by the QR convention.
  for (Eigen::Index j = 0; j < d; ++j)
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  return q;
}

MatrixInstance random_instance(Eigen::Index d, double kappa, double eta, Rng& rng, double mu) {
  const Matrix q = random_orthogonal(d, rng);
  Vector spectrum(d);
  const double log_span = std::log(kappa);
  for (Eigen::Index i = 0; i < d; ++i) spectrum(i) = mu * std::exp(log_span * rng.uniform());
  spectrum(0) = mu;
  if (d > 1) spectrum(d - 1) = mu * kappa;
  SymMatrix a(q * spectrum.asDiagonal() * q.transpose());

  Matrix b(d, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < d; ++i) b(i, j) = rng.normal();
  const SymMatrix residual(b * b.transpose());
  const double top = loewner_bounds(residual, a).max;
  const double target = 1.0 + (eta - 1.0) * (1.0 - rng.uniform());  // in (1, eta]
  const double c = (target - 1.0) / top;
  return {a, a + residual.scaled(c)};
}

std::string_view to_string(UpdateKind kind) {
  switch (kind) {
    case UpdateKind::SrKRandomized: return "srk-randomized";
    case UpdateKind::SrKGreedy: return "srk-greedy";
    case UpdateKind::BlockBfgs: return "block-bfgs";
    case UpdateKind::BlockDfp: return "block-dfp";
    case UpdateKind::ScaledBfgs: return "scaled-bfgs";
  }
  return "?";
}

ContractionReport contraction_sweep(UpdateKind kind, Eigen::Index d, Eigen::Index k, double kappa, int n_trials,
                                    std::uint64_t seed) {
  if (n_trials < 1) throw Error(ErrorKind::Config, "contraction_sweep needs at least one trial");
  if (k < 1 || k > d) throw Error(ErrorKind::DimensionMismatch, "contraction_sweep needs 1 <= k <= d");

  ContractionReport rep;
  rep.kind = kind;
  rep.d = d;
  rep.k = k;
  rep.kappa = kappa;
  rep.n_trials = n_trials;
  const double kd = static_cast<double>(k) / static_cast<double>(d);
  const bool kappa_dependent = kind == UpdateKind::BlockBfgs || kind == UpdateKind::BlockDfp;
  rep.theory_bound = 1.0 - (kappa_dependent ? kd / kappa : kd);
  rep.slack = 3.0 / std::sqrt(static_cast<double>(n_trials));

  const Rng base(seed);
  double sum = 0.0;
  for (int i = 0; i < n_trials; ++i) {
    Rng rng = base.split(static_cast<std::uint64_t>(i));
    const MatrixInstance inst = random_instance(d, kappa, 4.0, rng);
    double ratio = 0.0;
    switch (kind) {
      case UpdateKind::SrKRandomized: {
        const SymMatrix gp = sr_k(inst.g, inst.a, gaussian_block(d, k, rng));
        ratio = tau(gp, inst.a) / tau(inst.g, inst.a);
        break;
      }
      case UpdateKind::SrKGreedy: {
        const SymMatrix gp = sr_k(inst.g, inst.a, top_k_diag_basis(inst.g - inst.a, k));
        ratio = tau(gp, inst.a) / tau(inst.g, inst.a);
        break;
      }
      case UpdateKind::BlockBfgs:
      case UpdateKind::BlockDfp: {
        const DirectionBlock u = gaussian_block(d, k, rng);
        const SymMatrix gp =
            kind == UpdateKind::BlockBfgs ? block_bfgs(inst.g, inst.a, u) : block_dfp(inst.g, inst.a, u);
        ratio = sigma(gp, inst.a) / sigma(inst.g, inst.a);
        break;
      }
      case UpdateKind::ScaledBfgs: {
        const Matrix l = cholesky(inst.g).inverse_factor();
        const DirectionBlock u = gaussian_block(d, k, rng);
        const SymMatrix gp = block_bfgs(inst.g, inst.a, scaled_directions(l, u));
        ratio = sigma(gp, inst.a) / sigma(inst.g, inst.a);
        break;
      }
    }
    // Rounding can push a fully annihilated residual a hair below zero.
    ratio = std::max(ratio, 0.0);
    sum += ratio;
    rep.max_ratio = i == 0 ? ratio : std::max(rep.max_ratio, ratio);
  }
  rep.mean_ratio = sum / n_trials;
  return rep;
}

RateEstimate rate_estimate(const std::vector<double>& lambdas) {
  RateEstimate out;
  for (std::size_t i = 0; i + 1 < lambdas.size(); ++i) {
    if (!(lambdas[i] > kLambdaFloor)) break;
    out.ratios.push_back(lambdas[i + 1] / lambdas[i]);
  }
  if (out.ratios.empty()) throw Error(ErrorKind::InsufficientData, "need two local gradient norms above 1e-13");

  double log_sum = 0.0;
  bool hit_zero = false;
  for (double r : out.ratios) {
    if (r <= 0.0) hit_zero = true;
    else log_sum += std::log(r);
  }
  out.per_step_factor = hit_zero ? 0.0 : std::exp(log_sum / static_cast<double>(out.ratios.size()));

  const std::size_t window = std::min<std::size_t>(5, out.ratios.size());
  if (window >= 2) {
    out.superlinear = true;
    for (std::size_t i = out.ratios.size() - window + 1; i < out.ratios.size(); ++i)
      if (!(out.ratios[i] < out.ratios[i - 1])) out.superlinear = false;
  }
  return out;
}

RateEstimate rate_estimate(const std::vector<IterationRecord>& records) {
  std::vector<double> lambdas;
  lambdas.reserve(records.size());
  for (const auto& rec : records) lambdas.push_back(rec.lambda);
  return rate_estimate(lambdas);
}

}  // namespace blockqn
