#include "blockqn/solvers.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace blockqn {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::SrK: return "srk";
    case Method::BlockBfgs: return "bfgs";
    case Method::BlockDfp: return "dfp";
    case Method::FasterBlockBfgs: return "faster-bfgs";
    case Method::Newton: return "newton";
  }
  return "?";
}

std::string_view to_string(StrategyKind s) { return s == StrategyKind::Greedy ? "greedy" : "randomized"; }

std::string_view to_string(InverseMode m) { return m == InverseMode::Woodbury ? "woodbury" : "refactorize"; }

std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::None: return "none";
    case StopReason::Converged: return "converged";
    case StopReason::MaxIters: return "max_iters";
  }
  return "?";
}

Method parse_method(std::string_view s) {
  if (s == "srk" || s == "sr-k") return Method::SrK;
  if (s == "bfgs" || s == "block-bfgs") return Method::BlockBfgs;
  if (s == "dfp" || s == "block-dfp") return Method::BlockDfp;
  if (s == "faster-bfgs" || s == "frb-bfgs") return Method::FasterBlockBfgs;
  if (s == "newton") return Method::Newton;
  throw Error(ErrorKind::Config, "unknown method '" + std::string(s) + "'");
}

StrategyKind parse_strategy(std::string_view s) {
  if (s == "randomized" || s == "random") return StrategyKind::Randomized;
  if (s == "greedy") return StrategyKind::Greedy;
  throw Error(ErrorKind::Config, "unknown strategy '" + std::string(s) + "'");
}

InverseMode parse_inverse_mode(std::string_view s) {
  if (s == "refactorize") return InverseMode::Refactorize;
  if (s == "woodbury") return InverseMode::Woodbury;
  throw Error(ErrorKind::Config, "unknown inverse mode '" + std::string(s) + "'");
}

void validate(const SolverConfig& config, Eigen::Index d) {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::Config, msg); };
  if (config.method != Method::Newton && (config.k < 1 || config.k > d)) {
    std::ostringstream os;
    os << "block size k = " << config.k << " outside [1, " << d << "]";
    fail(os.str());
  }
  if (config.max_iters < 1) fail("max_iters must be >= 1");
  if (!(config.grad_tol >= 0.0)) fail("grad_tol must be >= 0");
  if (config.sc_m && !(*config.sc_m >= 0.0)) fail("M must be >= 0");
  if (config.g0_scale && !(*config.g0_scale > 0.0)) fail("g0_scale must be > 0");
  if (config.strategy == StrategyKind::Greedy && config.method != Method::SrK)
    fail("the greedy strategy is only defined for SR-k");
  if (config.inverse_mode == InverseMode::Woodbury &&
      (config.method == Method::FasterBlockBfgs || config.method == Method::Newton))
    fail("woodbury inverse mode applies to srk, bfgs and dfp only");
  if (!(config.divergence_factor > 1.0)) fail("divergence_factor must be > 1");
}

std::string method_label(const SolverConfig& config) {
  switch (config.method) {
    case Method::SrK: return config.strategy == StrategyKind::Greedy ? "G-SR-k" : "R-SR-k";
    case Method::BlockBfgs: return "RB-BFGS";
    case Method::BlockDfp: return "RB-DFP";
    case Method::FasterBlockBfgs: return "FRB-BFGS";
    case Method::Newton: return "Newton";
  }
  return "?";
}

HessianEstimator HessianEstimator::factorized(SymMatrix g) {
  HessianEstimator out(std::move(g));
  out.factor_ = cholesky(out.g_);
  return out;
}

HessianEstimator HessianEstimator::with_inverse(SymMatrix g, SymMatrix h) {
  HessianEstimator out(std::move(g));
  out.h_ = std::move(h);
  return out;
}

HessianEstimator HessianEstimator::with_scaled_factor(SymMatrix g, Matrix l) {
  HessianEstimator out(std::move(g));
  out.l_ = std::move(l);
  return out;
}

Vector HessianEstimator::solve(const Vector& rhs) const {
  if (factor_) return solve_spd(*factor_, rhs);
  if (h_) return h_->mat() * rhs;
  if (l_) return l_->transpose() * (*l_ * rhs);
  return solve_spd(cholesky(g_), rhs);
}

SolverState init_state(const Objective& oracle, const SolverConfig& config, const Vector& x0) {
  const Eigen::Index d = oracle.dim();
  if (x0.size() != d) throw Error(ErrorKind::DimensionMismatch, "x0 length differs from objective dimension");
  if (!x0.allFinite()) throw Error(ErrorKind::NonFinite, "x0 has non-finite entries");
  const double scale = config.g0_scale.value_or(oracle.lip_l());
  SymMatrix g0 = SymMatrix::identity(d).scaled(scale);
  auto make = [&]() {
    switch (config.method) {
      case Method::FasterBlockBfgs:
        return HessianEstimator::with_scaled_factor(g0, Matrix::Identity(d, d) / std::sqrt(scale));
      default:
        if (config.inverse_mode == InverseMode::Woodbury)
          return HessianEstimator::with_inverse(g0, SymMatrix::identity(d).scaled(1.0 / scale));
        return HessianEstimator::factorized(g0);
    }
  };
  return SolverState{x0, make(), 0, Rng(config.seed), 0};
}

double lambda_metric(const Objective& oracle, const Vector& x, const Vector& grad) {
  if (grad.size() != oracle.dim()) throw Error(ErrorKind::DimensionMismatch, "lambda_metric gradient length");
  const double gnorm = grad.norm();
  if (gnorm == 0.0) return 0.0;
  if (oracle.has_hess_full()) {
    const Vector v = solve_spd(cholesky(oracle.hess_full(x)), grad);
    return std::sqrt(std::max(0.0, grad.dot(v)));
  }

  // Conjugate gradients on v ↦ ∇²f(x)v.
  Vector v = Vector::Zero(grad.size());
  Vector res = grad;
  Vector p = res;
  double rr = res.squaredNorm();
  const double target = 1e-8 * gnorm;
  const Eigen::Index max_iter = 10 * grad.size() + 100;
  for (Eigen::Index it = 0; it < max_iter && std::sqrt(rr) > target; ++it) {
    const Vector hp = oracle.hess_mat(x, p);
    const double curv = p.dot(hp);
    if (!(curv > 0.0)) throw Error(ErrorKind::NotPositiveDefinite, "Hessian not positive along a CG direction");
    const double alpha = rr / curv;
    v += alpha * p;
    res -= alpha * hp;
    const double rr_next = res.squaredNorm();
    p = res + (rr_next / rr) * p;
    rr = rr_next;
  }
  if (std::sqrt(rr) > target) throw Error(ErrorKind::NonConvergence, "CG did not reach 1e-8 relative residual");
  return std::sqrt(std::max(0.0, grad.dot(v)));
}

double weighted_step_norm(const Objective& oracle, const Vector& x_old, const Vector& x_new) {
  const Vector delta = x_new - x_old;
  if (delta.isZero(0.0)) return 0.0;
  const Vector hd = oracle.hess_mat(x_old, delta);
  return std::sqrt(std::max(0.0, delta.dot(hd)));
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string at_iteration(int t, const std::string& what) {
  std::ostringstream os;
  os << "iteration " << t << ": " << what;
  return os.str();
}

void require_finite(const Vector& v, int t, const char* what) {
  if (!v.allFinite()) throw Error(ErrorKind::NonFinite, at_iteration(t, std::string(what) + " is not finite"));
}

double m_const(const SolverConfig& config, const Objective& oracle) { return config.sc_m.value_or(oracle.sc_m()); }

// Record fields describing x_t and G_t, filled before the step.
IterationRecord open_record(const SolverState& state, const Objective& oracle, const SolverConfig& config,
                            const Vector& grad) {
  IterationRecord rec;
  rec.t = state.t;
  rec.grad_norm = grad.norm();
  rec.lambda = lambda_metric(oracle, state.x, grad);
  if (config.record_diagnostics && config.method != Method::Newton) {
    const SymMatrix hx = oracle.hess_full(state.x);
    const SymMatrix& g = state.estimator.g();
    rec.tau = tau(g, hx);
    rec.sigma = sigma(g, hx);
    const LoewnerBounds b = loewner_bounds(g, hx);
    rec.eta = b.max;
    rec.eta_min = b.min;
  }
  return rec;
}

struct QuasiNewtonMove {
  Vector x_new;
  double r = 0.0;
};

QuasiNewtonMove move(SolverState& state, const Objective& oracle, const Vector& grad, IterationRecord& rec) {
  QuasiNewtonMove mv;
  mv.x_new = state.x - state.estimator.solve(grad);
  require_finite(mv.x_new, state.t, "new iterate");
  mv.r = weighted_step_norm(oracle, state.x, mv.x_new);
  rec.r_t = mv.r;
  rec.step_norm = (mv.x_new - state.x).norm();
  return mv;
}

// Runs `update(rng)` and retries once with a fresh stream when the sampled
// block turns out singular.
template <typename Update>
void with_resample(const SolverState& state, Update&& update) {
  const Rng iteration_rng = state.rng.split(static_cast<std::uint64_t>(state.t));
  try {
    Rng rng = iteration_rng.split(0);
    update(rng);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::SingularBlock) throw;
    Rng rng = iteration_rng.split(1);
    update(rng);
  }
}

void commit(SolverState& state, const SolverConfig& config, SymMatrix g_new, std::optional<SymMatrix> h_new,
            Vector x_new) {
  if (config.inverse_mode == InverseMode::Woodbury && h_new) {
    if (!h_new->mat().allFinite())
      throw Error(ErrorKind::EstimatorBreakdown, at_iteration(state.t, "inverse estimator not finite"));
    state.estimator = HessianEstimator::with_inverse(std::move(g_new), std::move(*h_new));
  } else {
    try {
      state.estimator = HessianEstimator::factorized(std::move(g_new));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NotPositiveDefinite) throw;
      throw Error(ErrorKind::EstimatorBreakdown, at_iteration(state.t, e.what()));
    }
  }
  state.x = std::move(x_new);
  ++state.t;
}

IterationRecord sr_k_impl(SolverState& state, const Objective& oracle, const SolverConfig& config,
                          const Vector& grad) {
  const auto start = Clock::now();
  IterationRecord rec = open_record(state, oracle, config, grad);
  QuasiNewtonMove mv = move(state, oracle, grad, rec);

  const double mc = m_const(config, oracle);
  const SymMatrix gt = correct(state.estimator.g(), mc, mv.r);
  std::optional<Vector> resid;
  if (config.strategy == StrategyKind::Greedy) resid = gt.diag() - oracle.hess_diag(mv.x_new);

  SymMatrix g_new;
  std::optional<SymMatrix> h_new;
  with_resample(state, [&](Rng& rng) {
    const DirectionBlock u = pick_directions({config.strategy, config.k}, resid, oracle.dim(), rng);
    const Matrix au = oracle.hess_mat(mv.x_new, u.mat());
    g_new = sr_k_action(gt, u, au);
    if (const auto& h = state.estimator.inverse()) {
      h_new = sr_k_inverse_action(h->scaled(1.0 / (1.0 + mc * mv.r)), gt, u, au);
    }
  });
  commit(state, config, std::move(g_new), std::move(h_new), std::move(mv.x_new));
  rec.elapsed_seconds = seconds_since(start);
  return rec;
}

IterationRecord block_impl(SolverState& state, const Objective& oracle, const SolverConfig& config,
                           const Vector& grad) {
  const auto start = Clock::now();
  IterationRecord rec = open_record(state, oracle, config, grad);
  QuasiNewtonMove mv = move(state, oracle, grad, rec);

  const double mc = m_const(config, oracle);
  const SymMatrix gt = correct(state.estimator.g(), mc, mv.r);
  const bool bfgs = config.method == Method::BlockBfgs;

  SymMatrix g_new;
  std::optional<SymMatrix> h_new;
  with_resample(state, [&](Rng& rng) {
    const DirectionBlock u = gaussian_block(oracle.dim(), config.k, rng);
    const Matrix au = oracle.hess_mat(mv.x_new, u.mat());
    g_new = bfgs ? block_bfgs_action(gt, u, au) : block_dfp_action(gt, u, au);
    if (const auto& h = state.estimator.inverse()) {
      const SymMatrix ht = h->scaled(1.0 / (1.0 + mc * mv.r));
      h_new = bfgs ? block_bfgs_inverse_action(ht, u, au) : block_dfp_inverse_action(ht, u, au);
    }
  });
  commit(state, config, std::move(g_new), std::move(h_new), std::move(mv.x_new));
  rec.elapsed_seconds = seconds_since(start);
  return rec;
}

IterationRecord faster_impl(SolverState& state, const Objective& oracle, const SolverConfig& config,
                            const Vector& grad) {
  const auto start = Clock::now();
  if (!state.estimator.l_factor())
    throw Error(ErrorKind::Config, "faster block BFGS needs a state built with a scaled factor");
  IterationRecord rec = open_record(state, oracle, config, grad);
  QuasiNewtonMove mv = move(state, oracle, grad, rec);

  const double mc = m_const(config, oracle);
  const SymMatrix gt = correct(state.estimator.g(), mc, mv.r);
  const Matrix lt = correct_factor(*state.estimator.l_factor(), mc, mv.r);

  SymMatrix g_new;
  Matrix l_new;
  with_resample(state, [&](Rng& rng) {
    const DirectionBlock u = gaussian_block(oracle.dim(), config.k, rng);
    const DirectionBlock s = scaled_directions(lt, u);
    const Matrix as = oracle.hess_mat(mv.x_new, s.mat());
    g_new = block_bfgs_action(gt, s, as);
    l_new = update_l_action(lt, u, as);
  });
  if (!l_new.allFinite()) throw Error(ErrorKind::EstimatorBreakdown, at_iteration(state.t, "factor not finite"));

  if (config.record_diagnostics) {
    const Eigen::Index d = oracle.dim();
    const Matrix llt = l_new.transpose() * l_new;
    const double drift = (llt * g_new.mat() - Matrix::Identity(d, d)).norm();
    if (drift > 1e-3) {
      // Accumulated error: rebuild L from G₊.
      l_new = cholesky(g_new).inverse_factor();
      ++state.factor_resets;
    }
    const Matrix g_inv = solve_spd(cholesky(g_new), Matrix(Matrix::Identity(d, d)));
    rec.factor_error = (l_new.transpose() * l_new - g_inv).norm() / g_inv.norm();
  }
  state.estimator = HessianEstimator::with_scaled_factor(std::move(g_new), std::move(l_new));
  state.x = std::move(mv.x_new);
  ++state.t;
  rec.elapsed_seconds = seconds_since(start);
  return rec;
}

IterationRecord newton_impl(SolverState& state, const Objective& oracle, const SolverConfig& config,
                            const Vector& grad) {
  const auto start = Clock::now();
  IterationRecord rec = open_record(state, oracle, config, grad);
  Vector x_new = state.x - solve_spd(cholesky(oracle.hess_full(state.x)), grad);
  require_finite(x_new, state.t, "new iterate");
  rec.r_t = weighted_step_norm(oracle, state.x, x_new);
  rec.step_norm = (x_new - state.x).norm();
  state.x = std::move(x_new);
  ++state.t;
  rec.elapsed_seconds = seconds_since(start);
  return rec;
}

IterationRecord dispatch(SolverState& state, const Objective& oracle, const SolverConfig& config,
                         const Vector& grad) {
  switch (config.method) {
    case Method::SrK: return sr_k_impl(state, oracle, config, grad);
    case Method::BlockBfgs:
    case Method::BlockDfp: return block_impl(state, oracle, config, grad);
    case Method::FasterBlockBfgs: return faster_impl(state, oracle, config, grad);
    case Method::Newton: return newton_impl(state, oracle, config, grad);
  }
  throw Error(ErrorKind::Config, "unknown method");
}

Vector checked_gradient(const SolverState& state, const Objective& oracle) {
  Vector grad = oracle.gradient(state.x);
  require_finite(grad, state.t, "gradient");
  return grad;
}

}  // namespace

IterationRecord step_sr_k(SolverState& state, const Objective& oracle, const SolverConfig& config) {
  return sr_k_impl(state, oracle, config, checked_gradient(state, oracle));
}

IterationRecord step_block_bfgs_dfp(SolverState& state, const Objective& oracle, const SolverConfig& config) {
  return block_impl(state, oracle, config, checked_gradient(state, oracle));
}

IterationRecord step_faster_bfgs(SolverState& state, const Objective& oracle, const SolverConfig& config) {
  return faster_impl(state, oracle, config, checked_gradient(state, oracle));
}

IterationRecord step_newton(SolverState& state, const Objective& oracle, const SolverConfig& config) {
  return newton_impl(state, oracle, config, checked_gradient(state, oracle));
}

IterationRecord step(SolverState& state, const Objective& oracle, const SolverConfig& config) {
  return dispatch(state, oracle, config, checked_gradient(state, oracle));
}

std::optional<int> RunResult::iterations_to(double tol) const {
  for (const auto& rec : records)
    if (rec.grad_norm <= tol) return rec.t;
  return std::nullopt;
}

RunResult run(const Objective& oracle, const SolverConfig& config, const Vector& x0) {
  validate(config, oracle.dim());
  const auto start = Clock::now();
  SolverState state = init_state(oracle, config, x0);
  RunResult out;
  double lambda0 = -1.0;
  const auto guard = [&](const IterationRecord& rec) {
    if (lambda0 < 0.0) lambda0 = rec.lambda;
    if (rec.lambda > config.divergence_factor * lambda0) {
      throw Error(ErrorKind::Diverged, at_iteration(rec.t, "local gradient norm grew beyond the divergence guard"));
    }
  };

  for (;;) {
    const Vector grad = checked_gradient(state, oracle);
    const bool converged = grad.norm() <= config.grad_tol;
    if (converged || state.t >= config.max_iters) {
      IterationRecord last = open_record(state, oracle, config, grad);
      if (!converged) guard(last);
      last.stop = converged ? StopReason::Converged : StopReason::MaxIters;
      last.elapsed_seconds = seconds_since(start);
      out.records.push_back(last);
      out.stop = last.stop;
      break;
    }
    IterationRecord rec = dispatch(state, oracle, config, grad);
    guard(rec);
    rec.elapsed_seconds = seconds_since(start);
    out.records.push_back(rec);
  }
  out.x = state.x;
  out.factor_resets = state.factor_resets;
  return out;
}

Vector warm_start(const Objective& oracle, Vector x0, int steps) {
  const double step_size = 1.0 / oracle.lip_l();
  for (int i = 0; i < steps; ++i) x0 -= step_size * oracle.gradient(x0);
  return x0;
}

}  // namespace blockqn
