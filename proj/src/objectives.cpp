#include "blockqn/objectives.hpp"

#include <cmath>
#include <sstream>

namespace blockqn {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double z) {
  // ln(1 + e^z)
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

void Objective::check_x(const Vector& x) const {
  if (x.size() != dim()) {
    std::ostringstream os;
    os << "point has length " << x.size() << ", objective dimension is " << dim();
    throw Error(ErrorKind::DimensionMismatch, os.str());
  }
}

void Objective::check_block(const Matrix& v) const {
  if (v.rows() != dim()) {
    std::ostringstream os;
    os << "block has " << v.rows() << " rows, objective dimension is " << dim();
    throw Error(ErrorKind::DimensionMismatch, os.str());
  }
}

void Objective::check_full_cap() const {
  if (!has_hess_full()) {
    std::ostringstream os;
    os << "dense Hessian disabled above d = " << hess_full_cap_ << " (d = " << dim() << ")";
    throw Error(ErrorKind::DimensionMismatch, os.str());
  }
}

LogisticConstants logistic_constants(const LogisticData& data, double gamma) {
  const SparseRows& a = data.features;
  const Eigen::Index n = a.rows();
  const Eigen::Index d = a.cols();
  LogisticConstants out{gamma, gamma};
  if (n == 0 || a.nonZeros() == 0) return out;

  // Power iteration on AᵀA/(4n) from a fixed pseudo-random start.
  Rng rng(0x6c6970ULL);
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = 1.0 + 0.1 * rng.normal();
  v.normalize();
  const double scale = 0.25 / static_cast<double>(n);
  double rayleigh = 0.0;
  for (int it = 0; it < 10000; ++it) {
    Vector w = scale * (a.transpose() * (a * v));
    const double next = v.dot(w);
    const double norm = w.norm();
    if (norm == 0.0) break;
    v = w / norm;
    const bool done = it > 0 && std::abs(next - rayleigh) <= 1e-10 * std::abs(next);
    rayleigh = next;
    if (done) break;
  }
  out.lip_l = rayleigh + gamma;
  return out;
}

LogisticObjective::LogisticObjective(LogisticData data, double gamma, double sc_m)
    : data_(std::move(data)), gamma_(gamma), sc_m_(sc_m) {
  if (!(gamma_ > 0.0)) throw Error(ErrorKind::Config, "logistic regularization gamma must be > 0");
  if (!(sc_m_ >= 0.0)) throw Error(ErrorKind::Config, "self-concordance constant M must be >= 0");
  if (static_cast<Eigen::Index>(data_.labels.size()) != data_.features.rows())
    throw Error(ErrorKind::DimensionMismatch, "label count differs from feature rows");
  for (double b : data_.labels)
    if (b != 1.0 && b != -1.0) throw Error(ErrorKind::Config, "logistic labels must be +1 or -1");
  data_.features.makeCompressed();
  constants_ = logistic_constants(data_, gamma_);
}

double LogisticObjective::value(const Vector& x) const {
  check_x(x);
  double loss = 0.0;
  const Eigen::Index n = samples();
  if (n > 0) {
    const Vector z = data_.features * x;
    for (Eigen::Index i = 0; i < n; ++i) loss += softplus(-data_.labels[static_cast<std::size_t>(i)] * z(i));
    loss /= static_cast<double>(n);
  }
  return loss + 0.5 * gamma_ * x.squaredNorm();
}

Vector LogisticObjective::gradient(const Vector& x) const {
  check_x(x);
  Vector g = gamma_ * x;
  const Eigen::Index n = samples();
  if (n == 0) return g;
  const Vector z = data_.features * x;
  Vector coef(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double b = data_.labels[static_cast<std::size_t>(i)];
    coef(i) = -b * sigmoid(-b * z(i)) / static_cast<double>(n);
  }
  g.noalias() += data_.features.transpose() * coef;
  return g;
}

Vector LogisticObjective::curvature_weights(const Vector& x) const {
  const Eigen::Index n = samples();
  const Vector z = data_.features * x;
  Vector w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    // σ' is even, so the label sign drops out.
    const double s = sigmoid(z(i));
    w(i) = s * (1.0 - s) / static_cast<double>(n);
  }
  return w;
}

Matrix LogisticObjective::hess_mat(const Vector& x, const Matrix& v) const {
  check_x(x);
  check_block(v);
  Matrix out = gamma_ * v;
  if (samples() == 0) return out;
  const Vector w = curvature_weights(x);
  const Matrix av = data_.features * v;
  out.noalias() += data_.features.transpose() * (w.asDiagonal() * av);
  return out;
}

Vector LogisticObjective::hess_diag(const Vector& x) const {
  check_x(x);
  Vector out = Vector::Constant(dim(), gamma_);
  if (samples() == 0) return out;
  const Vector w = curvature_weights(x);
  const SparseRows sq = data_.features.cwiseAbs2();
  out.noalias() += sq.transpose() * w;
  return out;
}

SymMatrix LogisticObjective::hess_full(const Vector& x) const {
  check_x(x);
  check_full_cap();
  Matrix h = gamma_ * Matrix::Identity(dim(), dim());
  if (samples() > 0) {
    const Vector w = curvature_weights(x);
    const Matrix dense_a = Matrix(data_.features);
    h.noalias() += dense_a.transpose() * w.asDiagonal() * dense_a;
  }
  return SymMatrix(h);
}

QuadraticObjective::QuadraticObjective(SymMatrix h, Vector b) : h_(std::move(h)), b_(std::move(b)) {
  if (b_.size() != h_.dim()) throw Error(ErrorKind::DimensionMismatch, "quadratic: b length differs from H");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(h_.mat(), Eigen::EigenvaluesOnly);
  mu_ = eig.eigenvalues().minCoeff();
  lip_l_ = eig.eigenvalues().maxCoeff();
  if (!(mu_ > 0.0)) throw Error(ErrorKind::NotPositiveDefinite, "quadratic Hessian must be SPD");
}

Vector QuadraticObjective::minimizer() const { return solve_spd(cholesky(h_), b_); }

double QuadraticObjective::value(const Vector& x) const {
  check_x(x);
  return 0.5 * x.dot(h_.mat() * x) - b_.dot(x);
}

Vector QuadraticObjective::gradient(const Vector& x) const {
  check_x(x);
  return h_.mat() * x - b_;
}

Matrix QuadraticObjective::hess_mat(const Vector& x, const Matrix& v) const {
  check_x(x);
  check_block(v);
  return h_.mat() * v;
}

Vector QuadraticObjective::hess_diag(const Vector& x) const {
  check_x(x);
  return h_.diag();
}

SymMatrix QuadraticObjective::hess_full(const Vector& x) const {
  check_x(x);
  check_full_cap();
  return h_;
}

}  // namespace blockqn
