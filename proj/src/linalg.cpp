#include "spd/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace spd {

namespace {

void check_square_finite(const Matrix& m, const char* who) {
  if (m.rows() == 0 || m.rows() != m.cols()) {
    throw DomainError(std::string(who) + ": matrix must be square and non-empty");
  }
  if (!m.allFinite()) {
    throw DomainError(std::string(who) + ": matrix has non-finite entries");
  }
}

void check_symmetry(const Matrix& m, const char* who) {
  const double scale = std::max(1.0, m.norm());
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymTol * scale) {
    throw DomainError(std::string(who) + ": asymmetry " + std::to_string(asym) +
                      " exceeds tolerance");
  }
}

Eigen::SelfAdjointEigenSolver<Matrix> solve_eig(const Matrix& m, bool vectors) {
  Eigen::SelfAdjointEigenSolver<Matrix> es;
  es.compute(m, vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw NonConvergenceError("symmetric eigensolver did not converge");
  }
  return es;
}

}  // namespace

SymMatrix::SymMatrix(Matrix m) {
  check_square_finite(m, "SymMatrix");
  check_symmetry(m, "SymMatrix");
  m_ = sym(m);
}

SpdMatrix SpdMatrix::validated(const Matrix& m, double pd_floor) {
  check_square_finite(m, "SpdMatrix");
  check_symmetry(m, "SpdMatrix");
  Matrix s = sym(m);
  const Vector ev = sym_eigvals(s);
  if (!(ev(0) > pd_floor)) {
    throw NotPositiveDefiniteError("smallest eigenvalue " + std::to_string(ev(0)) +
                                   " is not above the floor");
  }
  return SpdMatrix(std::move(s));
}

SpdMatrix SpdMatrix::unchecked(Matrix m) {
  check_square_finite(m, "SpdMatrix");
  return SpdMatrix(sym(m));
}

SpdMatrix SpdMatrix::identity(Index d) { return SpdMatrix(Matrix::Identity(d, d)); }

EigPair sym_eig(const SymMatrix& a) {
  auto es = solve_eig(a.mat(), true);
  return EigPair{es.eigenvalues(), es.eigenvectors()};
}

EigPair sym_eig(const SpdMatrix& a) {
  auto es = solve_eig(a.mat(), true);
  return EigPair{es.eigenvalues(), es.eigenvectors()};
}

Vector sym_eigvals(const Matrix& symmetric) {
  return solve_eig(symmetric, false).eigenvalues();
}

namespace {

template <typename Fn>
Matrix eig_apply(const SpdMatrix& a, Fn f) {
  const EigPair e = sym_eig(a);
  Vector mapped(e.values.size());
  for (Index i = 0; i < e.values.size(); ++i) mapped(i) = f(e.values(i));
  return sym(e.vectors * mapped.asDiagonal() * e.vectors.transpose());
}

void require_floor(const SpdMatrix& a, double pd_floor, const char* who) {
  const Vector ev = sym_eigvals(a.mat());
  if (!(ev(0) > pd_floor)) {
    throw DomainError(std::string(who) + ": eigenvalue " + std::to_string(ev(0)) +
                      " below positive-definite floor");
  }
}

}  // namespace

SymMatrix spd_log(const SpdMatrix& a, double pd_floor) {
  require_floor(a, pd_floor, "spd_log");
  return SymMatrix(eig_apply(a, [](double x) { return std::log(x); }));
}

SpdMatrix sym_exp(const SymMatrix& s) {
  const EigPair e = sym_eig(s);
  Vector mapped(e.values.size());
  for (Index i = 0; i < e.values.size(); ++i) mapped(i) = std::exp(e.values(i));
  return SpdMatrix::unchecked(e.vectors * mapped.asDiagonal() * e.vectors.transpose());
}

SpdMatrix spd_sqrt(const SpdMatrix& a, double pd_floor) {
  require_floor(a, pd_floor, "spd_sqrt");
  return SpdMatrix::unchecked(eig_apply(a, [](double x) { return std::sqrt(x); }));
}

SpdMatrix spd_inv_sqrt(const SpdMatrix& a, double pd_floor) {
  require_floor(a, pd_floor, "spd_inv_sqrt");
  return SpdMatrix::unchecked(eig_apply(a, [](double x) { return 1.0 / std::sqrt(x); }));
}

SpdMatrix spd_pow(const SpdMatrix& a, double t) {
  if (!std::isfinite(t)) throw DomainError("spd_pow: exponent must be finite");
  return SpdMatrix::unchecked(eig_apply(a, [t](double x) { return std::pow(x, t); }));
}

SpdMatrix spd_inv(const SpdMatrix& a, double pd_floor) {
  require_floor(a, pd_floor, "spd_inv");
  return SpdMatrix::unchecked(eig_apply(a, [](double x) { return 1.0 / x; }));
}

SymMatrix spd_func(const SpdMatrix& a, SpdFunc f, double t, double pd_floor) {
  switch (f) {
    case SpdFunc::Log:
      return spd_log(a, pd_floor);
    case SpdFunc::Exp:
      return SymMatrix(eig_apply(a, [](double x) { return std::exp(x); }));
    case SpdFunc::Sqrt:
      return SymMatrix(spd_sqrt(a, pd_floor).mat());
    case SpdFunc::InvSqrt:
      return SymMatrix(spd_inv_sqrt(a, pd_floor).mat());
    case SpdFunc::Pow:
      return SymMatrix(spd_pow(a, t).mat());
    case SpdFunc::Inv:
      return SymMatrix(spd_inv(a, pd_floor).mat());
  }
  throw DomainError("spd_func: unknown function tag");
}

Vector gen_eigvals(const SpdMatrix& x, const SpdMatrix& y) {
  if (x.dim() != y.dim()) {
    throw DomainError("gen_eigvals: dimension mismatch");
  }
  const Matrix yih = spd_inv_sqrt(y).mat();
  const Matrix s = sym(yih * x.mat() * yih);
  Vector ev = sym_eigvals(s);
  if (!(ev(0) > 0.0)) {
    throw NotPositiveDefiniteError("gen_eigvals: non-positive generalized eigenvalue");
  }
  return ev;
}

SpdMatrix validate_or_jitter(const Matrix& raw, std::optional<double> jitter,
                             double pd_floor) {
  check_square_finite(raw, "validate_or_jitter");
  Matrix s = sym(raw);
  const Index d = s.rows();
  const Vector ev = sym_eigvals(s);
  if (ev(0) > pd_floor) {
    return SpdMatrix::unchecked(std::move(s));
  }
  const double j = jitter.value_or(1e-8 * s.trace() / static_cast<double>(d));
  if (j < 0.0) throw DomainError("validate_or_jitter: jitter must be non-negative");
  s += j * Matrix::Identity(d, d);
  if (!(ev(0) + j > pd_floor)) {
    throw NotPositiveDefiniteError("matrix is not positive definite after jitter " +
                                   std::to_string(j));
  }
  return SpdMatrix::unchecked(std::move(s));
}

double logdet_spd(const SpdMatrix& a) {
  Eigen::LLT<Matrix> llt(a.mat());
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefiniteError("logdet_spd: Cholesky factorization failed");
  }
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

}  // namespace spd
