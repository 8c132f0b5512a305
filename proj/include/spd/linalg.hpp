#pragma once

#include <Eigen/Dense>
#include <optional>

#include "spd/errors.hpp"

namespace spd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

constexpr double kDefaultPdFloor = 1e-10;
constexpr double kSymTol = 1e-12;

inline Matrix sym(const Matrix& m) { return 0.5 * (m + m.transpose()); }

/// A d x d symmetric matrix (tangent vectors, Euclidean gradients).
/// Construction re-symmetrizes; inputs asymmetric beyond
/// kSymTol * max(1, ||A||_F) are rejected.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(Matrix m);

  static SymMatrix zero(Index d) { return SymMatrix(Matrix::Zero(d, d)); }

  const Matrix& mat() const { return m_; }
  Index dim() const { return m_.rows(); }

 private:
  Matrix m_;
};

/// A d x d symmetric positive definite matrix.
class SpdMatrix {
 public:
  SpdMatrix() = default;

  /// Full validation: symmetry tolerance and smallest eigenvalue > pd_floor.
  static SpdMatrix validated(const Matrix& m, double pd_floor = kDefaultPdFloor);

  /// For results that are positive definite by construction
  /// (matrix exponentials, congruences of SPD matrices, ...).
  /// Re-symmetrizes but skips the eigenvalue check.
  static SpdMatrix unchecked(Matrix m);

  static SpdMatrix identity(Index d);

  const Matrix& mat() const { return m_; }
  Index dim() const { return m_.rows(); }

 private:
  explicit SpdMatrix(Matrix m) : m_(std::move(m)) {}
  Matrix m_;
};

/// Eigendecomposition of a symmetric matrix, eigenvalues ascending,
/// vectors column-paired with values.
struct EigPair {
  Vector values;
  Matrix vectors;

  Matrix reconstruct() const {
    return vectors * values.asDiagonal() * vectors.transpose();
  }
};

EigPair sym_eig(const SymMatrix& a);
EigPair sym_eig(const SpdMatrix& a);

/// Eigenvalues only (ascending); cheaper when vectors are not needed.
Vector sym_eigvals(const Matrix& symmetric);

enum class SpdFunc { Log, Exp, Sqrt, InvSqrt, Pow, Inv };

/// Q f(Lambda) Q^T for a scalar function tag. `t` is the exponent for Pow.
/// Log/Sqrt/InvSqrt/Inv require eigenvalues above pd_floor.
SymMatrix spd_func(const SpdMatrix& a, SpdFunc f, double t = 0.0,
                   double pd_floor = kDefaultPdFloor);

SymMatrix spd_log(const SpdMatrix& a, double pd_floor = kDefaultPdFloor);
SpdMatrix sym_exp(const SymMatrix& s);
SpdMatrix spd_sqrt(const SpdMatrix& a, double pd_floor = kDefaultPdFloor);
SpdMatrix spd_inv_sqrt(const SpdMatrix& a, double pd_floor = kDefaultPdFloor);
SpdMatrix spd_pow(const SpdMatrix& a, double t);
SpdMatrix spd_inv(const SpdMatrix& a, double pd_floor = kDefaultPdFloor);

/// Generalized eigenvalues of (X, Y): eigenvalues of X Y^{-1}, ascending,
/// computed as the spectrum of Y^{-1/2} X Y^{-1/2}.
Vector gen_eigvals(const SpdMatrix& x, const SpdMatrix& y);

/// Symmetrize `raw`; if its smallest eigenvalue is <= pd_floor, add
/// jitter * I (default jitter: 1e-8 * trace / d) and re-check.
SpdMatrix validate_or_jitter(const Matrix& raw,
                             std::optional<double> jitter = std::nullopt,
                             double pd_floor = kDefaultPdFloor);

double logdet_spd(const SpdMatrix& a);

}  // namespace spd
