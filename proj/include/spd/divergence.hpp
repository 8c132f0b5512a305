#pragma once

#include <optional>

#include "spd/linalg.hpp"

namespace spd {

constexpr double kEpsMin = 1e-4;
constexpr double kNegativityFloor = -1e-10;

enum class Orthant { Positive, Negative, Origin };

/// The learnable (alpha, beta) pair. Non-origin orthants keep both
/// parameters at least eps_min away from zero, with matching signs;
/// the origin is the explicit AIRM branch (alpha = beta = 0).
struct AbldParams {
  double alpha = 1.0;
  double beta = 1.0;
  Orthant orthant = Orthant::Positive;

  static AbldParams positive(double a, double b, double eps_min = kEpsMin);
  static AbldParams negative(double a, double b, double eps_min = kEpsMin);
  static AbldParams origin();

  bool at_origin() const { return orthant == Orthant::Origin; }
  /// Same divergence read from the swapped side: D(X||Y; a,b) = D(Y||X; b,a).
  AbldParams swapped() const;
};

/// Alpha-beta log-det divergence D(X||Y). Non-origin orthants evaluate the
/// generalized-eigenvalue form; the origin evaluates the squared affine
/// invariant Riemannian metric.
double abld(const SpdMatrix& x, const SpdMatrix& y, const AbldParams& p);

/// Same divergence evaluated through the defining matrix expression
///   logdet((a (XY^{-1})^b + b (XY^{-1})^{-a}) / (a+b)) / (a b)
/// with Schur-based non-symmetric matrix powers. Slower; kept as an
/// independent cross-check route.
double abld_direct(const SpdMatrix& x, const SpdMatrix& y, const AbldParams& p);

/// Eigenvalue-form evaluation given the generalized eigenvalues of X Y^{-1}.
double abld_from_gen_eigs(const Vector& lambda, const AbldParams& p);

enum class SpecialDivergence { AirmSq, Jbld, Jeffreys, Burg, LogEuclideanSq };

double special_divergence(const SpdMatrix& x, const SpdMatrix& y,
                          SpecialDivergence kind);

/// d/d(alpha) of the divergence; errors at the origin (non-smooth point).
double abld_grad_alpha(const SpdMatrix& x, const SpdMatrix& y, const AbldParams& p);
/// d/d(beta), via dual symmetry.
double abld_grad_beta(const SpdMatrix& x, const SpdMatrix& y, const AbldParams& p);
double abld_grad_alpha_from_gen_eigs(const Vector& lambda, double alpha, double beta);

/// grad_B logdet[p (AB)^q + I] for A,B SPD and p,q >= 0, symmetrized.
SymMatrix logdet_term_grad(const SpdMatrix& a, const SpdMatrix& b, double p, double q);

/// Eigendecomposition of X^{-1/2} Y X^{-1/2}; the shared kernel behind
/// divergence values and Y-gradients against a fixed X.
struct PairEig {
  Vector delta;    // ascending, = spectrum of Y X^{-1}
  Matrix vectors;  // columns paired with delta
};

PairEig pair_eig(const Matrix& x_inv_sqrt, const Matrix& y);
/// Eigenvalues only; enough for divergence values and (alpha,beta) gradients.
Vector pair_delta(const Matrix& x_inv_sqrt, const Matrix& y);

/// Divergence value from the delta spectrum (delta_i = eigenvalues of Y X^{-1}).
double abld_from_delta(const Vector& delta, const AbldParams& p);

/// grad_Y D(X||Y) assembled from cached X^{-1/2} and the pair decomposition.
Matrix abld_grad_y_from_eig(const Matrix& x_inv_sqrt, const PairEig& e,
                            const AbldParams& p);

/// grad_Y D(X||Y); closed form via the pair eigendecomposition. The origin
/// branch returns 2 X^{-1/2} Log(P) P^{-1} X^{-1/2} with P = X^{-1/2} Y X^{-1/2}.
SymMatrix abld_grad_y(const SpdMatrix& x, const SpdMatrix& y, const AbldParams& p);

/// grad_Y D(X||Y) assembled from the logdet decomposition and the
/// Theorem-style helper instead of the single-eig closed form. Cross-check
/// route; agrees with abld_grad_y to round-off.
SymMatrix abld_grad_y_unsimplified(const SpdMatrix& x, const SpdMatrix& y,
                                   const AbldParams& p);

/// Lower-bound check on the generalized eigenvalues for mixed-sign (alpha,
/// beta); diagnostic only, the learnable orthants never mix signs.
struct DegeneracyCheck {
  bool ok = true;
  std::optional<Index> violated_index;
  double bound = 0.0;
};

DegeneracyCheck degeneracy_bound(const SpdMatrix& x, const SpdMatrix& y,
                                 double alpha, double beta);

}  // namespace spd
