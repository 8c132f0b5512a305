#pragma once

#include <functional>
#include <vector>

#include "spd/divergence.hpp"
#include "spd/linalg.hpp"

namespace spd {

struct LineSearchOptions {
  double armijo_c1 = 1e-4;
  double backtrack = 0.5;
  int max_evals = 30;
};

struct RcgOptions {
  int max_iters = 300;
  double rel_obj_tol = 1e-6;
  LineSearchOptions line_search{};
};

struct RcgResult {
  SpdMatrix minimizer;
  std::vector<double> trace;  // objective at init and after each accepted step
  bool line_search_failed = false;
  int iterations = 0;  // accepted steps
};

/// grad L(B) = B sym(euc_grad) B.
SymMatrix riemannian_grad(const SpdMatrix& b, const SymMatrix& euc_grad);

/// tau_B(xi) = B^{1/2} Exp(B^{-1/2} xi B^{-1/2}) B^{1/2}.
SpdMatrix retract(const SpdMatrix& b, const SymMatrix& xi);

/// pi(P, X, Y) = Z P Z^T with Z = (Y X^{-1})^{1/2}, evaluated through
/// symmetric factorizations only.
SymMatrix parallel_transport(const SymMatrix& p, const SpdMatrix& x,
                             const SpdMatrix& y);

/// AIRM inner product <u, v>_B = tr(B^{-1} u B^{-1} v).
double airm_inner(const SpdMatrix& b, const SymMatrix& u, const SymMatrix& v);

using SpdObjective = std::function<double(const SpdMatrix&)>;
using SpdGradient = std::function<SymMatrix(const SpdMatrix&)>;

/// Riemannian conjugate gradient with Fletcher-Reeves directions, parallel
/// transport of the previous direction, and Armijo backtracking along the
/// retraction curve. The objective trace is non-increasing.
RcgResult rcg_minimize(const SpdObjective& obj, const SpdGradient& euc_grad,
                       const SpdMatrix& init, const RcgOptions& opts = {});

enum class OrthantSign { Positive, Negative };

struct SpgProjection {
  OrthantSign sign = OrthantSign::Positive;
  double eps_min = kEpsMin;
};

struct SpgOptions {
  int max_iters = 100;
  double bb_min = 1e-8;
  double bb_max = 1e8;
  SpgProjection projection{};
  double rel_obj_tol = 1e-10;
  LineSearchOptions line_search{};
};

using VecObjective = std::function<double(const Vector&)>;
using VecGradient = std::function<Vector(const Vector&)>;

Vector project_orthant(Vector x, const SpgProjection& proj);

/// Spectral projected gradient descent with Barzilai-Borwein step sizes
/// (s.y / y.y, clamped), monotone Armijo safeguard, and per-coordinate
/// orthant projection. Returns the best projected iterate.
Vector spg_minimize(const VecObjective& obj, const VecGradient& grad,
                    const Vector& init, const SpgOptions& opts = {});

}  // namespace spd
