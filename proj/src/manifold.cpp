#include "spd/manifold.hpp"

#include <Eigen/Cholesky>
#include <cmath>

namespace spd {

SymMatrix riemannian_grad(const SpdMatrix& b, const SymMatrix& euc_grad) {
  if (b.dim() != euc_grad.dim()) {
    throw DomainError("riemannian_grad: dimension mismatch");
  }
  return SymMatrix(sym(b.mat() * euc_grad.mat() * b.mat()));
}

SpdMatrix retract(const SpdMatrix& b, const SymMatrix& xi) {
  if (b.dim() != xi.dim()) throw DomainError("retract: dimension mismatch");
  const Matrix bh = spd_sqrt(b).mat();
  const Matrix bih = spd_inv_sqrt(b).mat();
  const SpdMatrix e = sym_exp(SymMatrix(sym(bih * xi.mat() * bih)));
  return SpdMatrix::unchecked(bh * e.mat() * bh);
}

SymMatrix parallel_transport(const SymMatrix& p, const SpdMatrix& x,
                             const SpdMatrix& y) {
  if (p.dim() != x.dim() || x.dim() != y.dim()) {
    throw DomainError("parallel_transport: dimension mismatch");
  }
  // (Y X^{-1})^{1/2} = Y^{1/2} (Y^{1/2} X^{-1} Y^{1/2})^{1/2} Y^{-1/2}
  const Matrix yh = spd_sqrt(y).mat();
  const Matrix yih = spd_inv_sqrt(y).mat();
  const Matrix inner = sym(yh * spd_inv(x).mat() * yh);
  const Matrix k = spd_sqrt(SpdMatrix::unchecked(inner)).mat();
  const Matrix z = yh * k * yih;
  return SymMatrix(sym(z * p.mat() * z.transpose()));
}

double airm_inner(const SpdMatrix& b, const SymMatrix& u, const SymMatrix& v) {
  Eigen::LLT<Matrix> llt(b.mat());
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefiniteError("airm_inner: Cholesky failed");
  }
  const Matrix bu = llt.solve(u.mat());
  const Matrix bv = llt.solve(v.mat());
  return (bu * bv).trace();
}

RcgResult rcg_minimize(const SpdObjective& obj, const SpdGradient& euc_grad,
                       const SpdMatrix& init, const RcgOptions& opts) {
  if (opts.rel_obj_tol <= 0.0) {
    throw DomainError("rcg_minimize: rel_obj_tol must be > 0");
  }
  if (opts.line_search.backtrack <= 0.0 || opts.line_search.backtrack >= 1.0) {
    throw DomainError("rcg_minimize: backtrack must be in (0, 1)");
  }
  const Index d = init.dim();
  const int restart_period = static_cast<int>(d * (d + 1) / 2);

  RcgResult res;
  SpdMatrix b = init;
  double f = obj(b);
  if (!std::isfinite(f)) {
    throw DomainError("rcg_minimize: objective not finite at init");
  }
  res.trace.push_back(f);

  SymMatrix g = riemannian_grad(b, euc_grad(b));
  double gg = airm_inner(b, g, g);

  SymMatrix dir_prev;
  SpdMatrix b_prev;
  double gg_prev = 0.0;
  bool have_prev = false;
  int since_restart = 0;
  double step_prev = 0.25;

  for (int iter = 0; iter < opts.max_iters; ++iter) {
    if (!(gg > 1e-24)) break;  // stationary point

    SymMatrix dir;
    if (have_prev && since_restart < restart_period) {
      const double eta = gg / gg_prev;  // Fletcher-Reeves
      if (std::isfinite(eta) && eta >= 0.0) {
        const SymMatrix transported = parallel_transport(dir_prev, b_prev, b);
        dir = SymMatrix(Matrix(-g.mat() + eta * transported.mat()));
      } else {
        dir = SymMatrix(Matrix(-g.mat()));
        since_restart = 0;
      }
    } else {
      dir = SymMatrix(Matrix(-g.mat()));
      since_restart = 0;
    }

    double slope = airm_inner(b, g, dir);
    if (!(slope < 0.0)) {  // not a descent direction; steepest-descent restart
      dir = SymMatrix(Matrix(-g.mat()));
      slope = -gg;
      since_restart = 0;
    }

    double tau = std::clamp(4.0 * step_prev, 1e-12, 16.0);
    bool accepted = false;
    SpdMatrix cand;
    double f_new = 0.0;
    for (int e = 0; e < opts.line_search.max_evals; ++e) {
      bool ok = true;
      try {
        cand = retract(b, SymMatrix(Matrix(tau * dir.mat())));
        f_new = obj(cand);
      } catch (const Error&) {
        ok = false;
      }
      if (ok && std::isfinite(f_new) &&
          f_new <= f + opts.line_search.armijo_c1 * tau * slope) {
        accepted = true;
        break;
      }
      tau *= opts.line_search.backtrack;
    }
    if (!accepted) {
      res.line_search_failed = true;
      break;
    }

    b_prev = b;
    dir_prev = dir;
    gg_prev = gg;
    have_prev = true;
    ++since_restart;
    step_prev = tau;

    const double f_old = f;
    b = cand;
    f = f_new;
    res.trace.push_back(f);
    ++res.iterations;

    g = riemannian_grad(b, euc_grad(b));
    gg = airm_inner(b, g, g);

    if (std::abs(f_old - f) <= opts.rel_obj_tol * std::max(1.0, std::abs(f_old))) {
      break;
    }
  }

  res.minimizer = b;
  return res;
}

Vector project_orthant(Vector x, const SpgProjection& proj) {
  for (Index i = 0; i < x.size(); ++i) {
    x(i) = (proj.sign == OrthantSign::Positive) ? std::max(x(i), proj.eps_min)
                                                : std::min(x(i), -proj.eps_min);
  }
  return x;
}

Vector spg_minimize(const VecObjective& obj, const VecGradient& grad,
                    const Vector& init, const SpgOptions& opts) {
  if (!(opts.bb_min > 0.0) || !(opts.bb_max >= opts.bb_min)) {
    throw DomainError("spg_minimize: step bounds must be positive and ordered");
  }
  Vector x = project_orthant(init, opts.projection);
  double f = obj(x);
  Vector g = grad(x);

  Vector best_x = x;
  double best_f = f;

  Vector x_prev, g_prev;
  bool have_prev = false;

  for (int iter = 0; iter < opts.max_iters; ++iter) {
    if (g.lpNorm<Eigen::Infinity>() < 1e-14) break;

    double tau;
    if (have_prev) {
      const Vector s = x - x_prev;
      const Vector yv = g - g_prev;
      const double sy = s.dot(yv);
      const double yy = yv.dot(yv);
      tau = (sy > 0.0 && yy > 0.0) ? std::clamp(sy / yy, opts.bb_min, opts.bb_max)
                                   : 1.0;
    } else {
      tau = std::clamp(1.0 / g.lpNorm<Eigen::Infinity>(), opts.bb_min, opts.bb_max);
    }

    // Monotone safeguard: shrink the BB step until the projected point
    // satisfies the Armijo decrease.
    double lambda = 1.0;
    bool accepted = false;
    bool pinned = false;
    Vector x_new;
    double f_new = 0.0;
    for (int e = 0; e < opts.line_search.max_evals; ++e) {
      x_new = project_orthant(x - (lambda * tau) * g, opts.projection);
      const Vector step = x_new - x;
      if (step.lpNorm<Eigen::Infinity>() < 1e-16) {
        pinned = true;  // projection keeps returning the current point
        break;
      }
      bool ok = true;
      try {
        f_new = obj(x_new);
      } catch (const Error&) {
        ok = false;
      }
      const double slope = std::min(g.dot(step), 0.0);
      if (ok && std::isfinite(f_new) &&
          f_new <= f + opts.line_search.armijo_c1 * slope) {
        accepted = true;
        break;
      }
      lambda *= opts.line_search.backtrack;
    }
    if (!accepted || pinned) break;

    x_prev = x;
    g_prev = g;
    have_prev = true;
    const double f_old = f;
    x = x_new;
    f = f_new;
    g = grad(x);
    if (f < best_f) {
      best_f = f;
      best_x = x;
    }
    if (std::abs(f_old - f) <= opts.rel_obj_tol * std::max(1.0, std::abs(f_old))) {
      break;
    }
  }
  return best_x;
}

}  // namespace spd
