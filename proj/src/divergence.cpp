#include "spd/divergence.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

namespace spd {

namespace {

void check_pair(const SpdMatrix& x, const SpdMatrix& y, const char* who) {
  if (x.dim() != y.dim()) {
    throw DomainError(std::string(who) + ": dimension mismatch");
  }
}

void check_orthant_values(double a, double b, bool positive, double eps_min) {
  if (eps_min <= 0.0) throw DomainError("AbldParams: eps_min must be positive");
  if (positive) {
    if (!(a >= eps_min && b >= eps_min)) {
      throw DomainError("AbldParams: positive orthant requires alpha, beta >= eps_min");
    }
  } else {
    if (!(a <= -eps_min && b <= -eps_min)) {
      throw DomainError("AbldParams: negative orthant requires alpha, beta <= -eps_min");
    }
  }
}

// log((a lam^b + b lam^{-a}) / (a+b)) for same-sign (a, b), evaluated in the
// log domain so large |b ln lam| does not overflow.
double log_term(double lam, double a, double b) {
  const double l = std::log(lam);
  const double ea = std::log(std::abs(a)) + b * l;
  const double eb = std::log(std::abs(b)) - a * l;
  const double m = std::max(ea, eb);
  return m + std::log(std::exp(ea - m) + std::exp(eb - m)) - std::log(std::abs(a + b));
}

double airm_sq_from_eigs(const Vector& lam) {
  double s = 0.0;
  for (Index i = 0; i < lam.size(); ++i) {
    const double l = std::log(lam(i));
    s += l * l;
  }
  return s;
}

double logdet_general(const Matrix& m) {
  Eigen::PartialPivLU<Matrix> lu(m);
  const Matrix& u = lu.matrixLU();
  double logdet = 0.0;
  double sign = lu.permutationP().determinant();
  for (Index i = 0; i < u.rows(); ++i) {
    const double p = u(i, i);
    if (p == 0.0) throw DegenerateLogArgumentError("singular log-det argument");
    sign *= (p < 0.0) ? -1.0 : 1.0;
    logdet += std::log(std::abs(p));
  }
  if (sign <= 0.0) {
    throw DegenerateLogArgumentError("log-det argument has negative determinant");
  }
  return logdet;
}

}  // namespace

AbldParams AbldParams::positive(double a, double b, double eps_min) {
  check_orthant_values(a, b, true, eps_min);
  return AbldParams{a, b, Orthant::Positive};
}

AbldParams AbldParams::negative(double a, double b, double eps_min) {
  check_orthant_values(a, b, false, eps_min);
  return AbldParams{a, b, Orthant::Negative};
}

AbldParams AbldParams::origin() { return AbldParams{0.0, 0.0, Orthant::Origin}; }

AbldParams AbldParams::swapped() const { return AbldParams{beta, alpha, orthant}; }

double abld_from_gen_eigs(const Vector& lambda, const AbldParams& p) {
  if (p.at_origin()) {
    return airm_sq_from_eigs(lambda);
  }
  double s = 0.0;
  for (Index i = 0; i < lambda.size(); ++i) {
    s += log_term(lambda(i), p.alpha, p.beta);
  }
  const double v = s / (p.alpha * p.beta);
  if (!(v >= kNegativityFloor)) {
    throw DegenerateLogArgumentError("divergence evaluated to " + std::to_string(v));
  }
  return v;
}

double abld(const SpdMatrix& x, const SpdMatrix& y, const AbldParams& p) {
  check_pair(x, y, "abld");
  return abld_from_gen_eigs(gen_eigvals(x, y), p);
}

double abld_direct(const SpdMatrix& x, const SpdMatrix& y, const AbldParams& p) {
  check_pair(x, y, "abld_direct");
  const Index d = x.dim();
  if (p.at_origin()) {
    const Matrix xih = spd_inv_sqrt(x).mat();
    const Matrix pm = xih * y.mat() * xih;
    return Matrix(pm.log()).squaredNorm();
  }
  // X Y^{-1} = (Y^{-1} X^T)^T with symmetric X.
  Eigen::LLT<Matrix> llt(y.mat());
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefiniteError("abld_direct: Cholesky of Y failed");
  }
  const Matrix l = llt.solve(x.mat()).transpose();
  Eigen::MatrixPower<Matrix> lpow(l);
  const Matrix m =
      (p.alpha * lpow(p.beta) + p.beta * lpow(-p.alpha)) / (p.alpha + p.beta);
  (void)d;
  return logdet_general(m) / (p.alpha * p.beta);
}

double special_divergence(const SpdMatrix& x, const SpdMatrix& y,
                          SpecialDivergence kind) {
  check_pair(x, y, "special_divergence");
  const double d = static_cast<double>(x.dim());
  switch (kind) {
    case SpecialDivergence::AirmSq: {
      const Matrix xih = spd_inv_sqrt(x).mat();
      const Vector ev = sym_eigvals(sym(xih * y.mat() * xih));
      return airm_sq_from_eigs(ev);
    }
    case SpecialDivergence::Jbld: {
      const SpdMatrix mid = SpdMatrix::unchecked(0.5 * (x.mat() + y.mat()));
      return 4.0 * (logdet_spd(mid) - 0.5 * (logdet_spd(x) + logdet_spd(y)));
    }
    case SpecialDivergence::Jeffreys: {
      const double txy = y.mat().llt().solve(x.mat()).trace();
      const double tyx = x.mat().llt().solve(y.mat()).trace();
      return 0.5 * (txy + tyx) - d;
    }
    case SpecialDivergence::Burg: {
      const double txy = y.mat().llt().solve(x.mat()).trace();
      return txy - (logdet_spd(x) - logdet_spd(y)) - d;
    }
    case SpecialDivergence::LogEuclideanSq: {
      return (spd_log(x).mat() - spd_log(y).mat()).squaredNorm();
    }
  }
  throw DomainError("special_divergence: unknown kind");
}

double abld_grad_alpha_from_gen_eigs(const Vector& lambda, double a, double b) {
  const double theta = a + b;
  const double nu = a * b;
  double s = 0.0;
  for (Index i = 0; i < lambda.size(); ++i) {
    const double l = std::log(lambda(i));
    const double ea = std::log(std::abs(a)) + b * l;
    const double eb = std::log(std::abs(b)) - a * l;
    const double m = std::max(ea, eb);
    const double wa = std::exp(ea - m);
    const double wb = std::exp(eb - m);
    const double ratio = (wa - a * wb * l) / (wa + wb);
    const double logu = m + std::log(wa + wb) - std::log(std::abs(theta));
    s += ratio - a / theta - logu;
  }
  return s / (a * nu);
}

double abld_grad_alpha(const SpdMatrix& x, const SpdMatrix& y, const AbldParams& p) {
  check_pair(x, y, "abld_grad_alpha");
  if (p.at_origin()) {
    throw DomainError("abld_grad_alpha: divergence is non-smooth at the origin");
  }
  return abld_grad_alpha_from_gen_eigs(gen_eigvals(x, y), p.alpha, p.beta);
}

double abld_grad_beta(const SpdMatrix& x, const SpdMatrix& y, const AbldParams& p) {
  return abld_grad_alpha(y, x, p.swapped());
}

SymMatrix logdet_term_grad(const SpdMatrix& a, const SpdMatrix& b, double p, double q) {
  check_pair(a, b, "logdet_term_grad");
  if (p < 0.0 || q < 0.0) throw DomainError("logdet_term_grad: p, q must be >= 0");
  const Index d = a.dim();
  if (p == 0.0) return SymMatrix::zero(d);
  const Matrix ah = spd_sqrt(a).mat();
  const Matrix aih = spd_inv_sqrt(a).mat();
  const EigPair e = sym_eig(SymMatrix(sym(ah * b.mat() * ah)));
  Vector w(d);
  for (Index i = 0; i < d; ++i) {
    // p*q*s^q / (1 + p*s^q) = q / (1 + exp(-(log p + q log s)))
    const double ex = std::log(p) + q * std::log(e.values(i));
    w(i) = q / (1.0 + std::exp(-ex));
  }
  const Matrix mid = e.vectors * w.asDiagonal() * e.vectors.transpose();
  const Matrix g = b.mat().llt().solve(aih * mid * ah);
  return SymMatrix(sym(g));
}

PairEig pair_eig(const Matrix& x_inv_sqrt, const Matrix& y) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym(x_inv_sqrt * y * x_inv_sqrt));
  if (es.info() != Eigen::Success) {
    throw NonConvergenceError("pair_eig: eigensolver did not converge");
  }
  return PairEig{es.eigenvalues(), es.eigenvectors()};
}

Vector pair_delta(const Matrix& x_inv_sqrt, const Matrix& y) {
  return sym_eigvals(sym(x_inv_sqrt * y * x_inv_sqrt));
}

double abld_from_delta(const Vector& delta, const AbldParams& p) {
  // delta_i = eigenvalues of Y X^{-1} = 1/lambda_i; by dual symmetry the
  // value equals the gen-eig form with alpha and beta exchanged.
  if (p.at_origin()) return airm_sq_from_eigs(delta);
  return abld_from_gen_eigs(delta, p.swapped());
}

Matrix abld_grad_y_from_eig(const Matrix& x_inv_sqrt, const PairEig& e,
                            const AbldParams& p) {
  const Index d = e.delta.size();
  Vector g(d);
  if (p.at_origin()) {
    for (Index i = 0; i < d; ++i) {
      g(i) = 2.0 * std::log(e.delta(i)) / e.delta(i);
    }
  } else {
    const double a = p.alpha;
    const double b = p.beta;
    const double theta = a + b;
    for (Index i = 0; i < d; ++i) {
      const double dl = e.delta(i);
      const double ex = theta * std::log(dl);
      if (ex > 0.0) {
        const double tinv = std::exp(-ex);
        g(i) = (1.0 - tinv) / (dl * (a * tinv + b));
      } else {
        const double t = std::exp(ex);
        g(i) = (t - 1.0) / (dl * (a + b * t));
      }
    }
  }
  const Matrix w = x_inv_sqrt * e.vectors;
  return sym(w * g.asDiagonal() * w.transpose());
}

SymMatrix abld_grad_y(const SpdMatrix& x, const SpdMatrix& y, const AbldParams& p) {
  check_pair(x, y, "abld_grad_y");
  const Matrix xih = spd_inv_sqrt(x).mat();
  return SymMatrix(abld_grad_y_from_eig(xih, pair_eig(xih, y.mat()), p));
}

SymMatrix abld_grad_y_unsimplified(const SpdMatrix& x, const SpdMatrix& y,
                                   const AbldParams& p) {
  check_pair(x, y, "abld_grad_y_unsimplified");
  if (p.at_origin()) {
    throw DomainError("abld_grad_y_unsimplified: origin uses the limit gradient");
  }
  // The negative orthant is the mirror reparametrization
  // D^(a,b) = D^(-b,-a); map to the positive orthant first.
  double a = p.alpha;
  double b = p.beta;
  if (p.orthant == Orthant::Negative) {
    const double na = -b;
    const double nb = -a;
    a = na;
    b = nb;
  }
  const double theta = a + b;
  const double nu = a * b;
  const SpdMatrix z = spd_inv(x);
  const Matrix term = logdet_term_grad(z, y, b / a, theta).mat() / nu;
  const Matrix g = term - spd_inv(y).mat() / a;
  return SymMatrix(sym(g));
}

DegeneracyCheck degeneracy_bound(const SpdMatrix& x, const SpdMatrix& y,
                                 double alpha, double beta) {
  check_pair(x, y, "degeneracy_bound");
  DegeneracyCheck out;
  const bool mixed = (alpha > 0.0 && beta < 0.0) || (alpha < 0.0 && beta > 0.0);
  if (!mixed) return out;  // same-sign parameters never degenerate
  const double theta = alpha + beta;
  if (std::abs(theta) < 1e-12) {
    throw DomainError("degeneracy_bound: alpha + beta must be nonzero");
  }
  const Vector lam = gen_eigvals(x, y);
  if (alpha > 0.0) {
    out.bound = std::pow(std::abs(alpha / beta), 1.0 / theta);
    for (Index i = 0; i < lam.size(); ++i) {
      if (!(lam(i) > out.bound)) {
        out.ok = false;
        out.violated_index = i;
        break;
      }
    }
  } else {
    out.bound = std::pow(std::abs(beta / alpha), 1.0 / theta);
    for (Index i = 0; i < lam.size(); ++i) {
      if (!(lam(i) < out.bound)) {
        out.ok = false;
        out.violated_index = i;
        break;
      }
    }
  }
  return out;
}

}  // namespace spd
