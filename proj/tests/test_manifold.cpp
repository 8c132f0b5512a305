#include <cmath>

#include "spd/divergence.hpp"
#include "spd/manifold.hpp"
#include "spd/rng.hpp"
#include "doctest.h"

using namespace spd;

namespace {

SpdMatrix diag_spd(std::initializer_list<double> vals) {
  Vector v(static_cast<Index>(vals.size()));
  Index i = 0;
  for (double x : vals) v(i++) = x;
  return SpdMatrix::validated(Matrix(v.asDiagonal()));
}

}  // namespace

TEST_CASE("riemannian gradient") {
  Rng rng(41);
  const SpdMatrix b = rng.spd(4);
  const SymMatrix g = rng.symmetric(4);

  SUBCASE("identity base point returns the Euclidean gradient") {
    const SymMatrix r = riemannian_grad(SpdMatrix::identity(4), g);
    CHECK((r.mat() - g.mat()).norm() <= 1e-14);
  }
  SUBCASE("zero gradient maps to zero") {
    CHECK(riemannian_grad(b, SymMatrix::zero(4)).mat().norm() == 0.0);
  }
  SUBCASE("matches the explicit triple product") {
    const Matrix expected = b.mat() * g.mat() * b.mat();
    CHECK((riemannian_grad(b, g).mat() - expected).norm() <=
          1e-12 * expected.norm());
  }
}

TEST_CASE("retraction") {
  Rng rng(42);
  const SpdMatrix b = rng.spd(4);

  SUBCASE("zero tangent returns the base point") {
    CHECK((retract(b, SymMatrix::zero(4)).mat() - b.mat()).norm() <=
          1e-12 * b.mat().norm());
  }
  SUBCASE("commuting diagonal case is an entrywise exponential") {
    Vector s(3);
    s << 0.3, -1.0, 2.0;
    const SpdMatrix r = retract(SpdMatrix::identity(3), SymMatrix(Matrix(s.asDiagonal())));
    for (Index i = 0; i < 3; ++i) {
      CHECK(r.mat()(i, i) == doctest::Approx(std::exp(s(i))).epsilon(1e-12));
    }
  }
  SUBCASE("differential at zero is the identity map") {
    const SymMatrix xi = rng.symmetric(4);
    const double h = 1e-5;
    const Matrix fd = (retract(b, SymMatrix(Matrix(h * xi.mat()))).mat() -
                       retract(b, SymMatrix(Matrix(-h * xi.mat()))).mat()) /
                      (2.0 * h);
    CHECK((fd - xi.mat()).norm() <= 1e-6 * std::max(1.0, xi.mat().norm()));
  }
  SUBCASE("stays positive definite for large steps") {
    for (int t = 0; t < 10; ++t) {
      const SymMatrix xi = rng.symmetric(4, 10.0 * b.mat().norm());
      const SpdMatrix r = retract(b, xi);
      CHECK_NOTHROW(SpdMatrix::validated(r.mat()));
    }
  }
}

TEST_CASE("parallel transport") {
  Rng rng(43);
  const SpdMatrix x = rng.spd(4);
  const SpdMatrix y = rng.spd(4);
  const SymMatrix p = rng.symmetric(4);

  SUBCASE("same endpoints leave the vector unchanged") {
    CHECK((parallel_transport(p, x, x).mat() - p.mat()).norm() <=
          1e-12 * std::max(1.0, p.mat().norm()));
  }
  SUBCASE("preserves the Riemannian inner product") {
    for (int t = 0; t < 10; ++t) {
      const SymMatrix q = rng.symmetric(4);
      const double before = airm_inner(x, q, q);
      const SymMatrix moved = parallel_transport(q, x, y);
      const double after = airm_inner(y, moved, moved);
      CHECK(std::abs(before - after) <= 1e-8 * std::max(1.0, std::abs(before)));
    }
  }
  SUBCASE("zero vector transports to zero") {
    CHECK(parallel_transport(SymMatrix::zero(4), x, y).mat().norm() == 0.0);
  }
}

TEST_CASE("conjugate gradient recovers the Burg-loss minimizer") {
  Rng rng(44);
  const SpdMatrix target = rng.spd(4);
  const Matrix target_inv = spd_inv(target).mat();

  SpdObjective obj = [&](const SpdMatrix& b) {
    const Matrix l = b.mat() * target_inv;
    Eigen::PartialPivLU<Matrix> lu(l);
    double logdet = 0.0;
    for (Index i = 0; i < 4; ++i) logdet += std::log(std::abs(lu.matrixLU()(i, i)));
    return l.trace() - logdet - 4.0;
  };
  SpdGradient egrad = [&](const SpdMatrix& b) {
    return SymMatrix(Matrix(target_inv - spd_inv(b).mat()));
  };

  RcgOptions opts;
  opts.max_iters = 300;
  opts.rel_obj_tol = 1e-14;
  const RcgResult res = rcg_minimize(obj, egrad, SpdMatrix::identity(4), opts);
  CHECK_FALSE(res.line_search_failed);
  CHECK(res.trace.back() <= 1e-8);
  for (std::size_t i = 1; i < res.trace.size(); ++i) {
    CHECK(res.trace[i] <= res.trace[i - 1] + 1e-12);
  }
}

TEST_CASE("conjugate gradient finds the geodesic midpoint of commuting diagonals") {
  const SpdMatrix x1 = diag_spd({1.0, 4.0});
  const SpdMatrix x2 = diag_spd({9.0, 16.0});
  const AbldParams origin = AbldParams::origin();

  SpdObjective obj = [&](const SpdMatrix& c) {
    return abld(x1, c, origin) + abld(x2, c, origin);
  };
  SpdGradient egrad = [&](const SpdMatrix& c) {
    return SymMatrix(
        Matrix(abld_grad_y(x1, c, origin).mat() + abld_grad_y(x2, c, origin).mat()));
  };

  RcgOptions opts;
  opts.max_iters = 300;
  opts.rel_obj_tol = 1e-14;
  const RcgResult res = rcg_minimize(obj, egrad, SpdMatrix::identity(2), opts);
  const SpdMatrix expected = diag_spd({3.0, 8.0});
  CHECK((res.minimizer.mat() - expected.mat()).norm() <= 1e-6);
  for (std::size_t i = 1; i < res.trace.size(); ++i) {
    CHECK(res.trace[i] <= res.trace[i - 1] + 1e-12);
  }
}

TEST_CASE("conjugate gradient stops immediately at a stationary start") {
  Rng rng(45);
  const SpdMatrix target = rng.spd(3);
  const Matrix target_inv = spd_inv(target).mat();
  SpdObjective obj = [&](const SpdMatrix& b) {
    const Matrix l = b.mat() * target_inv;
    return l.trace() - std::log(l.determinant()) - 3.0;
  };
  SpdGradient egrad = [&](const SpdMatrix& b) {
    return SymMatrix(Matrix(target_inv - spd_inv(b).mat()));
  };
  const RcgResult res = rcg_minimize(obj, egrad, target, RcgOptions{});
  CHECK(res.iterations == 0);
  CHECK((res.minimizer.mat() - target.mat()).norm() == 0.0);
}

TEST_CASE("spectral projected gradient on projected quadratics") {
  SpgOptions opts;
  opts.projection.eps_min = kEpsMin;

  SUBCASE("interior target") {
    Vector c(3);
    c << 0.5, 1.5, 0.2;
    VecObjective obj = [&](const Vector& x) { return (x - c).squaredNorm(); };
    VecGradient grad = [&](const Vector& x) { return Vector(2.0 * (x - c)); };
    Vector init(3);
    init << 2.0, 2.0, 2.0;
    const Vector x = spg_minimize(obj, grad, init, opts);
    CHECK((x - c).norm() <= 1e-8);
  }
  SUBCASE("exterior target converges to its projection") {
    Vector c(2);
    c << -1.0, 2.0;
    VecObjective obj = [&](const Vector& x) { return (x - c).squaredNorm(); };
    VecGradient grad = [&](const Vector& x) { return Vector(2.0 * (x - c)); };
    Vector init(2);
    init << 1.0, 1.0;
    const Vector x = spg_minimize(obj, grad, init, opts);
    CHECK(x(0) == doctest::Approx(kEpsMin));
    CHECK(x(1) == doctest::Approx(2.0).epsilon(1e-8));
  }
  SUBCASE("zero gradient returns the initial point") {
    VecObjective obj = [](const Vector&) { return 7.0; };
    VecGradient grad = [](const Vector& x) { return Vector(Vector::Zero(x.size())); };
    Vector init(2);
    init << 1.0, 2.0;
    const Vector x = spg_minimize(obj, grad, init, opts);
    CHECK((x - init).norm() == 0.0);
  }
  SUBCASE("negative orthant projection") {
    SpgOptions nopts = opts;
    nopts.projection.sign = OrthantSign::Negative;
    Vector c(2);
    c << -2.0, 1.0;  // second coordinate projects to the boundary
    VecObjective obj = [&](const Vector& x) { return (x - c).squaredNorm(); };
    VecGradient grad = [&](const Vector& x) { return Vector(2.0 * (x - c)); };
    Vector init(2);
    init << -1.0, -1.0;
    const Vector x = spg_minimize(obj, grad, init, nopts);
    CHECK(x(0) == doctest::Approx(-2.0).epsilon(1e-8));
    CHECK(x(1) == doctest::Approx(-kEpsMin));
  }
}
