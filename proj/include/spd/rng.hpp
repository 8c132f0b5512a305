#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "spd/linalg.hpp"

namespace spd {

/// Deterministic RNG: mt19937_64 with hand-rolled distributions, so that a
/// seed reproduces the same stream on every platform / standard library.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double log_uniform(double lo, double hi) {
    return std::exp(uniform(std::log(lo), std::log(hi)));
  }

  /// Standard normal via Box-Muller with a cached spare.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    const double t = 2.0 * M_PI * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  /// Uniform integer in [0, n).
  uint64_t below(uint64_t n) {
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  Matrix normal_matrix(Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) m(i, j) = normal();
    return m;
  }

  /// Haar-ish random orthogonal matrix via QR with the sign convention
  /// diag(R) > 0 (makes the result a deterministic function of the input).
  Matrix orthogonal(Index d) {
    const Matrix g = normal_matrix(d, d);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Index i = 0; i < d; ++i) {
      if (r(i, i) < 0.0) q.col(i) = -q.col(i);
    }
    return q;
  }

  /// Random SPD matrix with a random orthogonal eigenbasis and log-uniform
  /// spectrum in [ev_lo, ev_hi].
  SpdMatrix spd(Index d, double ev_lo = 0.5, double ev_hi = 2.0) {
    const Matrix q = orthogonal(d);
    Vector ev(d);
    for (Index i = 0; i < d; ++i) ev(i) = log_uniform(ev_lo, ev_hi);
    return SpdMatrix::unchecked(q * ev.asDiagonal() * q.transpose());
  }

  SymMatrix symmetric(Index d, double scale = 1.0) {
    return SymMatrix(sym(scale * normal_matrix(d, d)));
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace spd
