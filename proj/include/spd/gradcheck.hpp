#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "spd/linalg.hpp"

namespace spd {

/// Central finite difference of a scalar function along symmetric coordinate
/// directions, reconstructed into a full gradient matrix.
Matrix fd_sym_grad(const std::function<double(const Matrix&)>& f, const Matrix& at,
                   double h = 1e-6);

double fd_scalar(const std::function<double(double)>& f, double at, double h = 1e-5);

struct GradAuditFamily {
  std::string name;
  double max_rel_err = 0.0;
  int trials = 0;
};

struct GradAuditReport {
  std::vector<GradAuditFamily> families;

  double worst() const;
  bool ok(double tol = 1e-4) const { return worst() <= tol; }
};

/// Compares every analytic gradient family against central finite differences
/// on seeded random instances. `trials = 0` yields an empty, passing report.
GradAuditReport gradient_audit(uint64_t seed, int trials);

}  // namespace spd
