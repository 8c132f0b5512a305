#pragma once

#include <cstdint>
#include <vector>

#include "spd/dataset.hpp"

namespace spd {

/// Synthetic Wishart cluster generator. Each cluster gets a random SPD scale
/// matrix (random orthogonal basis, log-uniform spectrum in [0.5, 2]); samples
/// are (1/dof) * (G S^{1/2})^T (G S^{1/2}) for standard-normal G (dof x d).
struct WishartSpec {
  int k = 1;
  int d = 2;
  int n_per = 1;
  int dof = 0;  // 0 -> 2 * d
  uint64_t seed = 0;

  int effective_dof() const { return dof > 0 ? dof : 2 * d; }
};

LabeledSpdDataset wishart_synth(const WishartSpec& spec);

/// Sample covariance of the rows of `features` (m x f) plus jitter * I.
SpdMatrix cov_descriptor(const Matrix& features, double jitter);

/// Scale all matrices by one global constant so the maximum spectral norm
/// equals `target`. Divergence values are unchanged by scaling invariance.
/// Returns the scale that was applied.
double normalize_dataset(std::vector<SpdMatrix>& samples, double target = 1.0);

}  // namespace spd
