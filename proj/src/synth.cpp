#include "spd/synth.hpp"

#include <cmath>

#include "spd/rng.hpp"

namespace spd {

LabeledSpdDataset wishart_synth(const WishartSpec& spec) {
  if (spec.k < 1 || spec.d < 1 || spec.n_per < 1) {
    throw DomainError("wishart_synth: k, d, n_per must be positive");
  }
  const int dof = spec.effective_dof();
  if (dof < spec.d) {
    throw DomainError("wishart_synth: dof must be at least d");
  }
  Rng rng(spec.seed);
  std::vector<SpdMatrix> samples;
  std::vector<int> labels;
  samples.reserve(static_cast<std::size_t>(spec.k) * spec.n_per);
  labels.reserve(samples.capacity());

  for (int z = 0; z < spec.k; ++z) {
    const Matrix q = rng.orthogonal(spec.d);
    Vector ev(spec.d);
    for (int j = 0; j < spec.d; ++j) ev(j) = rng.log_uniform(0.5, 2.0);
    const Matrix scale_sqrt =
        q * ev.cwiseSqrt().asDiagonal() * q.transpose();  // Sigma^{1/2}
    for (int s = 0; s < spec.n_per; ++s) {
      const Matrix g = rng.normal_matrix(dof, spec.d) * scale_sqrt;
      const Matrix w = sym(g.transpose() * g / static_cast<double>(dof));
      samples.push_back(SpdMatrix::unchecked(w));
      labels.push_back(z + 1);
    }
  }
  return LabeledSpdDataset(std::move(samples), std::move(labels));
}

SpdMatrix cov_descriptor(const Matrix& features, double jitter) {
  if (features.rows() < 2) {
    throw DomainError("cov_descriptor: need at least two feature rows");
  }
  if (jitter < 0.0) throw DomainError("cov_descriptor: jitter must be non-negative");
  const Index m = features.rows();
  const Eigen::RowVectorXd mean = features.colwise().mean();
  const Matrix centered = features.rowwise() - mean;
  Matrix c = centered.transpose() * centered / static_cast<double>(m - 1);
  c += jitter * Matrix::Identity(c.rows(), c.cols());
  return SpdMatrix::validated(sym(c));
}

double normalize_dataset(std::vector<SpdMatrix>& samples, double target) {
  if (!(target > 0.0)) throw DomainError("normalize_dataset: target must be positive");
  if (samples.empty()) return 1.0;
  double max_norm = 0.0;
  for (const auto& s : samples) {
    const Vector ev = sym_eigvals(s.mat());
    max_norm = std::max(max_norm, ev(ev.size() - 1));
  }
  const double scale = target / max_norm;
  for (auto& s : samples) {
    s = SpdMatrix::unchecked(scale * s.mat());
  }
  return scale;
}

}  // namespace spd
