#pragma once

#include <vector>

#include "spd/linalg.hpp"

namespace spd {

/// A set of same-dimension SPD samples with the caches every trainer needs:
/// X^{-1} and X^{-1/2} per sample (built once from a single eigendecomposition
/// that also re-validates positive definiteness).
class SpdDataset {
 public:
  explicit SpdDataset(std::vector<SpdMatrix> samples,
                      double pd_floor = kDefaultPdFloor);

  std::size_t size() const { return samples_.size(); }
  Index dim() const { return dim_; }
  const SpdMatrix& sample(std::size_t i) const { return samples_[i]; }
  const std::vector<SpdMatrix>& samples() const { return samples_; }
  const Matrix& inv(std::size_t i) const { return inv_[i]; }
  const Matrix& inv_sqrt(std::size_t i) const { return inv_sqrt_[i]; }

 private:
  std::vector<SpdMatrix> samples_;
  std::vector<Matrix> inv_;
  std::vector<Matrix> inv_sqrt_;
  Index dim_ = 0;
};

/// SpdDataset plus class labels in the contiguous range {1..L}.
class LabeledSpdDataset : public SpdDataset {
 public:
  LabeledSpdDataset(std::vector<SpdMatrix> samples, std::vector<int> labels,
                    double pd_floor = kDefaultPdFloor);

  const std::vector<int>& labels() const { return labels_; }
  int label(std::size_t i) const { return labels_[i]; }
  int num_classes() const { return num_classes_; }

 private:
  std::vector<int> labels_;
  int num_classes_ = 0;
};

}  // namespace spd
