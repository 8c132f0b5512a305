#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spd/dataset.hpp"
#include "spd/divergence.hpp"
#include "spd/iddl.hpp"
#include "spd/manifold.hpp"

namespace spd {

/// alpha-beta k-means parameter variants: E ties alpha = beta to one scalar,
/// NE learns the pair independently.
enum class IdcVariant { E, NE };

struct Partition {
  std::vector<int> assignments;  // 0-based cluster ids, one per sample
  std::vector<SpdMatrix> centroids;
  AbldParams params = AbldParams::positive(1.0, 1.0);
  double mu = 1.0;  // weight of the mu * (alpha^2 + beta^2) regularizer

  int k() const { return static_cast<int>(centroids.size()); }
};

/// f3 + regularizer: sum of divergences of samples to their centroids plus
/// mu (alpha^2 + beta^2).
double idc_objective(const SpdDataset& ds, const Partition& part, int threads = 1);

/// Reassign every sample to its nearest centroid (ties to the smallest id).
Partition update_assignments(const SpdDataset& ds, Partition part, int threads = 1);

/// Bounded RCG on each non-empty cluster's centroid; empty clusters are
/// re-seeded at the sample farthest from its current centroid.
Partition update_centroids(const SpdDataset& ds, Partition part,
                           const RcgOptions& opts, int rcg_iters = 5,
                           int threads = 1);

/// Bounded SPG on (alpha, beta) (single scalar for variant E), regularizer
/// included in the objective and gradient.
Partition update_divergence_params(const SpdDataset& ds, Partition part,
                                   const SpgOptions& opts, IdcVariant variant,
                                   int spg_iters = 10, int threads = 1);

struct IdcOptions {
  int max_outer = 100;
  double stability = 0.999;  // stop when this fraction of assignments is stable
  double mu = 1.0;
  int centroid_rcg_iters = 5;
  int param_spg_iters = 10;
  int threads = 0;
  RcgOptions rcg{};
  SpgOptions spg{};
};

struct ClusterReport {
  std::vector<BlockRecord> objective_trace;  // segmented by block type
  int outer_iterations = 0;
  double final_stability = 0.0;
  std::string termination;
};

struct AbKmeansResult {
  Partition partition;
  ClusterReport report;
};

/// Joint divergence / centroid / partition learning. Centroids start from
/// log-Euclidean k-means, parameters from (1, 1).
AbKmeansResult ab_kmeans(const SpdDataset& ds, int k, IdcVariant variant,
                         uint64_t seed, const IdcOptions& opts = {});

/// Euclidean k-means in the log domain; centroids mapped back by exp.
Partition le_kmeans(const SpdDataset& ds, int k, uint64_t seed);
std::vector<SpdMatrix> le_kmeans_centroids(const SpdDataset& ds, int k,
                                           uint64_t seed);

/// Lloyd iterations under squared AIRM with Karcher-mean centroids.
Partition karcher_kmeans(const SpdDataset& ds, int k, uint64_t seed);

/// Karcher (Frechet) mean under AIRM via the fixed-point iteration.
SpdMatrix karcher_mean(const std::vector<SpdMatrix>& samples,
                       int max_iters = 50, double tol = 1e-12);

/// Pairwise F1: precision/recall of "same predicted cluster" against
/// "same true label" over all sample pairs.
double f1_score(const std::vector<int>& assignments, const std::vector<int>& labels);

}  // namespace spd
