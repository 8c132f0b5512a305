#include "spd/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "spd/parallel.hpp"
#include "spd/rng.hpp"

namespace spd {

namespace {

void check_partition(const SpdDataset& ds, const Partition& part, const char* who) {
  if (part.assignments.size() != ds.size()) {
    throw DomainError(std::string(who) + ": assignment count mismatch");
  }
  if (part.centroids.empty()) throw DomainError(std::string(who) + ": no centroids");
  for (int a : part.assignments) {
    if (a < 0 || a >= part.k()) {
      throw DomainError(std::string(who) + ": cluster index out of range");
    }
  }
  for (const auto& c : part.centroids) {
    if (c.dim() != ds.dim()) {
      throw DomainError(std::string(who) + ": centroid dimension mismatch");
    }
  }
}

double regularizer(const Partition& part) {
  if (part.params.at_origin()) return 0.0;
  return part.mu *
         (part.params.alpha * part.params.alpha + part.params.beta * part.params.beta);
}

// ---- plain Euclidean k-means (log-domain backend) --------------------------

struct EuKmeans {
  std::vector<int> assign;
  Matrix centroids;  // k x D, one centroid per row
};

std::vector<int> nearest_rows(const Matrix& pts, const Matrix& cents) {
  std::vector<int> assign(static_cast<std::size_t>(pts.rows()), 0);
  for (Index i = 0; i < pts.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (Index z = 0; z < cents.rows(); ++z) {
      const double d2 = (pts.row(i) - cents.row(z)).squaredNorm();
      if (d2 < best) {
        best = d2;
        arg = static_cast<int>(z);
      }
    }
    assign[static_cast<std::size_t>(i)] = arg;
  }
  return assign;
}

EuKmeans euclidean_kmeans(const Matrix& pts, int k, uint64_t seed,
                          int max_iters = 100) {
  const Index n = pts.rows();
  if (k < 1 || static_cast<Index>(k) > n) {
    throw DomainError("euclidean_kmeans: need 1 <= k <= N");
  }
  Rng rng(seed);

  // k-means++ seeding
  Matrix cents(k, pts.cols());
  cents.row(0) = pts.row(static_cast<Index>(rng.below(static_cast<uint64_t>(n))));
  Vector d2(n);
  for (Index i = 0; i < n; ++i) {
    d2(i) = (pts.row(i) - cents.row(0)).squaredNorm();
  }
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Index pick;
    if (total > 0.0) {
      const double r = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (Index i = 0; i < n; ++i) {
        acc += d2(i);
        if (acc >= r) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Index>(rng.below(static_cast<uint64_t>(n)));
    }
    cents.row(c) = pts.row(pick);
    for (Index i = 0; i < n; ++i) {
      d2(i) = std::min(d2(i), (pts.row(i) - cents.row(c)).squaredNorm());
    }
  }

  EuKmeans out;
  out.assign = nearest_rows(pts, cents);
  for (int it = 0; it < max_iters; ++it) {
    // means
    Matrix sums = Matrix::Zero(k, pts.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Index i = 0; i < n; ++i) {
      sums.row(out.assign[static_cast<std::size_t>(i)]) += pts.row(i);
      counts[static_cast<std::size_t>(out.assign[static_cast<std::size_t>(i)])]++;
    }
    for (int z = 0; z < k; ++z) {
      if (counts[static_cast<std::size_t>(z)] > 0) {
        cents.row(z) = sums.row(z) / counts[static_cast<std::size_t>(z)];
      } else {
        // re-seed at the point farthest from its own centroid
        Index far = 0;
        double far_d = -1.0;
        for (Index i = 0; i < n; ++i) {
          const double d = (pts.row(i) -
                            cents.row(out.assign[static_cast<std::size_t>(i)]))
                               .squaredNorm();
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        cents.row(z) = pts.row(far);
      }
    }
    std::vector<int> next = nearest_rows(pts, cents);
    const bool stable = next == out.assign;
    out.assign = std::move(next);
    if (stable) break;
  }
  out.centroids = cents;
  return out;
}

Matrix log_domain_points(const SpdDataset& ds) {
  const Index d = ds.dim();
  Matrix pts(static_cast<Index>(ds.size()), d * d);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Matrix lg = spd_log(ds.sample(i)).mat();
    for (Index r = 0; r < d; ++r) {
      pts.block(static_cast<Index>(i), r * d, 1, d) = lg.row(r);
    }
  }
  return pts;
}

std::vector<SpdMatrix> centroids_from_log_rows(const Matrix& cents, Index d) {
  std::vector<SpdMatrix> out;
  out.reserve(static_cast<std::size_t>(cents.rows()));
  for (Index z = 0; z < cents.rows(); ++z) {
    Matrix lg(d, d);
    for (Index r = 0; r < d; ++r) {
      lg.row(r) = cents.block(z, r * d, 1, d);
    }
    out.push_back(sym_exp(SymMatrix(sym(lg))));
  }
  return out;
}

double divergence_to(const SpdDataset& ds, std::size_t i, const SpdMatrix& centroid,
                     const AbldParams& p) {
  return abld_from_delta(pair_delta(ds.inv_sqrt(i), centroid.mat()), p);
}

}  // namespace

double idc_objective(const SpdDataset& ds, const Partition& part, int threads) {
  check_partition(ds, part, "idc_objective");
  std::vector<double> terms(ds.size());
  parallel_for(ds.size(), threads, [&](std::size_t i) {
    terms[i] = divergence_to(
        ds, i, part.centroids[static_cast<std::size_t>(part.assignments[i])],
        part.params);
  });
  double s = 0.0;
  for (double t : terms) s += t;
  return s + regularizer(part);
}

Partition update_assignments(const SpdDataset& ds, Partition part, int threads) {
  check_partition(ds, part, "update_assignments");
  const int k = part.k();
  parallel_for(ds.size(), threads, [&](std::size_t i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (int z = 0; z < k; ++z) {
      const double d = divergence_to(ds, i, part.centroids[static_cast<std::size_t>(z)],
                                     part.params);
      if (d < best) {
        best = d;
        arg = z;
      }
    }
    part.assignments[i] = arg;
  });
  return part;
}

Partition update_centroids(const SpdDataset& ds, Partition part,
                           const RcgOptions& opts, int rcg_iters, int threads) {
  check_partition(ds, part, "update_centroids");
  const int k = part.k();
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    members[static_cast<std::size_t>(part.assignments[i])].push_back(i);
  }

  RcgOptions ro = opts;
  ro.max_iters = rcg_iters;

  for (int z = 0; z < k; ++z) {
    const auto& mem = members[static_cast<std::size_t>(z)];
    if (mem.empty()) {
      // objective-neutral re-seed: move the unused centroid onto the sample
      // farthest from its current centroid
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < ds.size(); ++i) {
        const double d = divergence_to(
            ds, i, part.centroids[static_cast<std::size_t>(part.assignments[i])],
            part.params);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      part.centroids[static_cast<std::size_t>(z)] = ds.sample(far);
      continue;
    }
    SpdObjective obj = [&](const SpdMatrix& c) {
      std::vector<double> terms(mem.size());
      parallel_for(mem.size(), threads, [&](std::size_t j) {
        terms[j] = divergence_to(ds, mem[j], c, part.params);
      });
      double s = 0.0;
      for (double t : terms) s += t;
      return s;
    };
    SpdGradient egrad = [&](const SpdMatrix& c) {
      std::vector<Matrix> gs(mem.size());
      parallel_for(mem.size(), threads, [&](std::size_t j) {
        const PairEig e = pair_eig(ds.inv_sqrt(mem[j]), c.mat());
        gs[j] = abld_grad_y_from_eig(ds.inv_sqrt(mem[j]), e, part.params);
      });
      Matrix g = Matrix::Zero(ds.dim(), ds.dim());
      for (const auto& m : gs) g += m;
      return SymMatrix(sym(g));
    };
    part.centroids[static_cast<std::size_t>(z)] =
        rcg_minimize(obj, egrad, part.centroids[static_cast<std::size_t>(z)], ro)
            .minimizer;
  }
  return part;
}

Partition update_divergence_params(const SpdDataset& ds, Partition part,
                                   const SpgOptions& opts, IdcVariant variant,
                                   int spg_iters, int threads) {
  check_partition(ds, part, "update_divergence_params");
  if (part.params.at_origin()) {
    throw DomainError("update_divergence_params: params frozen at origin");
  }
  // spectra against assigned centroids are independent of (alpha, beta)
  std::vector<Vector> deltas(ds.size());
  parallel_for(ds.size(), threads, [&](std::size_t i) {
    deltas[i] = pair_delta(
        ds.inv_sqrt(i),
        part.centroids[static_cast<std::size_t>(part.assignments[i])].mat());
  });

  const double mu = part.mu;
  auto params_of = [&](const Vector& th) {
    return variant == IdcVariant::E ? AbldParams::positive(th(0), th(0))
                                    : AbldParams::positive(th(0), th(1));
  };
  VecObjective obj = [&](const Vector& th) {
    const AbldParams p = params_of(th);
    double s = 0.0;
    for (const auto& delta : deltas) s += abld_from_delta(delta, p);
    return s + mu * (p.alpha * p.alpha + p.beta * p.beta);
  };
  VecGradient grad = [&](const Vector& th) {
    const AbldParams p = params_of(th);
    double da = 2.0 * mu * p.alpha;
    double db = 2.0 * mu * p.beta;
    for (const auto& delta : deltas) {
      da += abld_grad_alpha_from_gen_eigs(delta.cwiseInverse(), p.alpha, p.beta);
      db += abld_grad_alpha_from_gen_eigs(delta, p.beta, p.alpha);
    }
    if (variant == IdcVariant::E) {
      Vector g(1);
      g << da + db;
      return g;
    }
    Vector g(2);
    g << da, db;
    return g;
  };

  SpgOptions so = opts;
  so.max_iters = spg_iters;
  so.projection = SpgProjection{OrthantSign::Positive, kEpsMin};
  Vector th0;
  if (variant == IdcVariant::E) {
    th0 = Vector(1);
    th0 << part.params.alpha;
  } else {
    th0 = Vector(2);
    th0 << part.params.alpha, part.params.beta;
  }
  const Vector th = spg_minimize(obj, grad, th0, so);
  part.params = params_of(th);
  return part;
}

AbKmeansResult ab_kmeans(const SpdDataset& ds, int k, IdcVariant variant,
                         uint64_t seed, const IdcOptions& opts) {
  if (k < 1 || static_cast<std::size_t>(k) > ds.size()) {
    throw DomainError("ab_kmeans: need 1 <= k <= N");
  }
  const int threads = resolve_threads(opts.threads);

  Partition part;
  const Partition le = le_kmeans(ds, k, seed);
  part.centroids = le.centroids;
  part.assignments = le.assignments;
  part.params = AbldParams::positive(1.0, 1.0);
  part.mu = opts.mu;

  AbKmeansResult out;
  out.report.objective_trace.push_back({"init", idc_objective(ds, part, threads)});

  for (int outer = 0; outer < opts.max_outer; ++outer) {
    part = update_centroids(ds, part, opts.rcg, opts.centroid_rcg_iters, threads);
    out.report.objective_trace.push_back(
        {"centroids", idc_objective(ds, part, threads)});

    part = update_divergence_params(ds, part, opts.spg, variant,
                                    opts.param_spg_iters, threads);
    out.report.objective_trace.push_back(
        {"params", idc_objective(ds, part, threads)});

    const std::vector<int> prev = part.assignments;
    part = update_assignments(ds, part, threads);
    out.report.objective_trace.push_back(
        {"assignments", idc_objective(ds, part, threads)});

    int unchanged = 0;
    for (std::size_t i = 0; i < prev.size(); ++i) {
      if (prev[i] == part.assignments[i]) ++unchanged;
    }
    out.report.final_stability =
        static_cast<double>(unchanged) / static_cast<double>(prev.size());
    out.report.outer_iterations = outer + 1;
    if (out.report.final_stability >= opts.stability) {
      out.report.termination = "assignments_stable";
      break;
    }
  }
  if (out.report.termination.empty()) out.report.termination = "max_outer_iterations";
  out.partition = std::move(part);
  return out;
}

std::vector<SpdMatrix> le_kmeans_centroids(const SpdDataset& ds, int k,
                                           uint64_t seed) {
  const EuKmeans km = euclidean_kmeans(log_domain_points(ds), k, seed);
  return centroids_from_log_rows(km.centroids, ds.dim());
}

Partition le_kmeans(const SpdDataset& ds, int k, uint64_t seed) {
  const EuKmeans km = euclidean_kmeans(log_domain_points(ds), k, seed);
  Partition part;
  part.assignments = km.assign;
  part.centroids = centroids_from_log_rows(km.centroids, ds.dim());
  return part;
}

SpdMatrix karcher_mean(const std::vector<SpdMatrix>& samples, int max_iters,
                       double tol) {
  if (samples.empty()) throw DomainError("karcher_mean: no samples");
  const Index d = samples.front().dim();
  // log-Euclidean mean as the starting point
  Matrix acc = Matrix::Zero(d, d);
  for (const auto& s : samples) acc += spd_log(s).mat();
  SpdMatrix c = sym_exp(SymMatrix(sym(acc / static_cast<double>(samples.size()))));

  for (int it = 0; it < max_iters; ++it) {
    const Matrix ch = spd_sqrt(c).mat();
    const Matrix cih = spd_inv_sqrt(c).mat();
    Matrix t = Matrix::Zero(d, d);
    for (const auto& s : samples) {
      t += spd_log(SpdMatrix::unchecked(sym(cih * s.mat() * cih))).mat();
    }
    t /= static_cast<double>(samples.size());
    c = SpdMatrix::unchecked(ch * sym_exp(SymMatrix(sym(t))).mat() * ch);
    if (t.norm() <= tol * std::max(1.0, spd_log(c).mat().norm())) break;
  }
  return c;
}

Partition karcher_kmeans(const SpdDataset& ds, int k, uint64_t seed) {
  if (k < 1 || static_cast<std::size_t>(k) > ds.size()) {
    throw DomainError("karcher_kmeans: need 1 <= k <= N");
  }
  const std::size_t n = ds.size();
  Rng rng(seed);
  const AbldParams airm = AbldParams::origin();

  // k-means++ style seeding under squared AIRM
  std::vector<SpdMatrix> cents;
  cents.reserve(static_cast<std::size_t>(k));
  cents.push_back(ds.sample(rng.below(n)));
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = divergence_to(ds, i, cents[0], airm);
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t pick = n - 1;
    if (total > 0.0) {
      const double r = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc >= r) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.below(n);
    }
    cents.push_back(ds.sample(pick));
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], divergence_to(ds, i, cents.back(), airm));
    }
  }

  std::vector<int> assign(n, 0);
  for (int it = 0; it < 100; ++it) {
    std::vector<int> next(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int z = 0; z < k; ++z) {
        const double d = divergence_to(ds, i, cents[static_cast<std::size_t>(z)], airm);
        if (d < best) {
          best = d;
          next[i] = z;
        }
      }
    }
    const bool stable = (it > 0) && next == assign;
    assign = std::move(next);
    if (stable) break;

    for (int z = 0; z < k; ++z) {
      std::vector<SpdMatrix> members;
      for (std::size_t i = 0; i < n; ++i) {
        if (assign[i] == z) members.push_back(ds.sample(i));
      }
      if (members.empty()) {
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = divergence_to(
              ds, i, cents[static_cast<std::size_t>(assign[i])], airm);
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        cents[static_cast<std::size_t>(z)] = ds.sample(far);
      } else {
        cents[static_cast<std::size_t>(z)] = karcher_mean(members);
      }
    }
  }

  Partition part;
  part.assignments = std::move(assign);
  part.centroids = std::move(cents);
  part.params = AbldParams::origin();
  return part;
}

double f1_score(const std::vector<int>& assignments, const std::vector<int>& labels) {
  if (assignments.size() != labels.size()) {
    throw DomainError("f1_score: length mismatch");
  }
  std::map<std::pair<int, int>, long long> cell;
  std::map<int, long long> by_cluster, by_label;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    cell[{assignments[i], labels[i]}]++;
    by_cluster[assignments[i]]++;
    by_label[labels[i]]++;
  }
  auto pairs = [](long long c) { return c * (c - 1) / 2; };
  long long tp = 0, pred_pos = 0, true_pos = 0;
  for (const auto& [key, c] : cell) tp += pairs(c);
  for (const auto& [key, c] : by_cluster) pred_pos += pairs(c);
  for (const auto& [key, c] : by_label) true_pos += pairs(c);
  if (pred_pos == 0 || true_pos == 0 || tp == 0) return 0.0;
  const double p = static_cast<double>(tp) / static_cast<double>(pred_pos);
  const double r = static_cast<double>(tp) / static_cast<double>(true_pos);
  return 2.0 * p * r / (p + r);
}

}  // namespace spd
