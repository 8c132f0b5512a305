#include <cmath>

#include "spd/clustering.hpp"
#include "spd/rng.hpp"
#include "spd/synth.hpp"
#include "doctest.h"

using namespace spd;

namespace {

SpdMatrix diag2(double a, double b) {
  Vector v(2);
  v << a, b;
  return SpdMatrix::validated(Matrix(v.asDiagonal()));
}

Partition make_partition(const SpdDataset& ds, std::vector<SpdMatrix> cents,
                         std::vector<int> assign, double mu = 1.0) {
  Partition part;
  part.centroids = std::move(cents);
  part.assignments = std::move(assign);
  part.params = AbldParams::positive(1.0, 1.0);
  part.mu = mu;
  (void)ds;
  return part;
}

}  // namespace

TEST_CASE("clustering objective") {
  Rng rng(71);
  std::vector<SpdMatrix> samples{rng.spd(3), rng.spd(3), rng.spd(3)};
  const SpdDataset ds(samples);

  SUBCASE("samples sitting on their centroids cost only the regularizer") {
    Partition part = make_partition(ds, {samples[0], samples[1]}, {0, 1, 1}, 0.0);
    part.assignments = {0, 1, 1};
    part.centroids = {samples[0], samples[1]};
    // third sample is not on its centroid; use a two-sample set instead
    const SpdDataset two({samples[0], samples[1]});
    Partition p2 = make_partition(two, {samples[0], samples[1]}, {0, 1}, 0.0);
    CHECK(idc_objective(two, p2) <= 1e-10);

    p2.mu = 3.0;  // alpha = beta = 1 adds mu * 2
    CHECK(idc_objective(two, p2) == doctest::Approx(6.0).epsilon(1e-12));
  }
  SUBCASE("matches a naive evaluation") {
    Partition part = make_partition(ds, {rng.spd(3), rng.spd(3)}, {1, 0, 1}, 0.7);
    double naive = 0.7 * 2.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      naive += abld(ds.sample(i),
                    part.centroids[static_cast<std::size_t>(part.assignments[i])],
                    part.params);
    }
    CHECK(idc_objective(ds, part) == doctest::Approx(naive).epsilon(1e-12));
  }
}

TEST_CASE("assignment updates") {
  Rng rng(72);
  std::vector<SpdMatrix> cents{rng.spd(3), rng.spd(3), rng.spd(3)};
  std::vector<SpdMatrix> samples{cents[2], rng.spd(3), rng.spd(3), rng.spd(3)};
  const SpdDataset ds(samples);

  SUBCASE("a sample equal to a centroid joins that cluster") {
    Partition part = make_partition(ds, cents, {0, 0, 0, 0});
    part = update_assignments(ds, part);
    CHECK(part.assignments[0] == 2);
  }
  SUBCASE("duplicate centroids resolve to the smaller index") {
    Partition part = make_partition(ds, {cents[2], cents[2]}, {1, 1, 1, 1});
    part = update_assignments(ds, part);
    CHECK(part.assignments[0] == 0);
  }
  SUBCASE("agrees with exhaustive argmin and is idempotent") {
    Partition part = make_partition(ds, cents, {0, 0, 0, 0});
    part = update_assignments(ds, part);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      int best = 0;
      double best_d = 1e300;
      for (int z = 0; z < part.k(); ++z) {
        const double d =
            abld(ds.sample(i), part.centroids[static_cast<std::size_t>(z)],
                 part.params);
        if (d < best_d) {
          best_d = d;
          best = z;
        }
      }
      CHECK(part.assignments[i] == best);
    }
    const Partition again = update_assignments(ds, part);
    CHECK(again.assignments == part.assignments);
  }
  SUBCASE("assignment update never increases the objective") {
    Partition part = make_partition(ds, cents, {0, 1, 2, 0});
    const double before = idc_objective(ds, part);
    part = update_assignments(ds, part);
    CHECK(idc_objective(ds, part) <= before + 1e-12);
  }
}

TEST_CASE("centroid updates") {
  Rng rng(73);

  SUBCASE("single-member cluster pulls the centroid onto the member") {
    std::vector<SpdMatrix> samples{rng.spd(3)};
    const SpdDataset ds(samples);
    Partition part = make_partition(ds, {rng.spd(3)}, {0});
    double obj = idc_objective(ds, part);
    for (int round = 0; round < 20; ++round) {
      part = update_centroids(ds, part, RcgOptions{}, 10);
      const double next = idc_objective(ds, part);
      CHECK(next <= obj + 1e-10);
      obj = next;
    }
    CHECK(abld(ds.sample(0), part.centroids[0], part.params) <= 1e-6);
  }
  SUBCASE("origin parameters recover the geodesic midpoint of two members") {
    std::vector<SpdMatrix> samples{diag2(1, 4), diag2(9, 16)};
    const SpdDataset ds(samples);
    Partition part;
    part.centroids = {SpdMatrix::identity(2)};
    part.assignments = {0, 0};
    part.params = AbldParams::origin();
    part.mu = 1.0;
    for (int round = 0; round < 40; ++round) {
      part = update_centroids(ds, part, RcgOptions{}, 10);
    }
    CHECK((part.centroids[0].mat() - diag2(3, 8).mat()).norm() <= 1e-5);
  }
  SUBCASE("an already optimal centroid stays put") {
    std::vector<SpdMatrix> samples{rng.spd(3)};
    const SpdDataset ds(samples);
    Partition part = make_partition(ds, {samples[0]}, {0});
    part = update_centroids(ds, part, RcgOptions{}, 5);
    CHECK((part.centroids[0].mat() - samples[0].mat()).norm() <=
          1e-8 * samples[0].mat().norm());
  }
  SUBCASE("empty clusters are re-seeded without changing the objective") {
    std::vector<SpdMatrix> samples{rng.spd(3), rng.spd(3)};
    const SpdDataset ds(samples);
    Partition part = make_partition(ds, {samples[0], samples[1], rng.spd(3)}, {0, 1});
    const double before = idc_objective(ds, part);
    part = update_centroids(ds, part, RcgOptions{}, 3);
    CHECK(idc_objective(ds, part) <= before + 1e-10);
    // the empty third centroid moved onto one of the samples
    double best = 1e300;
    for (const auto& s : samples) {
      best = std::min(best, (part.centroids[2].mat() - s.mat()).norm());
    }
    CHECK(best == 0.0);
  }
}

TEST_CASE("divergence parameter updates") {
  Rng rng(74);
  std::vector<SpdMatrix> samples;
  for (int i = 0; i < 6; ++i) samples.push_back(rng.spd(3));
  const SpdDataset ds(samples);
  Partition part = make_partition(ds, {rng.spd(3), rng.spd(3)}, {0, 1, 0, 1, 0, 1});

  SUBCASE("a huge regularizer drives the parameters to the boundary") {
    part.mu = 1e9;
    part = update_divergence_params(ds, part, SpgOptions{}, IdcVariant::NE, 50);
    CHECK(part.params.alpha == doctest::Approx(kEpsMin));
    CHECK(part.params.beta == doctest::Approx(kEpsMin));
  }
  SUBCASE("objective never increases and a second pass barely moves") {
    const double before = idc_objective(ds, part);
    part = update_divergence_params(ds, part, SpgOptions{}, IdcVariant::NE, 30);
    const double mid = idc_objective(ds, part);
    CHECK(mid <= before + 1e-10);
    const double a1 = part.params.alpha;
    part = update_divergence_params(ds, part, SpgOptions{}, IdcVariant::NE, 30);
    CHECK(idc_objective(ds, part) <= mid + 1e-10);
    CHECK(std::abs(part.params.alpha - a1) <= 0.05 * std::max(1.0, std::abs(a1)));
  }
  SUBCASE("variant E keeps alpha equal to beta") {
    part = update_divergence_params(ds, part, SpgOptions{}, IdcVariant::E, 20);
    CHECK(part.params.alpha == part.params.beta);
  }
}

TEST_CASE("joint clustering on synthetic Wishart clusters") {
  // clearly separated clusters: higher dof tightens them around their scales
  const LabeledSpdDataset data = wishart_synth({3, 5, 20, 40, 501});
  const SpdDataset ds(data.samples());

  IdcOptions opts;
  opts.threads = 1;
  double f1_ab_sum = 0.0, f1_le_sum = 0.0;
  for (uint64_t seed : {1ull, 2ull, 3ull}) {
    const AbKmeansResult res = ab_kmeans(ds, 3, IdcVariant::NE, seed, opts);
    f1_ab_sum += f1_score(res.partition.assignments, data.labels());
    const Partition le = le_kmeans(ds, 3, seed);
    f1_le_sum += f1_score(le.assignments, data.labels());

    const auto& tr = res.report.objective_trace;
    for (std::size_t i = 1; i < tr.size(); ++i) {
      CHECK(tr[i].objective <=
            tr[i - 1].objective + 1e-9 * std::max(1.0, std::abs(tr[i - 1].objective)));
    }
    CHECK(res.report.outer_iterations <= opts.max_outer);
    CHECK((res.report.termination == "assignments_stable" ||
           res.report.termination == "max_outer_iterations"));
  }
  CHECK(f1_ab_sum >= f1_le_sum - 1e-9);
}

TEST_CASE("joint clustering edge cases") {
  Rng rng(75);

  SUBCASE("k = 1 reduces to a generalized mean") {
    std::vector<SpdMatrix> samples{diag2(1, 4), diag2(9, 16)};
    const SpdDataset ds(samples);
    IdcOptions opts;
    opts.max_outer = 30;
    const AbKmeansResult res = ab_kmeans(ds, 1, IdcVariant::E, 0, opts);
    CHECK(res.partition.assignments == std::vector<int>{0, 0});
    CHECK(res.report.termination == "assignments_stable");
    // the centroid lies between the two samples
    const double d0 = abld(samples[0], res.partition.centroids[0], res.partition.params);
    const double d1 = abld(samples[1], res.partition.centroids[0], res.partition.params);
    CHECK(d0 > 0.0);
    CHECK(d1 > 0.0);
  }
  SUBCASE("k = N leaves only the regularizer") {
    std::vector<SpdMatrix> samples{rng.spd(3), rng.spd(3), rng.spd(3)};
    const SpdDataset ds(samples);
    IdcOptions opts;
    opts.mu = 0.5;
    const AbKmeansResult res = ab_kmeans(ds, 3, IdcVariant::NE, 4, opts);
    const double reg = res.partition.mu * (res.partition.params.alpha *
                                               res.partition.params.alpha +
                                           res.partition.params.beta *
                                               res.partition.params.beta);
    CHECK(res.report.objective_trace.back().objective ==
          doctest::Approx(reg).epsilon(1e-6));
  }
}

TEST_CASE("log-Euclidean k-means") {
  SUBCASE("identical samples collapse the centroids") {
    const SpdMatrix s = diag2(2.0, 0.5);
    const SpdDataset ds(std::vector<SpdMatrix>(4, s));
    const Partition part = le_kmeans(ds, 2, 9);
    for (const auto& c : part.centroids) {
      CHECK((c.mat() - s.mat()).norm() <= 1e-12 * s.mat().norm());
    }
  }
  SUBCASE("k = 1 centroid is the exp of the mean log") {
    const SpdDataset ds({diag2(1, 1), diag2(std::exp(2.0), std::exp(2.0))});
    const Partition part = le_kmeans(ds, 1, 0);
    const Matrix expected = std::exp(1.0) * Matrix::Identity(2, 2);
    CHECK((part.centroids[0].mat() - expected).norm() <= 1e-10);
  }
}

TEST_CASE("Karcher machinery") {
  Rng rng(76);
  const SpdMatrix x = rng.spd(4);
  const SpdMatrix y = rng.spd(4);

  SUBCASE("mean of two matrices is the geodesic midpoint") {
    const Matrix xh = spd_sqrt(x).mat();
    const Matrix xih = spd_inv_sqrt(x).mat();
    const Matrix mid =
        xh * spd_sqrt(SpdMatrix::unchecked(sym(xih * y.mat() * xih))).mat() * xh;
    const SpdMatrix km = karcher_mean({x, y});
    CHECK((km.mat() - mid).norm() <= 1e-6 * mid.norm());
  }
  SUBCASE("k-means over tight clusters recovers them") {
    const LabeledSpdDataset data = wishart_synth({2, 4, 10, 32, 502});
    const SpdDataset ds(data.samples());
    const Partition part = karcher_kmeans(ds, 2, 1);
    CHECK(f1_score(part.assignments, data.labels()) >= 0.9);
  }
}

TEST_CASE("pairwise F1") {
  SUBCASE("perfect clustering scores one") {
    CHECK(f1_score({0, 0, 1, 1}, {1, 1, 2, 2}) == doctest::Approx(1.0));
  }
  SUBCASE("one big cluster on a balanced two-class truth") {
    // P = 2/6, R = 1 -> F1 = 0.5
    CHECK(f1_score({0, 0, 0, 0}, {1, 1, 2, 2}) == doctest::Approx(0.5));
  }
  SUBCASE("invariant under relabeling of cluster ids") {
    CHECK(f1_score({5, 5, 2, 2}, {1, 1, 2, 2}) == doctest::Approx(1.0));
    const double a = f1_score({0, 1, 0, 1, 1}, {1, 1, 2, 2, 2});
    const double b = f1_score({1, 0, 1, 0, 0}, {1, 1, 2, 2, 2});
    CHECK(a == doctest::Approx(b));
  }
  SUBCASE("degenerate inputs score zero") {
    CHECK(f1_score({0, 1, 2}, {1, 1, 1}) == 0.0);  // no predicted positives
    CHECK(f1_score({0, 0}, {1, 2}) == 0.0);        // no true positives
  }
}
