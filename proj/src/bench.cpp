#include "spd/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>

#include "spd/dataset.hpp"
#include "spd/divergence.hpp"
#include "spd/rng.hpp"

namespace spd {

namespace {

using Clock = std::chrono::steady_clock;

double time_once(const std::function<void()>& fn) {
  const auto t0 = Clock::now();
  fn();
  const auto t1 = Clock::now();
  return std::chrono::duration<double>(t1 - t0).count();
}

/// Median of enough repetitions to spend ~30 ms per measurement point.
double measure(const std::function<void()>& fn) {
  fn();  // warm-up
  const double est = std::max(time_once(fn), 1e-7);
  const int reps = std::clamp(static_cast<int>(0.03 / est), 3, 200);
  std::vector<double> times(static_cast<std::size_t>(reps));
  for (auto& t : times) t = time_once(fn);
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

volatile double g_sink = 0.0;

}  // namespace

std::vector<BenchRow> run_bench(uint64_t seed) {
  std::vector<BenchRow> rows;
  const int nsamp = 32;
  const AbldParams p = AbldParams::positive(0.9, 1.2);

  for (int d : {8, 16, 32, 64}) {
    Rng rng(seed ^ static_cast<uint64_t>(d));
    std::vector<SpdMatrix> samples;
    for (int i = 0; i < nsamp; ++i) samples.push_back(rng.spd(d));
    const SpdDataset ds(std::move(samples));
    const SpdMatrix atom = rng.spd(d);

    rows.push_back({"atom_grad_vs_d", static_cast<double>(d), measure([&] {
                      Matrix g = Matrix::Zero(d, d);
                      for (std::size_t i = 0; i < ds.size(); ++i) {
                        const PairEig e = pair_eig(ds.inv_sqrt(i), atom.mat());
                        g += abld_grad_y_from_eig(ds.inv_sqrt(i), e, p);
                      }
                      g_sink = g(0, 0);
                    })});
    rows.push_back({"param_grad_vs_d", static_cast<double>(d), measure([&] {
                      double da = 0.0, db = 0.0;
                      for (std::size_t i = 0; i < ds.size(); ++i) {
                        const Vector delta = pair_delta(ds.inv_sqrt(i), atom.mat());
                        da += abld_grad_alpha_from_gen_eigs(delta.cwiseInverse(),
                                                            p.alpha, p.beta);
                        db += abld_grad_alpha_from_gen_eigs(delta, p.beta, p.alpha);
                      }
                      g_sink = da + db;
                    })});
  }

  {
    const int d = 16;
    Rng rng(seed ^ 0x9e3779b9ull);
    std::vector<SpdMatrix> samples;
    for (int i = 0; i < nsamp; ++i) samples.push_back(rng.spd(d));
    const SpdDataset ds(std::move(samples));
    for (int n : {4, 8, 16, 32}) {
      std::vector<SpdMatrix> atoms;
      for (int k = 0; k < n; ++k) atoms.push_back(rng.spd(d));
      rows.push_back({"atom_grad_vs_n", static_cast<double>(n), measure([&] {
                        Matrix g = Matrix::Zero(d, d);
                        for (const auto& atom : atoms) {
                          for (std::size_t i = 0; i < ds.size(); ++i) {
                            const PairEig e = pair_eig(ds.inv_sqrt(i), atom.mat());
                            g += abld_grad_y_from_eig(ds.inv_sqrt(i), e, p);
                          }
                        }
                        g_sink = g(0, 0);
                      })});
    }
  }
  return rows;
}

double fit_loglog_slope(const std::vector<BenchRow>& rows, const std::string& family) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int n = 0;
  for (const auto& r : rows) {
    if (r.family != family) continue;
    const double x = std::log(r.size);
    const double y = std::log(r.seconds);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) throw DomainError("fit_loglog_slope: not enough points for '" + family + "'");
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace spd
