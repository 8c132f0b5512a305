#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace spd {

struct BenchRow {
  std::string family;
  double size = 0.0;     // d or n
  double seconds = 0.0;  // median time of one gradient pass
};

/// Times per-atom gradient and parameter-gradient passes against matrix
/// dimension and against atom count. Input data is seeded; timings are not.
std::vector<BenchRow> run_bench(uint64_t seed);

/// Least-squares slope of log(seconds) against log(size).
double fit_loglog_slope(const std::vector<BenchRow>& rows, const std::string& family);

}  // namespace spd
