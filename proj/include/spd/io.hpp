#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "spd/iddl.hpp"
#include "spd/linalg.hpp"

namespace spd {

/// Binary SPD dataset container ("SPD1"), little-endian:
///   magic[4] = "SPD1", u32 version = 1, u64 N, u32 d, u8 has_labels,
///   N * d * d float64 (row-major per matrix), then N * int32 labels if
///   has_labels. Round-trips are bit-exact.
struct DatasetContent {
  std::vector<SpdMatrix> samples;
  std::vector<int> labels;  // empty when the file carries none

  bool has_labels() const { return !labels.empty(); }
};

void write_dataset(const std::filesystem::path& path,
                   const std::vector<SpdMatrix>& samples,
                   const std::vector<int>& labels = {});
DatasetContent read_dataset(const std::filesystem::path& path);

/// Binary model container ("ABM1"), little-endian:
///   magic[4] = "ABM1", u32 version = 1, u32 d, u32 n_atoms, u8 tying,
///   u8 loss, f64 gamma, f64 margin,
///   atoms: n * d * d float64 row-major,
///   params: n * (f64 alpha, f64 beta, u8 orthant),
///   W: u32 rows, u32 cols, rows * cols float64 row-major,
///   metadata: u64 length, UTF-8 JSON bytes.
void write_model(const std::filesystem::path& path, const IddlModel& model,
                 const std::string& metadata_json = "{}");

struct ModelContent {
  IddlModel model;
  std::string metadata_json;
};

ModelContent read_model(const std::filesystem::path& path);

}  // namespace spd
