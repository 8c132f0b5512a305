#include "spd/io.hpp"

#include <cstring>
#include <fstream>

namespace spd {

namespace {

void write_bytes(std::ofstream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

template <typename T>
void write_pod(std::ofstream& out, T v) {
  write_bytes(out, &v, sizeof(T));
}

void read_bytes(std::ifstream& in, void* p, std::size_t n, const char* what) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (in.gcount() != static_cast<std::streamsize>(n)) {
    throw DataError(std::string("truncated file while reading ") + what);
  }
}

template <typename T>
T read_pod(std::ifstream& in, const char* what) {
  T v{};
  read_bytes(in, &v, sizeof(T), what);
  return v;
}

void write_matrix(std::ofstream& out, const Matrix& m) {
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RowMajor rm = m;
  write_bytes(out, rm.data(), sizeof(double) * static_cast<std::size_t>(rm.size()));
}

Matrix read_matrix(std::ifstream& in, Index rows, Index cols, const char* what) {
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  RowMajor rm(rows, cols);
  read_bytes(in, rm.data(), sizeof(double) * static_cast<std::size_t>(rm.size()), what);
  return Matrix(rm);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "' for reading");
  return in;
}

constexpr char kDatasetMagic[4] = {'S', 'P', 'D', '1'};
constexpr char kModelMagic[4] = {'A', 'B', 'M', '1'};

uint8_t orthant_code(Orthant o) {
  switch (o) {
    case Orthant::Positive: return 0;
    case Orthant::Negative: return 1;
    case Orthant::Origin: return 2;
  }
  return 0;
}

AbldParams params_from_code(double a, double b, uint8_t code) {
  switch (code) {
    case 0: return AbldParams::positive(a, b);
    case 1: return AbldParams::negative(a, b);
    case 2: return AbldParams::origin();
    default: throw DataError("unknown orthant code " + std::to_string(code));
  }
}

uint8_t tying_code(Tying t) { return static_cast<uint8_t>(t); }

Tying tying_from_code(uint8_t c) {
  if (c > 4) throw DataError("unknown tying code " + std::to_string(c));
  return static_cast<Tying>(c);
}

}  // namespace

void write_dataset(const std::filesystem::path& path,
                   const std::vector<SpdMatrix>& samples,
                   const std::vector<int>& labels) {
  if (samples.empty()) throw DataError("write_dataset: no samples");
  if (!labels.empty() && labels.size() != samples.size()) {
    throw DataError("write_dataset: label count mismatch");
  }
  auto out = open_out(path);
  write_bytes(out, kDatasetMagic, 4);
  write_pod<uint32_t>(out, 1);
  write_pod<uint64_t>(out, samples.size());
  write_pod<uint32_t>(out, static_cast<uint32_t>(samples.front().dim()));
  write_pod<uint8_t>(out, labels.empty() ? 0 : 1);
  for (const auto& s : samples) write_matrix(out, s.mat());
  for (int l : labels) write_pod<int32_t>(out, static_cast<int32_t>(l));
  if (!out) throw DataError("write_dataset: write failed");
}

DatasetContent read_dataset(const std::filesystem::path& path) {
  auto in = open_in(path);
  char magic[4];
  read_bytes(in, magic, 4, "magic");
  if (std::memcmp(magic, kDatasetMagic, 4) != 0) {
    throw DataError("'" + path.string() + "' is not an SPD1 dataset file");
  }
  const auto version = read_pod<uint32_t>(in, "version");
  if (version != 1) throw DataError("unsupported dataset version");
  const auto n = read_pod<uint64_t>(in, "sample count");
  const auto d = read_pod<uint32_t>(in, "dimension");
  const auto has_labels = read_pod<uint8_t>(in, "label flag");
  if (n == 0 || d == 0) throw DataError("empty dataset file");

  DatasetContent content;
  content.samples.reserve(n);
  for (uint64_t i = 0; i < n; ++i) {
    const Matrix m = read_matrix(in, d, d, "sample");
    content.samples.push_back(with_context(
        "read_dataset: sample " + std::to_string(i),
        [&] { return SpdMatrix::validated(m); }));
  }
  if (has_labels) {
    content.labels.reserve(n);
    for (uint64_t i = 0; i < n; ++i) {
      content.labels.push_back(read_pod<int32_t>(in, "label"));
    }
  }
  in.peek();
  if (!in.eof()) throw DataError("trailing bytes in dataset file");
  return content;
}

void write_model(const std::filesystem::path& path, const IddlModel& model,
                 const std::string& metadata_json) {
  model.dict.validate();
  auto out = open_out(path);
  write_bytes(out, kModelMagic, 4);
  write_pod<uint32_t>(out, 1);
  write_pod<uint32_t>(out, static_cast<uint32_t>(model.dict.dim()));
  write_pod<uint32_t>(out, static_cast<uint32_t>(model.dict.size()));
  write_pod<uint8_t>(out, tying_code(model.dict.tying));
  write_pod<uint8_t>(out, model.loss == LossKind::Ridge ? 0 : 1);
  write_pod<double>(out, model.weights.gamma);
  write_pod<double>(out, model.weights.margin);
  for (const auto& a : model.dict.atoms) write_matrix(out, a.mat());
  for (const auto& p : model.dict.params) {
    write_pod<double>(out, p.alpha);
    write_pod<double>(out, p.beta);
    write_pod<uint8_t>(out, orthant_code(p.orthant));
  }
  write_pod<uint32_t>(out, static_cast<uint32_t>(model.weights.w.rows()));
  write_pod<uint32_t>(out, static_cast<uint32_t>(model.weights.w.cols()));
  write_matrix(out, model.weights.w);
  write_pod<uint64_t>(out, metadata_json.size());
  write_bytes(out, metadata_json.data(), metadata_json.size());
  if (!out) throw DataError("write_model: write failed");
}

ModelContent read_model(const std::filesystem::path& path) {
  auto in = open_in(path);
  char magic[4];
  read_bytes(in, magic, 4, "magic");
  if (std::memcmp(magic, kModelMagic, 4) != 0) {
    throw DataError("'" + path.string() + "' is not an ABM1 model file");
  }
  const auto version = read_pod<uint32_t>(in, "version");
  if (version != 1) throw DataError("unsupported model version");
  const auto d = read_pod<uint32_t>(in, "dimension");
  const auto n = read_pod<uint32_t>(in, "atom count");
  const auto tying = read_pod<uint8_t>(in, "tying");
  const auto loss = read_pod<uint8_t>(in, "loss");
  const auto gamma = read_pod<double>(in, "gamma");
  const auto margin = read_pod<double>(in, "margin");
  if (d == 0 || n == 0) throw DataError("empty model file");

  ModelContent content;
  content.model.dict.tying = tying_from_code(tying);
  content.model.loss = (loss == 0) ? LossKind::Ridge : LossKind::Ssvm;
  content.model.weights.gamma = gamma;
  content.model.weights.margin = margin;
  try {
    for (uint32_t k = 0; k < n; ++k) {
      content.model.dict.atoms.push_back(
          SpdMatrix::validated(read_matrix(in, d, d, "atom")));
    }
    for (uint32_t k = 0; k < n; ++k) {
      const double a = read_pod<double>(in, "alpha");
      const double b = read_pod<double>(in, "beta");
      const uint8_t o = read_pod<uint8_t>(in, "orthant");
      content.model.dict.params.push_back(params_from_code(a, b, o));
    }
    const auto rows = read_pod<uint32_t>(in, "W rows");
    const auto cols = read_pod<uint32_t>(in, "W cols");
    content.model.weights.w = read_matrix(in, rows, cols, "W");
    const auto meta_len = read_pod<uint64_t>(in, "metadata length");
    content.metadata_json.resize(meta_len);
    if (meta_len > 0) read_bytes(in, content.metadata_json.data(), meta_len, "metadata");
    content.model.dict.validate();
  } catch (const DataError&) {
    throw;
  } catch (const Error& e) {
    throw DataError("invalid model file '" + path.string() + "': " + e.what());
  }
  in.peek();
  if (!in.eof()) throw DataError("trailing bytes in model file");
  return content;
}

}  // namespace spd
