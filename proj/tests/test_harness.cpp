#include <cstdlib>
#include <filesystem>
#include <fstream>
#ifdef ABLD_CLI
#include <sys/wait.h>
#endif

#include "spd/gradcheck.hpp"
#include "spd/io.hpp"
#include "spd/rng.hpp"
#include "spd/synth.hpp"
#include "doctest.h"

using namespace spd;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path p = fs::temp_directory_path() / "abld_harness_test";
  fs::create_directories(p);
  return p;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("wishart generator") {
  SUBCASE("samples validate and labels are contiguous") {
    const LabeledSpdDataset ds = wishart_synth({3, 4, 5, 0, 17});
    CHECK(ds.size() == 15);
    CHECK(ds.num_classes() == 3);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      CHECK_NOTHROW(SpdMatrix::validated(ds.sample(i).mat()));
    }
  }
  SUBCASE("cluster sample mean approaches the scale matrix") {
    const int d = 3, dof = 6, n_per = 2000;
    const uint64_t seed = 99;
    const LabeledSpdDataset ds = wishart_synth({1, d, n_per, dof, seed});

    // replay the generator's scale-matrix draw
    Rng rng(seed);
    const Matrix q = rng.orthogonal(d);
    Vector ev(d);
    for (int j = 0; j < d; ++j) ev(j) = rng.log_uniform(0.5, 2.0);
    const Matrix scale = q * ev.asDiagonal() * q.transpose();

    Matrix mean = Matrix::Zero(d, d);
    for (std::size_t i = 0; i < ds.size(); ++i) mean += ds.sample(i).mat();
    mean /= static_cast<double>(ds.size());
    // per-entry std is O(sqrt(2 / (dof * n_per))) * scale
    CHECK((mean - scale).norm() <= 0.05 * scale.norm());
  }
  SUBCASE("identical seeds reproduce the dataset bit for bit") {
    const WishartSpec spec{2, 3, 4, 0, 1234};
    const LabeledSpdDataset a = wishart_synth(spec);
    const LabeledSpdDataset b = wishart_synth(spec);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK((a.sample(i).mat() - b.sample(i).mat()).cwiseAbs().maxCoeff() == 0.0);
    }
  }
  SUBCASE("invalid degrees of freedom are rejected") {
    CHECK_THROWS_AS(wishart_synth({1, 4, 1, 2, 0}), DomainError);
  }
}

TEST_CASE("covariance descriptors") {
  Rng rng(101);
  SUBCASE("independent unit-variance features give roughly the identity") {
    const Matrix f = rng.normal_matrix(20000, 4);
    const SpdMatrix c = cov_descriptor(f, 0.0);
    CHECK((c.mat() - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() <= 0.05);
  }
  SUBCASE("constant features leave only the jitter") {
    Matrix f(5, 3);
    for (Index i = 0; i < 5; ++i) f.row(i) << 1.0, 2.0, 3.0;
    const SpdMatrix c = cov_descriptor(f, 1e-3);
    CHECK((c.mat() - 1e-3 * Matrix::Identity(3, 3)).norm() <= 1e-15);
    CHECK_THROWS_AS(cov_descriptor(f, 0.0), NotPositiveDefiniteError);
  }
  SUBCASE("single feature column reduces to the sample variance") {
    Matrix f(4, 1);
    f << 1.0, 2.0, 3.0, 4.0;
    const SpdMatrix c = cov_descriptor(f, 0.0);
    CHECK(c.mat()(0, 0) == doctest::Approx(5.0 / 3.0));
  }
  SUBCASE("fewer than two rows is a domain error") {
    CHECK_THROWS_AS(cov_descriptor(Matrix::Ones(1, 3), 0.0), DomainError);
  }
}

TEST_CASE("dataset normalization") {
  Rng rng(102);
  std::vector<SpdMatrix> samples;
  for (int i = 0; i < 5; ++i) samples.push_back(rng.spd(4, 0.3, 8.0));

  std::vector<SpdMatrix> scaled = samples;
  const double scale = normalize_dataset(scaled, 1.0);
  CHECK(scale > 0.0);

  SUBCASE("maximum spectral norm hits the target") {
    double max_norm = 0.0;
    for (const auto& s : scaled) {
      const Vector ev = sym_eigvals(s.mat());
      max_norm = std::max(max_norm, ev(ev.size() - 1));
    }
    CHECK(std::abs(max_norm - 1.0) <= 1e-12);
  }
  SUBCASE("an already normalized set stays put") {
    std::vector<SpdMatrix> again = scaled;
    const double second = normalize_dataset(again, 1.0);
    CHECK(std::abs(second - 1.0) <= 1e-12);
    for (std::size_t i = 0; i < again.size(); ++i) {
      CHECK((again[i].mat() - scaled[i].mat()).norm() <=
            1e-12 * scaled[i].mat().norm());
    }
  }
  SUBCASE("divergences are unchanged") {
    const AbldParams p = AbldParams::positive(0.8, 1.3);
    for (std::size_t i = 1; i < samples.size(); ++i) {
      CHECK(std::abs(abld(samples[0], samples[i], p) -
                     abld(scaled[0], scaled[i], p)) <= 1e-10);
    }
  }
}

TEST_CASE("dataset file round trip") {
  Rng rng(103);
  const fs::path dir = temp_dir();
  const fs::path file = dir / "roundtrip.spd";

  std::vector<SpdMatrix> samples;
  std::vector<int> labels;
  for (int i = 0; i < 6; ++i) {
    samples.push_back(rng.spd(3));
    labels.push_back(1 + i % 2);
  }
  write_dataset(file, samples, labels);
  const DatasetContent content = read_dataset(file);
  REQUIRE(content.samples.size() == samples.size());
  REQUIRE(content.labels == labels);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    CHECK((content.samples[i].mat() - samples[i].mat()).cwiseAbs().maxCoeff() == 0.0);
  }

  // writing the read-back content reproduces the file byte for byte
  const fs::path file2 = dir / "roundtrip2.spd";
  write_dataset(file2, content.samples, content.labels);
  CHECK(read_bytes(file) == read_bytes(file2));

  SUBCASE("unlabeled files round trip too") {
    const fs::path file3 = dir / "nolabels.spd";
    write_dataset(file3, samples);
    const DatasetContent c2 = read_dataset(file3);
    CHECK_FALSE(c2.has_labels());
    CHECK(c2.samples.size() == samples.size());
  }
  SUBCASE("corrupt magic is a data error") {
    const fs::path bad = dir / "bad.spd";
    std::ofstream out(bad, std::ios::binary);
    out << "NOPE garbage";
    out.close();
    CHECK_THROWS_AS(read_dataset(bad), DataError);
  }
}

TEST_CASE("model file round trip") {
  Rng rng(104);
  const fs::path dir = temp_dir();
  const fs::path file = dir / "model.abm";

  IddlModel model;
  model.loss = LossKind::Ssvm;
  model.dict.tying = Tying::N;
  for (int k = 0; k < 3; ++k) {
    model.dict.atoms.push_back(rng.spd(4));
    model.dict.params.push_back(
        AbldParams::positive(rng.uniform(0.2, 2.0), rng.uniform(0.2, 2.0)));
  }
  model.weights.w = rng.normal_matrix(2, 4);
  model.weights.gamma = 0.125;
  model.weights.margin = 1.5;

  write_model(file, model, "{\"note\":\"fixture\"}");
  const ModelContent back = read_model(file);
  CHECK(back.metadata_json == "{\"note\":\"fixture\"}");
  CHECK(back.model.loss == LossKind::Ssvm);
  CHECK(back.model.dict.tying == Tying::N);
  CHECK(back.model.weights.gamma == 0.125);
  CHECK(back.model.weights.margin == 1.5);
  CHECK((back.model.weights.w - model.weights.w).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(back.model.dict.size() == 3);
  for (int k = 0; k < 3; ++k) {
    CHECK((back.model.dict.atoms[k].mat() - model.dict.atoms[k].mat())
              .cwiseAbs()
              .maxCoeff() == 0.0);
    CHECK(back.model.dict.params[k].alpha == model.dict.params[k].alpha);
    CHECK(back.model.dict.params[k].beta == model.dict.params[k].beta);
  }

  const fs::path file2 = dir / "model2.abm";
  write_model(file2, back.model, back.metadata_json);
  CHECK(read_bytes(file) == read_bytes(file2));
}

TEST_CASE("gradient audit") {
  SUBCASE("small run passes the tolerance") {
    const GradAuditReport report = gradient_audit(2024, 4);
    for (const auto& fam : report.families) {
      INFO(fam.name, " err ", fam.max_rel_err);
      CHECK(fam.max_rel_err <= 1e-4);
      CHECK(fam.trials > 0);
    }
    CHECK(report.ok());
  }
  SUBCASE("zero trials yield an empty passing report") {
    const GradAuditReport report = gradient_audit(1, 0);
    CHECK(report.families.empty());
    CHECK(report.ok());
  }
  SUBCASE("a deliberately perturbed gradient is detected") {
    Rng rng(105);
    const SpdMatrix x = rng.spd(4);
    const SpdMatrix y = rng.spd(4);
    const AbldParams p = AbldParams::positive(0.9, 1.1);
    const Matrix fd = fd_sym_grad(
        [&](const Matrix& m) { return abld(x, SpdMatrix::unchecked(m), p); }, y.mat());
    const Matrix broken =
        abld_grad_y(x, y, p).mat() + 0.01 * Matrix::Identity(4, 4);
    const double rel = (broken - fd).norm() / fd.norm();
    CHECK(rel > 1e-4);
  }
}

#ifdef ABLD_CLI
TEST_CASE("command-line exit codes") {
  const fs::path dir = temp_dir();
  const std::string cli = ABLD_CLI;
  auto run = [&](const std::string& args) {
    const int status = std::system((cli + " " + args + " > /dev/null 2>&1").c_str());
    return WEXITSTATUS(status);
  };

  CHECK(run("--definitely-not-a-flag") == 2);
  CHECK(run("gen") == 2);  // missing required -o
  CHECK(run("predict --model " + (dir / "missing.abm").string() + " -i " +
            (dir / "missing.spd").string()) == 3);

  const std::string data = (dir / "cli_data.spd").string();
  CHECK(run("gen --k 2 --d 4 --n-per 6 --seed 5 -o " + data) == 0);
  CHECK(run("cluster --alg le-kmeans --k 2 -i " + data + " -o " +
            (dir / "cli_assign.csv").string()) == 0);
  CHECK(run("gradcheck --seed 3 --trials 2") == 0);
}
#endif
