#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "spd/bench.hpp"
#include "spd/clustering.hpp"
#include "spd/gradcheck.hpp"
#include "spd/iddl.hpp"
#include "spd/io.hpp"
#include "spd/parallel.hpp"
#include "spd/synth.hpp"
#include "json.hpp"

namespace {

using nlohmann::json;

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw spd::DataError("cannot open '" + path + "' for writing");
  return out;
}

spd::LabeledSpdDataset load_labeled(const std::string& path) {
  spd::DatasetContent content = spd::read_dataset(path);
  if (!content.has_labels()) {
    throw spd::DataError("dataset '" + path + "' carries no labels");
  }
  return spd::LabeledSpdDataset(std::move(content.samples),
                                 std::move(content.labels));
}

// ---- gen --------------------------------------------------------------------

struct GenArgs {
  int k = 5, d = 10, n_per = 50, dof = 0;
  uint64_t seed = 0;
  double normalize = 0.0;  // 0 = off
  std::string out;
};

int run_gen(const GenArgs& a) {
  spd::WishartSpec spec{a.k, a.d, a.n_per, a.dof, a.seed};
  spd::LabeledSpdDataset ds = spd::wishart_synth(spec);
  std::vector<spd::SpdMatrix> samples = ds.samples();
  if (a.normalize > 0.0) {
    spd::normalize_dataset(samples, a.normalize);
  }
  spd::write_dataset(a.out, samples, ds.labels());
  std::printf("wrote %zu matrices (d=%d, k=%d) to %s\n", samples.size(), a.d, a.k,
              a.out.c_str());
  return 0;
}

// ---- train ------------------------------------------------------------------

struct TrainArgs {
  std::string input, model_out, report_out, trajectory_out;
  std::string loss = "ridge", tying = "V", ablation = "joint", init = "burg";
  int atoms = 0, outer = 50, threads = 0;
  double gamma = 1e-3, margin = 1.0;
  uint64_t seed = 0;
};

spd::IddlConfig config_from_args(const TrainArgs& a) {
  spd::IddlConfig cfg;
  cfg.n_atoms = a.atoms;
  cfg.loss = (a.loss == "ridge") ? spd::LossKind::Ridge : spd::LossKind::Ssvm;
  cfg.tying = spd::tying_from_string(a.tying);
  if (a.ablation == "joint") {
    cfg.ablation = spd::Ablation::Joint;
  } else if (a.ablation == "fix-atoms") {
    cfg.ablation = spd::Ablation::FixAtoms;
  } else {
    cfg.ablation = spd::Ablation::FixParams;
  }
  cfg.init = (a.init == "grid") ? spd::ParamInit::Grid : spd::ParamInit::Burg;
  cfg.gamma = a.gamma;
  cfg.margin = a.margin;
  cfg.seed = a.seed;
  cfg.max_outer = a.outer;
  cfg.threads = a.threads;
  return cfg;
}

json report_to_json(const spd::TrainReport& rep) {
  json j;
  j["termination"] = rep.termination;
  j["outer_iterations"] = rep.outer_iterations;
  j["objective_trace"] = json::array();
  for (const auto& r : rep.objective_trace) {
    j["objective_trace"].push_back({{"block", r.block}, {"objective", r.objective}});
  }
  j["param_trajectory"] = json::array();
  for (const auto& [a, b] : rep.param_trajectory) {
    j["param_trajectory"].push_back({{"mean_alpha", a}, {"mean_beta", b}});
  }
  j["train_accuracy"] = rep.train_accuracy;
  return j;
}

int run_train(const TrainArgs& a) {
  const spd::LabeledSpdDataset ds = load_labeled(a.input);
  const spd::IddlConfig cfg = config_from_args(a);
  const spd::TrainResult res = spd::train_iddl(ds, cfg);

  const double train_acc = spd::accuracy(ds, res.model, cfg.threads);
  json meta;
  meta["loss"] = a.loss;
  meta["tying"] = a.tying;
  meta["ablation"] = a.ablation;
  meta["gamma"] = a.gamma;
  meta["margin"] = a.margin;
  meta["seed"] = a.seed;
  meta["train_accuracy"] = train_acc;
  meta["report"] = report_to_json(res.report);

  if (!a.model_out.empty()) {
    spd::write_model(a.model_out, res.model, meta.dump());
  }
  if (!a.report_out.empty()) {
    std::ofstream out(a.report_out, std::ios::trunc);
    if (!out) throw spd::DataError("cannot open '" + a.report_out + "'");
    out << meta.dump(2) << "\n";
  }
  if (!a.trajectory_out.empty()) {
    auto out = open_csv(a.trajectory_out);
    out << "outer,mean_alpha,mean_beta,train_accuracy\n";
    for (std::size_t i = 0; i < res.report.param_trajectory.size(); ++i) {
      out << i + 1 << ',' << res.report.param_trajectory[i].first << ','
          << res.report.param_trajectory[i].second << ','
          << res.report.train_accuracy[i] << "\n";
    }
  }
  std::printf("train accuracy %.4f after %d outer iterations (%s)\n", train_acc,
              res.report.outer_iterations, res.report.termination.c_str());
  return 0;
}

// ---- predict ----------------------------------------------------------------

struct PredictArgs {
  std::string model, input, out;
  int threads = 0;
};

int run_predict(const PredictArgs& a) {
  const spd::ModelContent mc = spd::read_model(a.model);
  spd::DatasetContent content = spd::read_dataset(a.input);
  const spd::SpdDataset ds(content.samples);
  const std::vector<int> pred = spd::predict_all(ds, mc.model, a.threads);

  if (!a.out.empty()) {
    auto out = open_csv(a.out);
    out << "index,label\n";
    for (std::size_t i = 0; i < pred.size(); ++i) {
      out << i << ',' << pred[i] << "\n";
    }
  }
  if (content.has_labels()) {
    int correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (pred[i] == content.labels[i]) ++correct;
    }
    std::printf("accuracy %.4f (%d/%zu)\n",
                static_cast<double>(correct) / static_cast<double>(pred.size()),
                correct, pred.size());
  } else {
    std::printf("predicted %zu samples\n", pred.size());
  }
  return 0;
}

// ---- cluster ----------------------------------------------------------------

struct ClusterArgs {
  std::string input, alg = "ab-kmeans", variant = "NE", out, trace_out;
  int k = 0, threads = 0;
  double mu = 1.0;
  uint64_t seed = 0;
};

int run_cluster(const ClusterArgs& a) {
  spd::DatasetContent content = spd::read_dataset(a.input);
  const spd::SpdDataset ds(content.samples);

  spd::Partition part;
  spd::ClusterReport report;
  if (a.alg == "ab-kmeans") {
    spd::IdcOptions opts;
    opts.mu = a.mu;
    opts.threads = a.threads;
    const spd::IdcVariant variant =
        (a.variant == "E") ? spd::IdcVariant::E : spd::IdcVariant::NE;
    spd::AbKmeansResult res = spd::ab_kmeans(ds, a.k, variant, a.seed, opts);
    part = std::move(res.partition);
    report = std::move(res.report);
    std::printf(
        "ab-kmeans (%s): %d outer iterations, stability %.4f, objective %.6f\n",
        a.variant.c_str(), report.outer_iterations, report.final_stability,
        report.objective_trace.back().objective);
  } else if (a.alg == "le-kmeans") {
    part = spd::le_kmeans(ds, a.k, a.seed);
  } else {
    part = spd::karcher_kmeans(ds, a.k, a.seed);
  }

  if (!a.out.empty()) {
    auto out = open_csv(a.out);
    out << "index,cluster\n";
    for (std::size_t i = 0; i < part.assignments.size(); ++i) {
      out << i << ',' << part.assignments[i] << "\n";
    }
  }
  if (!a.trace_out.empty()) {
    auto out = open_csv(a.trace_out);
    out << "step,block,objective\n";
    for (std::size_t i = 0; i < report.objective_trace.size(); ++i) {
      out << i << ',' << report.objective_trace[i].block << ','
          << report.objective_trace[i].objective << "\n";
    }
  }
  if (content.has_labels()) {
    std::printf("F1 %.4f\n", spd::f1_score(part.assignments, content.labels));
  }
  return 0;
}

// ---- sweep ------------------------------------------------------------------

struct SweepArgs {
  std::string input, out;
  int atoms = 0, threads = 0;
  double gamma = 1e-3;
  uint64_t seed = 0;
};

int run_sweep(const SweepArgs& a) {
  const spd::LabeledSpdDataset ds = load_labeled(a.input);
  const int n = a.atoms > 0 ? a.atoms : 5 * ds.num_classes();
  spd::Dictionary dict;
  dict.tying = spd::Tying::S;
  dict.atoms = spd::init_dictionary(ds, n, a.seed);

  static const double grid[] = {0.25, 0.5, 0.75, 1.0, 1.5, 2.0};
  auto out = open_csv(a.out);
  out << "alpha,beta,accuracy\n";

  // deterministic 3:1 split, same convention as grid-search initialization
  std::vector<std::size_t> tr, va;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    ((i % 4 == 3) ? va : tr).push_back(i);
  }
  const spd::Matrix h = spd::one_hot_labels(ds);
  for (double alpha : grid) {
    for (double beta : grid) {
      dict.params.assign(n, spd::AbldParams::positive(alpha, beta));
      const spd::Matrix v =
          spd::encode_all(ds, dict, false, spd::resolve_threads(a.threads));
      spd::Matrix vtr(v.rows(), static_cast<spd::Index>(tr.size()));
      spd::Matrix htr(h.rows(), static_cast<spd::Index>(tr.size()));
      for (std::size_t c = 0; c < tr.size(); ++c) {
        vtr.col(static_cast<spd::Index>(c)) =
            v.col(static_cast<spd::Index>(tr[c]));
        htr.col(static_cast<spd::Index>(c)) =
            h.col(static_cast<spd::Index>(tr[c]));
      }
      double acc = 0.0;
      try {
        const spd::Matrix w = spd::solve_w_ridge_encoded(vtr, htr, a.gamma);
        int correct = 0;
        for (std::size_t i : va) {
          spd::Index arg = 0;
          (w * v.col(static_cast<spd::Index>(i))).maxCoeff(&arg);
          if (static_cast<int>(arg) + 1 == ds.label(i)) ++correct;
        }
        acc = va.empty()
                  ? 0.0
                  : static_cast<double>(correct) / static_cast<double>(va.size());
      } catch (const spd::SingularSystemError&) {
        acc = 0.0;
      }
      out << alpha << ',' << beta << ',' << acc << "\n";
    }
  }
  std::printf("wrote sweep grid to %s\n", a.out.c_str());
  return 0;
}

// ---- gradcheck ----------------------------------------------------------------

int run_gradcheck(uint64_t seed, int trials) {
  const spd::GradAuditReport report = spd::gradient_audit(seed, trials);
  for (const auto& fam : report.families) {
    std::printf("%-22s max rel err %.3e over %d trials\n", fam.name.c_str(),
                fam.max_rel_err, fam.trials);
  }
  if (!report.ok(1e-4)) {
    std::printf("FAILED: worst relative error %.3e exceeds 1e-4\n", report.worst());
    return kExitNumerical;
  }
  std::printf("all gradient families within 1e-4\n");
  return 0;
}

// ---- bench --------------------------------------------------------------------

int run_bench_cmd(uint64_t seed, const std::string& out_path) {
  const std::vector<spd::BenchRow> rows = spd::run_bench(seed);
  if (!out_path.empty()) {
    auto out = open_csv(out_path);
    out << "family,size,seconds\n";
    for (const auto& r : rows) {
      out << r.family << ',' << r.size << ',' << r.seconds << "\n";
    }
  }
  for (const char* fam : {"atom_grad_vs_d", "param_grad_vs_d", "atom_grad_vs_n"}) {
    std::printf("%-18s log-log slope %.3f\n", fam, spd::fit_loglog_slope(rows, fam));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"learnable alpha-beta log-det divergences on SPD matrices"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* cgen = app.add_subcommand("gen", "generate synthetic Wishart SPD clusters");
  cgen->add_option("--k", gen.k, "number of clusters");
  cgen->add_option("--d", gen.d, "matrix dimension");
  cgen->add_option("--n-per", gen.n_per, "samples per cluster");
  cgen->add_option("--dof", gen.dof, "Wishart degrees of freedom (default 2d)");
  cgen->add_option("--seed", gen.seed, "RNG seed");
  cgen->add_option("--normalize", gen.normalize,
                   "rescale so the max spectral norm equals this value");
  cgen->add_option("-o,--out", gen.out, "output dataset file")->required();

  TrainArgs tr;
  auto* ctr = app.add_subcommand("train", "train a divergence-dictionary classifier");
  ctr->add_option("-i,--input", tr.input, "labeled dataset file")->required();
  ctr->add_option("--loss", tr.loss, "ridge|ssvm")
      ->check(CLI::IsMember({"ridge", "ssvm"}));
  ctr->add_option("--tying", tr.tying, "S|V|N|A|B")
      ->check(CLI::IsMember({"S", "V", "N", "A", "B"}));
  ctr->add_option("--atoms", tr.atoms, "dictionary size (default 5 * classes)");
  ctr->add_option("--ablation", tr.ablation, "joint|fix-atoms|fix-params")
      ->check(CLI::IsMember({"joint", "fix-atoms", "fix-params"}));
  ctr->add_option("--init", tr.init, "grid|burg")
      ->check(CLI::IsMember({"grid", "burg"}));
  ctr->add_option("--gamma", tr.gamma, "classifier regularizer");
  ctr->add_option("--margin", tr.margin, "ssvm margin");
  ctr->add_option("--seed", tr.seed, "RNG seed");
  ctr->add_option("--outer-iters", tr.outer, "max outer BCD iterations");
  ctr->add_option("--threads", tr.threads, "worker threads (0 = ABLD_THREADS or 1)");
  ctr->add_option("--model", tr.model_out, "output model file");
  ctr->add_option("--report", tr.report_out, "output JSON report");
  ctr->add_option("--trajectory", tr.trajectory_out, "output trajectory CSV");

  PredictArgs pr;
  auto* cpr = app.add_subcommand("predict", "classify a dataset with a trained model");
  cpr->add_option("--model", pr.model, "model file")->required();
  cpr->add_option("-i,--input", pr.input, "dataset file")->required();
  cpr->add_option("-o,--out", pr.out, "labels CSV");
  cpr->add_option("--threads", pr.threads, "worker threads");

  ClusterArgs cl;
  auto* ccl = app.add_subcommand("cluster", "cluster SPD matrices");
  ccl->add_option("-i,--input", cl.input, "dataset file")->required();
  ccl->add_option("--alg", cl.alg, "ab-kmeans|le-kmeans|karcher-kmeans")
      ->check(CLI::IsMember({"ab-kmeans", "le-kmeans", "karcher-kmeans"}));
  ccl->add_option("--variant", cl.variant, "E (alpha=beta) | NE")
      ->check(CLI::IsMember({"E", "NE"}));
  ccl->add_option("--k", cl.k, "number of clusters")->required();
  ccl->add_option("--mu", cl.mu, "parameter regularizer weight");
  ccl->add_option("--seed", cl.seed, "RNG seed");
  ccl->add_option("--threads", cl.threads, "worker threads");
  ccl->add_option("-o,--out", cl.out, "assignments CSV");
  ccl->add_option("--trace", cl.trace_out, "objective trace CSV");

  SweepArgs sw;
  auto* csw = app.add_subcommand(
      "sweep", "accuracy heatmap over (alpha, beta) with a frozen dictionary");
  csw->add_option("-i,--input", sw.input, "labeled dataset file")->required();
  csw->add_option("--atoms", sw.atoms, "dictionary size (default 5 * classes)");
  csw->add_option("--gamma", sw.gamma, "ridge regularizer");
  csw->add_option("--seed", sw.seed, "RNG seed");
  csw->add_option("--threads", sw.threads, "worker threads");
  csw->add_option("-o,--out", sw.out, "heatmap CSV")->required();

  uint64_t gc_seed = 0;
  int gc_trials = 20;
  auto* cgc = app.add_subcommand(
      "gradcheck", "audit analytic gradients against finite differences");
  cgc->add_option("--seed", gc_seed, "RNG seed");
  cgc->add_option("--trials", gc_trials, "trials per gradient family");

  uint64_t bn_seed = 0;
  std::string bn_out;
  auto* cbn = app.add_subcommand("bench", "time gradient kernels against d and n");
  cbn->add_option("--seed", bn_seed, "RNG seed");
  cbn->add_option("-o,--out", bn_out, "timings CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (app.got_subcommand(cgen)) return run_gen(gen);
    if (app.got_subcommand(ctr)) return run_train(tr);
    if (app.got_subcommand(cpr)) return run_predict(pr);
    if (app.got_subcommand(ccl)) return run_cluster(cl);
    if (app.got_subcommand(csw)) return run_sweep(sw);
    if (app.got_subcommand(cgc)) return run_gradcheck(gc_seed, gc_trials);
    if (app.got_subcommand(cbn)) return run_bench_cmd(bn_seed, bn_out);
  } catch (const spd::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const spd::Error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return 0;
}
