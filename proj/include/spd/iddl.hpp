#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "spd/dataset.hpp"
#include "spd/divergence.hpp"
#include "spd/manifold.hpp"

namespace spd {

/// Parameter tying across dictionary atoms:
///   S - one scalar (alpha, beta) pair shared by all atoms
///   V - per-atom pair with alpha_k = beta_k
///   N - per-atom pair, alpha and beta independent
///   A - frozen at the origin (squared AIRM per atom)
///   B - frozen at alpha = beta = 1
enum class Tying { S, V, N, A, B };

const char* to_string(Tying t);
Tying tying_from_string(const std::string& s);

struct Dictionary {
  std::vector<SpdMatrix> atoms;
  std::vector<AbldParams> params;  // one per atom
  Tying tying = Tying::V;

  int size() const { return static_cast<int>(atoms.size()); }
  Index dim() const { return atoms.empty() ? 0 : atoms.front().dim(); }

  /// Checks atom dims, param count, and the tying invariants.
  void validate() const;
};

/// Frozen parameter values implied by the tying mode, if any.
AbldParams tying_frozen_params(Tying t);

struct ClassifierWeights {
  Matrix w;             // L x n (ridge) or L x (n+1) with bias column (ssvm)
  double gamma = 0.0;   // Frobenius regularizer weight
  double margin = 1.0;  // ssvm margin
};

enum class LossKind { Ridge, Ssvm };

// ---- encodings -----------------------------------------------------------

/// v_k = D(X || B_k; alpha_k, beta_k); appends a constant 1 when with_bias.
Vector encode(const SpdMatrix& x, const Dictionary& dict, bool with_bias = false);

/// Column i holds the encoding of sample i ((n or n+1) x N).
Matrix encode_all(const SpdDataset& ds, const Dictionary& dict, bool with_bias,
                  int threads = 1);

/// One-hot label matrix, L x N.
Matrix one_hot_labels(const LabeledSpdDataset& ds);

// ---- ridge regression ------------------------------------------------------

double ridge_loss_encoded(const Matrix& v, const Matrix& h, const Matrix& w,
                          double gamma);
double ridge_loss(const LabeledSpdDataset& ds, const Dictionary& dict,
                  const ClassifierWeights& cw);

/// Exact minimizer of the ridge objective: W = H V^T (V V^T + 2 gamma I)^{-1}.
Matrix solve_w_ridge_encoded(const Matrix& v, const Matrix& h, double gamma);
ClassifierWeights solve_w_ridge(const LabeledSpdDataset& ds, const Dictionary& dict,
                                double gamma);

/// Euclidean gradient of the ridge objective w.r.t. atom k.
SymMatrix ridge_grad_atom(const LabeledSpdDataset& ds, const Dictionary& dict,
                          const ClassifierWeights& cw, int k);

/// Per-atom (d/d alpha_k, d/d beta_k) before tying reduction.
struct ParamGradients {
  Vector d_alpha;
  Vector d_beta;
};

ParamGradients ridge_grad_params(const LabeledSpdDataset& ds, const Dictionary& dict,
                                 const ClassifierWeights& cw);

// ---- structured SVM --------------------------------------------------------

double ssvm_loss_encoded(const Matrix& v, const std::vector<int>& labels,
                         const Matrix& w, double gamma, double margin);
double ssvm_loss(const LabeledSpdDataset& ds, const Dictionary& dict,
                 const ClassifierWeights& cw);

Matrix ssvm_grad_w_encoded(const Matrix& v, const std::vector<int>& labels,
                           const Matrix& w, double gamma, double margin);
Matrix ssvm_grad_w(const LabeledSpdDataset& ds, const Dictionary& dict,
                   const ClassifierWeights& cw);

/// d loss / d v_i for every sample (hinge chain term), (n+1) x N.
Matrix ssvm_dloss_dv(const Matrix& v, const std::vector<int>& labels,
                     const Matrix& w, double margin);

SymMatrix ssvm_grad_atom(const LabeledSpdDataset& ds, const Dictionary& dict,
                         const ClassifierWeights& cw, int k);
ParamGradients ssvm_grad_params(const LabeledSpdDataset& ds, const Dictionary& dict,
                                const ClassifierWeights& cw);

// ---- initialization --------------------------------------------------------

/// Log-Euclidean k-means atoms: Euclidean k-means in the log domain, centroids
/// mapped back through the matrix exponential. Deterministic per seed.
std::vector<SpdMatrix> init_dictionary(const SpdDataset& ds, int n, uint64_t seed);

enum class ParamInit { Grid, Burg };

/// Sets dict.params in place. Grid mode scores each candidate pair with a
/// frozen-dictionary ridge fit on a deterministic 3:1 split; tyings A and B
/// always get their frozen values.
void init_params(const LabeledSpdDataset& ds, Dictionary& dict, ParamInit mode,
                 double gamma, int threads = 1);

// ---- joint trainer ---------------------------------------------------------

enum class Ablation { Joint, FixAtoms, FixParams };

struct IddlConfig {
  int n_atoms = 0;  // 0 -> 5 * num_classes
  LossKind loss = LossKind::Ridge;
  Tying tying = Tying::V;
  Ablation ablation = Ablation::Joint;
  ParamInit init = ParamInit::Burg;
  double gamma = 1e-3;
  double margin = 1.0;
  uint64_t seed = 0;
  int max_outer = 50;
  double outer_tol = 1e-6;
  int atom_rcg_iters = 5;    // bounded RCG steps per atom per block
  int param_spg_iters = 10;  // bounded SPG steps per parameter block
  int ssvm_w_max_iters = 500;
  double ssvm_w_tol = 1e-6;
  int threads = 0;  // 0 -> resolve_threads()
  RcgOptions rcg{};
  SpgOptions spg{};
};

struct BlockRecord {
  std::string block;  // "init" / "atoms" / "params" / "classifier"
  double objective = 0.0;
};

struct TrainReport {
  std::vector<BlockRecord> objective_trace;
  std::vector<std::pair<double, double>> param_trajectory;  // mean alpha, beta
  std::vector<double> train_accuracy;                       // per outer iteration
  std::string termination;
  int outer_iterations = 0;
};

struct IddlModel {
  Dictionary dict;
  ClassifierWeights weights;
  LossKind loss = LossKind::Ridge;
};

struct TrainResult {
  IddlModel model;
  TrainReport report;
};

TrainResult train_iddl(const LabeledSpdDataset& ds, const IddlConfig& cfg);

/// Argmax class score; ties break toward the smaller label. Labels are 1-based.
int predict(const SpdMatrix& x, const IddlModel& model);
std::vector<int> predict_all(const SpdDataset& ds, const IddlModel& model,
                             int threads = 1);
double accuracy(const LabeledSpdDataset& ds, const IddlModel& model,
                int threads = 1);

}  // namespace spd
