#include "spd/iddl.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>

#include "spd/clustering.hpp"
#include "spd/parallel.hpp"

namespace spd {

// ---- datasets --------------------------------------------------------------

SpdDataset::SpdDataset(std::vector<SpdMatrix> samples, double pd_floor)
    : samples_(std::move(samples)) {
  if (samples_.empty()) throw DomainError("SpdDataset: no samples");
  dim_ = samples_.front().dim();
  inv_.resize(samples_.size());
  inv_sqrt_.resize(samples_.size());
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const SpdMatrix& s = samples_[i];
    if (s.dim() != dim_) {
      throw DomainError("SpdDataset: sample " + std::to_string(i) +
                        " has mismatched dimension");
    }
    const EigPair e = sym_eig(s);
    if (!(e.values(0) > pd_floor)) {
      throw NotPositiveDefiniteError("SpdDataset: sample " + std::to_string(i) +
                                     " has eigenvalue " +
                                     std::to_string(e.values(0)));
    }
    Vector winv(dim_), wisq(dim_);
    for (Index j = 0; j < dim_; ++j) {
      winv(j) = 1.0 / e.values(j);
      wisq(j) = 1.0 / std::sqrt(e.values(j));
    }
    inv_[i] = sym(e.vectors * winv.asDiagonal() * e.vectors.transpose());
    inv_sqrt_[i] = sym(e.vectors * wisq.asDiagonal() * e.vectors.transpose());
  }
}

LabeledSpdDataset::LabeledSpdDataset(std::vector<SpdMatrix> samples,
                                     std::vector<int> labels, double pd_floor)
    : SpdDataset(std::move(samples), pd_floor), labels_(std::move(labels)) {
  if (labels_.size() != size()) {
    throw DomainError("LabeledSpdDataset: label count does not match sample count");
  }
  int max_label = 0;
  for (int l : labels_) {
    if (l < 1) throw DomainError("LabeledSpdDataset: labels must be >= 1");
    max_label = std::max(max_label, l);
  }
  std::vector<int> counts(max_label, 0);
  for (int l : labels_) counts[l - 1]++;
  for (int c = 0; c < max_label; ++c) {
    if (counts[c] == 0) {
      throw DomainError("LabeledSpdDataset: labels must cover a contiguous range; class " +
                        std::to_string(c + 1) + " is empty");
    }
  }
  num_classes_ = max_label;
}

// ---- tying -----------------------------------------------------------------

const char* to_string(Tying t) {
  switch (t) {
    case Tying::S: return "S";
    case Tying::V: return "V";
    case Tying::N: return "N";
    case Tying::A: return "A";
    case Tying::B: return "B";
  }
  return "?";
}

Tying tying_from_string(const std::string& s) {
  if (s == "S") return Tying::S;
  if (s == "V") return Tying::V;
  if (s == "N") return Tying::N;
  if (s == "A") return Tying::A;
  if (s == "B") return Tying::B;
  throw DomainError("unknown tying mode '" + s + "'");
}

AbldParams tying_frozen_params(Tying t) {
  if (t == Tying::A) return AbldParams::origin();
  if (t == Tying::B) return AbldParams::positive(1.0, 1.0);
  throw DomainError("tying mode has no frozen parameters");
}

void Dictionary::validate() const {
  if (atoms.empty()) throw DomainError("Dictionary: no atoms");
  if (params.size() != atoms.size()) {
    throw DomainError("Dictionary: params/atoms size mismatch");
  }
  const Index d = atoms.front().dim();
  for (const auto& a : atoms) {
    if (a.dim() != d) throw DomainError("Dictionary: atom dimension mismatch");
  }
  for (const auto& p : params) {
    switch (tying) {
      case Tying::S:
        if (p.alpha != params.front().alpha || p.beta != params.front().beta ||
            p.orthant != params.front().orthant) {
          throw DomainError("Dictionary: tying S requires one shared pair");
        }
        break;
      case Tying::V:
        if (p.alpha != p.beta) {
          throw DomainError("Dictionary: tying V requires alpha == beta");
        }
        break;
      case Tying::N:
        break;
      case Tying::A:
        if (!p.at_origin()) throw DomainError("Dictionary: tying A is frozen at origin");
        break;
      case Tying::B:
        if (p.alpha != 1.0 || p.beta != 1.0) {
          throw DomainError("Dictionary: tying B is frozen at alpha = beta = 1");
        }
        break;
    }
  }
}

// ---- encodings ---------------------------------------------------------------

Vector encode(const SpdMatrix& x, const Dictionary& dict, bool with_bias) {
  if (x.dim() != dict.dim()) throw DomainError("encode: dimension mismatch");
  const Matrix xih = spd_inv_sqrt(x).mat();
  const int n = dict.size();
  Vector v(with_bias ? n + 1 : n);
  for (int k = 0; k < n; ++k) {
    v(k) = with_context("encode: atom " + std::to_string(k), [&] {
      return abld_from_delta(pair_delta(xih, dict.atoms[k].mat()), dict.params[k]);
    });
  }
  if (with_bias) v(n) = 1.0;
  return v;
}

Matrix encode_all(const SpdDataset& ds, const Dictionary& dict, bool with_bias,
                  int threads) {
  if (ds.dim() != dict.dim()) throw DomainError("encode_all: dimension mismatch");
  const int n = dict.size();
  const std::size_t nsamp = ds.size();
  Matrix v(with_bias ? n + 1 : n, static_cast<Index>(nsamp));
  parallel_for(nsamp, threads, [&](std::size_t i) {
    for (int k = 0; k < n; ++k) {
      v(k, static_cast<Index>(i)) =
          with_context("encode: sample " + std::to_string(i) + ", atom " +
                           std::to_string(k),
                       [&] {
                         return abld_from_delta(
                             pair_delta(ds.inv_sqrt(i), dict.atoms[k].mat()),
                             dict.params[k]);
                       });
    }
    if (with_bias) v(n, static_cast<Index>(i)) = 1.0;
  });
  return v;
}

Matrix one_hot_labels(const LabeledSpdDataset& ds) {
  Matrix h = Matrix::Zero(ds.num_classes(), static_cast<Index>(ds.size()));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    h(ds.label(i) - 1, static_cast<Index>(i)) = 1.0;
  }
  return h;
}

// ---- ridge -------------------------------------------------------------------

double ridge_loss_encoded(const Matrix& v, const Matrix& h, const Matrix& w,
                          double gamma) {
  const Matrix r = h - w * v;
  return 0.5 * r.squaredNorm() + gamma * w.squaredNorm();
}

double ridge_loss(const LabeledSpdDataset& ds, const Dictionary& dict,
                  const ClassifierWeights& cw) {
  return ridge_loss_encoded(encode_all(ds, dict, false), one_hot_labels(ds), cw.w,
                            cw.gamma);
}

Matrix solve_w_ridge_encoded(const Matrix& v, const Matrix& h, double gamma) {
  const Index n = v.rows();
  const Matrix a = v * v.transpose() + 2.0 * gamma * Matrix::Identity(n, n);
  Eigen::LDLT<Matrix> ldlt(a);
  if (ldlt.info() != Eigen::Success) {
    throw SingularSystemError("solve_w_ridge: factorization failed");
  }
  const Vector dvec = ldlt.vectorD().cwiseAbs();
  if (!(dvec.minCoeff() > 1e-13 * std::max(1.0, dvec.maxCoeff()))) {
    throw SingularSystemError("solve_w_ridge: normal equations numerically singular");
  }
  Matrix w = ldlt.solve(v * h.transpose()).transpose();
  if (!w.allFinite()) {
    throw SingularSystemError("solve_w_ridge: non-finite solution");
  }
  return w;
}

ClassifierWeights solve_w_ridge(const LabeledSpdDataset& ds, const Dictionary& dict,
                                double gamma) {
  ClassifierWeights cw;
  cw.gamma = gamma;
  cw.w = solve_w_ridge_encoded(encode_all(ds, dict, false), one_hot_labels(ds), gamma);
  return cw;
}

namespace {

// zeta(k, i) = d ridge_loss / d v_i^k = -(h_i - W v_i)^T w_k
Matrix ridge_dloss_dv(const Matrix& v, const Matrix& h, const Matrix& w) {
  return -(w.transpose() * (h - w * v));
}

struct AtomTermGrads {
  Vector row;               // divergence of every sample to the atom
  std::vector<Matrix> g;    // per-sample gradient w.r.t. the atom
};

AtomTermGrads atom_terms(const SpdDataset& ds, const SpdMatrix& atom,
                         const AbldParams& p, int threads) {
  const std::size_t nsamp = ds.size();
  AtomTermGrads out;
  out.row.resize(static_cast<Index>(nsamp));
  out.g.resize(nsamp);
  parallel_for(nsamp, threads, [&](std::size_t i) {
    const PairEig e = pair_eig(ds.inv_sqrt(i), atom.mat());
    out.row(static_cast<Index>(i)) = abld_from_delta(e.delta, p);
    out.g[i] = abld_grad_y_from_eig(ds.inv_sqrt(i), e, p);
  });
  return out;
}

}  // namespace

SymMatrix ridge_grad_atom(const LabeledSpdDataset& ds, const Dictionary& dict,
                          const ClassifierWeights& cw, int k) {
  if (k < 0 || k >= dict.size()) throw DomainError("ridge_grad_atom: bad atom index");
  const Matrix v = encode_all(ds, dict, false);
  const Matrix zeta = ridge_dloss_dv(v, one_hot_labels(ds), cw.w);
  const AtomTermGrads terms = atom_terms(ds, dict.atoms[k], dict.params[k], 1);
  Matrix g = Matrix::Zero(ds.dim(), ds.dim());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    g += zeta(k, static_cast<Index>(i)) * terms.g[i];
  }
  return SymMatrix(sym(g));
}

namespace {

ParamGradients param_grads_from_chain(const SpdDataset& ds, const Dictionary& dict,
                                      const Matrix& chain, int threads) {
  const int n = dict.size();
  const std::size_t nsamp = ds.size();
  std::vector<Vector> da(nsamp), db(nsamp);
  parallel_for(nsamp, threads, [&](std::size_t i) {
    da[i] = Vector::Zero(n);
    db[i] = Vector::Zero(n);
    for (int k = 0; k < n; ++k) {
      const AbldParams& p = dict.params[k];
      if (p.at_origin()) continue;  // frozen branch has no parameter gradient
      const Vector delta = pair_delta(ds.inv_sqrt(i), dict.atoms[k].mat());
      const Vector lambda = delta.cwiseInverse();
      const double c = chain(k, static_cast<Index>(i));
      da[i](k) = c * abld_grad_alpha_from_gen_eigs(lambda, p.alpha, p.beta);
      db[i](k) = c * abld_grad_alpha_from_gen_eigs(delta, p.beta, p.alpha);
    }
  });
  ParamGradients out;
  out.d_alpha = Vector::Zero(n);
  out.d_beta = Vector::Zero(n);
  for (std::size_t i = 0; i < nsamp; ++i) {
    out.d_alpha += da[i];
    out.d_beta += db[i];
  }
  return out;
}

}  // namespace

ParamGradients ridge_grad_params(const LabeledSpdDataset& ds, const Dictionary& dict,
                                 const ClassifierWeights& cw) {
  const Matrix v = encode_all(ds, dict, false);
  const Matrix zeta = ridge_dloss_dv(v, one_hot_labels(ds), cw.w);
  return param_grads_from_chain(ds, dict, zeta, 1);
}

// ---- structured SVM ----------------------------------------------------------

double ssvm_loss_encoded(const Matrix& v, const std::vector<int>& labels,
                         const Matrix& w, double gamma, double margin) {
  const Matrix scores = w * v;
  double loss = 0.0;
  for (Index i = 0; i < scores.cols(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)] - 1;
    const double sy = scores(y, i);
    for (Index l = 0; l < scores.rows(); ++l) {
      if (l == y) continue;
      loss += std::max(0.0, scores(l, i) - sy + margin);
    }
  }
  return loss + gamma * w.squaredNorm();
}

double ssvm_loss(const LabeledSpdDataset& ds, const Dictionary& dict,
                 const ClassifierWeights& cw) {
  return ssvm_loss_encoded(encode_all(ds, dict, true), ds.labels(), cw.w, cw.gamma,
                           cw.margin);
}

Matrix ssvm_grad_w_encoded(const Matrix& v, const std::vector<int>& labels,
                           const Matrix& w, double gamma, double margin) {
  const Matrix scores = w * v;
  Matrix g = 2.0 * gamma * w;
  for (Index i = 0; i < scores.cols(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)] - 1;
    const double sy = scores(y, i);
    int active = 0;
    for (Index l = 0; l < scores.rows(); ++l) {
      if (l == y) continue;
      if (scores(l, i) - sy + margin > 0.0) {
        g.row(l) += v.col(i).transpose();
        ++active;
      }
    }
    g.row(y) -= active * v.col(i).transpose();
  }
  return g;
}

Matrix ssvm_grad_w(const LabeledSpdDataset& ds, const Dictionary& dict,
                   const ClassifierWeights& cw) {
  return ssvm_grad_w_encoded(encode_all(ds, dict, true), ds.labels(), cw.w, cw.gamma,
                             cw.margin);
}

Matrix ssvm_dloss_dv(const Matrix& v, const std::vector<int>& labels, const Matrix& w,
                     double margin) {
  const Matrix scores = w * v;
  Matrix chain = Matrix::Zero(v.rows(), v.cols());
  for (Index i = 0; i < scores.cols(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)] - 1;
    const double sy = scores(y, i);
    for (Index l = 0; l < scores.rows(); ++l) {
      if (l == y) continue;
      if (scores(l, i) - sy + margin > 0.0) {
        chain.col(i) += (w.row(l) - w.row(y)).transpose();
      }
    }
  }
  return chain;
}

SymMatrix ssvm_grad_atom(const LabeledSpdDataset& ds, const Dictionary& dict,
                         const ClassifierWeights& cw, int k) {
  if (k < 0 || k >= dict.size()) throw DomainError("ssvm_grad_atom: bad atom index");
  const Matrix v = encode_all(ds, dict, true);
  const Matrix chain = ssvm_dloss_dv(v, ds.labels(), cw.w, cw.margin);
  const AtomTermGrads terms = atom_terms(ds, dict.atoms[k], dict.params[k], 1);
  Matrix g = Matrix::Zero(ds.dim(), ds.dim());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    g += chain(k, static_cast<Index>(i)) * terms.g[i];
  }
  return SymMatrix(sym(g));
}

ParamGradients ssvm_grad_params(const LabeledSpdDataset& ds, const Dictionary& dict,
                                const ClassifierWeights& cw) {
  const Matrix v = encode_all(ds, dict, true);
  const Matrix chain = ssvm_dloss_dv(v, ds.labels(), cw.w, cw.margin);
  return param_grads_from_chain(ds, dict, chain.topRows(dict.size()), 1);
}

// ---- initialization -----------------------------------------------------------

std::vector<SpdMatrix> init_dictionary(const SpdDataset& ds, int n, uint64_t seed) {
  if (n < 1) throw DomainError("init_dictionary: need at least one atom");
  if (static_cast<std::size_t>(n) > ds.size()) {
    throw DomainError("init_dictionary: more atoms than samples");
  }
  return le_kmeans_centroids(ds, n, seed);
}

namespace {

// Divergence spectra are independent of (alpha, beta); cache them so grid
// search and SPG blocks only redo O(N n d) arithmetic per candidate.
std::vector<std::vector<Vector>> pair_deltas(const SpdDataset& ds,
                                             const std::vector<SpdMatrix>& atoms,
                                             int threads) {
  const std::size_t nsamp = ds.size();
  std::vector<std::vector<Vector>> deltas(nsamp);
  parallel_for(nsamp, threads, [&](std::size_t i) {
    deltas[i].resize(atoms.size());
    for (std::size_t k = 0; k < atoms.size(); ++k) {
      deltas[i][k] = pair_delta(ds.inv_sqrt(i), atoms[k].mat());
    }
  });
  return deltas;
}

Matrix values_from_deltas(const std::vector<std::vector<Vector>>& deltas,
                          const std::vector<AbldParams>& params, bool with_bias) {
  const Index nsamp = static_cast<Index>(deltas.size());
  const Index n = static_cast<Index>(params.size());
  Matrix v(with_bias ? n + 1 : n, nsamp);
  for (Index i = 0; i < nsamp; ++i) {
    for (Index k = 0; k < n; ++k) {
      v(k, i) = abld_from_delta(deltas[static_cast<std::size_t>(i)]
                                      [static_cast<std::size_t>(k)],
                                params[static_cast<std::size_t>(k)]);
    }
    if (with_bias) v(n, i) = 1.0;
  }
  return v;
}

double grid_candidate_accuracy(const std::vector<std::vector<Vector>>& deltas,
                               const LabeledSpdDataset& ds,
                               const std::vector<AbldParams>& params, double gamma) {
  // deterministic 3:1 split: every 4th sample validates
  const Index nsamp = static_cast<Index>(ds.size());
  std::vector<Index> tr, va;
  for (Index i = 0; i < nsamp; ++i) {
    ((i % 4 == 3) ? va : tr).push_back(i);
  }
  if (va.empty()) va = tr;
  const Matrix v = values_from_deltas(deltas, params, false);
  const Matrix h = one_hot_labels(ds);
  Matrix vtr(v.rows(), static_cast<Index>(tr.size()));
  Matrix htr(h.rows(), static_cast<Index>(tr.size()));
  for (std::size_t c = 0; c < tr.size(); ++c) {
    vtr.col(static_cast<Index>(c)) = v.col(tr[c]);
    htr.col(static_cast<Index>(c)) = h.col(tr[c]);
  }
  Matrix w;
  try {
    w = solve_w_ridge_encoded(vtr, htr, gamma);
  } catch (const SingularSystemError&) {
    return -1.0;
  }
  int correct = 0;
  for (Index i : va) {
    Index arg = 0;
    (w * v.col(i)).maxCoeff(&arg);
    if (static_cast<int>(arg) + 1 == ds.label(static_cast<std::size_t>(i))) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(va.size());
}

}  // namespace

void init_params(const LabeledSpdDataset& ds, Dictionary& dict, ParamInit mode,
                 double gamma, int threads) {
  const int n = dict.size();
  if (dict.tying == Tying::A || dict.tying == Tying::B) {
    dict.params.assign(n, tying_frozen_params(dict.tying));
    return;
  }
  if (mode == ParamInit::Burg) {
    dict.params.assign(n, AbldParams::positive(1.0, 1.0));
    return;
  }
  static const double grid[] = {0.25, 0.5, 0.75, 1.0, 1.5, 2.0};
  const auto deltas = pair_deltas(ds, dict.atoms, threads);
  double best_acc = -2.0;
  AbldParams best = AbldParams::positive(1.0, 1.0);
  for (double a : grid) {
    for (double b : grid) {
      if (dict.tying == Tying::V && a != b) continue;
      const AbldParams cand = AbldParams::positive(a, b);
      const std::vector<AbldParams> ps(n, cand);
      const double acc = grid_candidate_accuracy(deltas, ds, ps, gamma);
      if (acc > best_acc) {
        best_acc = acc;
        best = cand;
      }
    }
  }
  dict.params.assign(n, best);
}

// ---- trainer -------------------------------------------------------------------

namespace {

Vector pack_params(const Dictionary& dict) {
  const int n = dict.size();
  switch (dict.tying) {
    case Tying::S: {
      Vector th(2);
      th << dict.params.front().alpha, dict.params.front().beta;
      return th;
    }
    case Tying::V: {
      Vector th(n);
      for (int k = 0; k < n; ++k) th(k) = dict.params[k].alpha;
      return th;
    }
    case Tying::N: {
      Vector th(2 * n);
      for (int k = 0; k < n; ++k) {
        th(k) = dict.params[k].alpha;
        th(n + k) = dict.params[k].beta;
      }
      return th;
    }
    default:
      return Vector();
  }
}

void unpack_params(Dictionary& dict, const Vector& th) {
  const int n = dict.size();
  switch (dict.tying) {
    case Tying::S:
      dict.params.assign(n, AbldParams::positive(th(0), th(1)));
      break;
    case Tying::V:
      for (int k = 0; k < n; ++k) {
        dict.params[k] = AbldParams::positive(th(k), th(k));
      }
      break;
    case Tying::N:
      for (int k = 0; k < n; ++k) {
        dict.params[k] = AbldParams::positive(th(k), th(n + k));
      }
      break;
    default:
      break;
  }
}

Vector reduce_param_grad(const Dictionary& dict, const ParamGradients& pg) {
  const int n = dict.size();
  switch (dict.tying) {
    case Tying::S: {
      Vector g(2);
      g << pg.d_alpha.sum(), pg.d_beta.sum();
      return g;
    }
    case Tying::V:
      return pg.d_alpha + pg.d_beta;
    case Tying::N: {
      Vector g(2 * n);
      g.head(n) = pg.d_alpha;
      g.tail(n) = pg.d_beta;
      return g;
    }
    default:
      return Vector();
  }
}

double mean_alpha(const Dictionary& dict) {
  double s = 0.0;
  for (const auto& p : dict.params) s += p.alpha;
  return s / dict.size();
}

double mean_beta(const Dictionary& dict) {
  double s = 0.0;
  for (const auto& p : dict.params) s += p.beta;
  return s / dict.size();
}

double train_accuracy_from_scores(const Matrix& scores,
                                  const std::vector<int>& labels) {
  int correct = 0;
  for (Index i = 0; i < scores.cols(); ++i) {
    Index arg = 0;
    scores.col(i).maxCoeff(&arg);
    if (static_cast<int>(arg) + 1 == labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(scores.cols());
}

void update_w_ssvm(Matrix& w, const Matrix& v, const std::vector<int>& labels,
                   double gamma, double margin, int max_iters, double tol) {
  double f = ssvm_loss_encoded(v, labels, w, gamma, margin);
  double step = 1.0;
  for (int it = 0; it < max_iters; ++it) {
    const Matrix g = ssvm_grad_w_encoded(v, labels, w, gamma, margin);
    const double gn2 = g.squaredNorm();
    if (gn2 < 1e-20) break;
    if (it == 0) step = 1.0 / (1.0 + std::sqrt(gn2));
    double tau = 2.0 * step;
    bool accepted = false;
    Matrix w_new;
    double f_new = 0.0;
    for (int e = 0; e < 40; ++e) {
      w_new = w - tau * g;
      f_new = ssvm_loss_encoded(v, labels, w_new, gamma, margin);
      if (f_new <= f - 1e-4 * tau * gn2) {
        accepted = true;
        break;
      }
      tau *= 0.5;
    }
    if (!accepted) break;
    step = tau;
    w = w_new;
    const double drop = f - f_new;
    f = f_new;
    if (drop <= tol * std::max(1.0, std::abs(f))) break;
  }
}

}  // namespace

TrainResult train_iddl(const LabeledSpdDataset& ds, const IddlConfig& cfg) {
  const int L = ds.num_classes();
  const int n = cfg.n_atoms > 0 ? cfg.n_atoms : 5 * L;
  const int threads = resolve_threads(cfg.threads);
  const bool bias = cfg.loss == LossKind::Ssvm;
  const std::size_t nsamp = ds.size();

  Dictionary dict;
  dict.tying = cfg.tying;
  dict.atoms = init_dictionary(ds, n, cfg.seed);
  dict.params.assign(n, AbldParams::positive(1.0, 1.0));
  init_params(ds, dict, cfg.init, cfg.gamma, threads);
  dict.validate();

  const Matrix h = one_hot_labels(ds);
  Matrix v = encode_all(ds, dict, bias, threads);

  ClassifierWeights cw;
  cw.gamma = cfg.gamma;
  cw.margin = cfg.margin;
  if (cfg.loss == LossKind::Ridge) {
    cw.w = solve_w_ridge_encoded(v, h, cfg.gamma);
  } else {
    cw.w = Matrix::Zero(L, n + 1);
    update_w_ssvm(cw.w, v, ds.labels(), cfg.gamma, cfg.margin, cfg.ssvm_w_max_iters,
                  cfg.ssvm_w_tol);
  }

  auto objective = [&]() {
    return cfg.loss == LossKind::Ridge
               ? ridge_loss_encoded(v, h, cw.w, cfg.gamma)
               : ssvm_loss_encoded(v, ds.labels(), cw.w, cfg.gamma, cfg.margin);
  };
  auto chain_matrix = [&](const Matrix& venc) {
    return cfg.loss == LossKind::Ridge
               ? ridge_dloss_dv(venc, h, cw.w)
               : ssvm_dloss_dv(venc, ds.labels(), cw.w, cfg.margin);
  };

  TrainReport rep;
  double f = objective();
  rep.objective_trace.push_back({"init", f});

  const bool learn_params = cfg.ablation != Ablation::FixParams &&
                            (dict.tying == Tying::S || dict.tying == Tying::V ||
                             dict.tying == Tying::N);
  const bool learn_atoms = cfg.ablation != Ablation::FixAtoms;

  RcgOptions atom_opts = cfg.rcg;
  atom_opts.max_iters = cfg.atom_rcg_iters;
  SpgOptions spg_opts = cfg.spg;
  spg_opts.max_iters = cfg.param_spg_iters;
  spg_opts.projection = SpgProjection{OrthantSign::Positive, kEpsMin};

  double f_outer_prev = f;
  for (int outer = 0; outer < cfg.max_outer; ++outer) {
    if (learn_atoms) {
      for (int k = 0; k < n; ++k) {
        SpdObjective obj = [&, k](const SpdMatrix& b) {
          Matrix v2 = v;
          const AbldParams& p = dict.params[k];
          parallel_for(nsamp, threads, [&](std::size_t i) {
            v2(k, static_cast<Index>(i)) =
                abld_from_delta(pair_delta(ds.inv_sqrt(i), b.mat()), p);
          });
          return cfg.loss == LossKind::Ridge
                     ? ridge_loss_encoded(v2, h, cw.w, cfg.gamma)
                     : ssvm_loss_encoded(v2, ds.labels(), cw.w, cfg.gamma,
                                         cfg.margin);
        };
        SpdGradient egrad = [&, k](const SpdMatrix& b) {
          const AtomTermGrads terms = atom_terms(ds, b, dict.params[k], threads);
          Matrix v2 = v;
          v2.row(k) = terms.row.transpose();
          const Matrix chain = chain_matrix(v2);
          Matrix g = Matrix::Zero(ds.dim(), ds.dim());
          for (std::size_t i = 0; i < nsamp; ++i) {
            g += chain(k, static_cast<Index>(i)) * terms.g[i];
          }
          return SymMatrix(sym(g));
        };
        const RcgResult r = rcg_minimize(obj, egrad, dict.atoms[k], atom_opts);
        dict.atoms[k] = r.minimizer;
        const AbldParams& p = dict.params[k];
        parallel_for(nsamp, threads, [&](std::size_t i) {
          v(k, static_cast<Index>(i)) = abld_from_delta(
              pair_delta(ds.inv_sqrt(i), dict.atoms[k].mat()), p);
        });
      }
      f = objective();
      rep.objective_trace.push_back({"atoms", f});
    }

    if (learn_params) {
      const auto deltas = pair_deltas(ds, dict.atoms, threads);
      Dictionary scratch = dict;
      VecObjective pobj = [&](const Vector& th) {
        unpack_params(scratch, th);
        const Matrix v2 = values_from_deltas(deltas, scratch.params, bias);
        return cfg.loss == LossKind::Ridge
                   ? ridge_loss_encoded(v2, h, cw.w, cfg.gamma)
                   : ssvm_loss_encoded(v2, ds.labels(), cw.w, cfg.gamma, cfg.margin);
      };
      VecGradient pgrad = [&](const Vector& th) {
        unpack_params(scratch, th);
        const Matrix v2 = values_from_deltas(deltas, scratch.params, bias);
        const Matrix chain = chain_matrix(v2).topRows(n);
        ParamGradients pg;
        pg.d_alpha = Vector::Zero(n);
        pg.d_beta = Vector::Zero(n);
        std::vector<Vector> da(nsamp), db(nsamp);
        parallel_for(nsamp, threads, [&](std::size_t i) {
          da[i] = Vector::Zero(n);
          db[i] = Vector::Zero(n);
          for (int k = 0; k < n; ++k) {
            const AbldParams& p = scratch.params[k];
            const Vector& delta = deltas[i][static_cast<std::size_t>(k)];
            const double c = chain(k, static_cast<Index>(i));
            if (c == 0.0) continue;
            da[i](k) = c * abld_grad_alpha_from_gen_eigs(delta.cwiseInverse(),
                                                         p.alpha, p.beta);
            db[i](k) =
                c * abld_grad_alpha_from_gen_eigs(delta, p.beta, p.alpha);
          }
        });
        for (std::size_t i = 0; i < nsamp; ++i) {
          pg.d_alpha += da[i];
          pg.d_beta += db[i];
        }
        return reduce_param_grad(scratch, pg);
      };
      const Vector th = spg_minimize(pobj, pgrad, pack_params(dict), spg_opts);
      unpack_params(dict, th);
      v = values_from_deltas(deltas, dict.params, bias);
      f = objective();
      rep.objective_trace.push_back({"params", f});
    }

    if (cfg.loss == LossKind::Ridge) {
      cw.w = solve_w_ridge_encoded(v, h, cfg.gamma);
    } else {
      update_w_ssvm(cw.w, v, ds.labels(), cfg.gamma, cfg.margin,
                    cfg.ssvm_w_max_iters, cfg.ssvm_w_tol);
    }
    f = objective();
    rep.objective_trace.push_back({"classifier", f});

    rep.param_trajectory.emplace_back(mean_alpha(dict), mean_beta(dict));
    const Matrix scores = cw.w * v;
    rep.train_accuracy.push_back(train_accuracy_from_scores(scores, ds.labels()));
    rep.outer_iterations = outer + 1;

    if (std::abs(f_outer_prev - f) <=
        cfg.outer_tol * std::max(1.0, std::abs(f_outer_prev))) {
      rep.termination = "converged";
      break;
    }
    f_outer_prev = f;
  }
  if (rep.termination.empty()) rep.termination = "max_outer_iterations";

  TrainResult out;
  out.model.dict = std::move(dict);
  out.model.weights = std::move(cw);
  out.model.loss = cfg.loss;
  out.report = std::move(rep);
  return out;
}

int predict(const SpdMatrix& x, const IddlModel& model) {
  const Vector v = encode(x, model.dict, model.loss == LossKind::Ssvm);
  const Vector scores = model.weights.w * v;
  Index arg = 0;
  scores.maxCoeff(&arg);
  return static_cast<int>(arg) + 1;
}

std::vector<int> predict_all(const SpdDataset& ds, const IddlModel& model,
                             int threads) {
  const Matrix v = encode_all(ds, model.dict, model.loss == LossKind::Ssvm,
                              resolve_threads(threads));
  const Matrix scores = model.weights.w * v;
  std::vector<int> out(ds.size());
  for (Index i = 0; i < scores.cols(); ++i) {
    Index arg = 0;
    scores.col(i).maxCoeff(&arg);
    out[static_cast<std::size_t>(i)] = static_cast<int>(arg) + 1;
  }
  return out;
}

double accuracy(const LabeledSpdDataset& ds, const IddlModel& model, int threads) {
  const std::vector<int> pred = predict_all(ds, model, threads);
  int correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (pred[i] == ds.label(i)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

}  // namespace spd
