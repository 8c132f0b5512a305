#include "spd/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "spd/clustering.hpp"
#include "spd/divergence.hpp"
#include "spd/iddl.hpp"
#include "spd/rng.hpp"

namespace spd {

Matrix fd_sym_grad(const std::function<double(const Matrix&)>& f, const Matrix& at,
                   double h) {
  const Index d = at.rows();
  Matrix g(d, d);
  for (Index i = 0; i < d; ++i) {
    for (Index j = i; j < d; ++j) {
      Matrix e = Matrix::Zero(d, d);
      if (i == j) {
        e(i, i) = 1.0;
      } else {
        e(i, j) = 1.0;
        e(j, i) = 1.0;
      }
      const double der = (f(at + h * e) - f(at - h * e)) / (2.0 * h);
      if (i == j) {
        g(i, i) = der;
      } else {
        // directional derivative along a symmetric pair equals 2 * G_ij
        g(i, j) = der / 2.0;
        g(j, i) = der / 2.0;
      }
    }
  }
  return g;
}

double fd_scalar(const std::function<double(double)>& f, double at, double h) {
  return (f(at + h) - f(at - h)) / (2.0 * h);
}

double GradAuditReport::worst() const {
  double w = 0.0;
  for (const auto& f : families) w = std::max(w, f.max_rel_err);
  return w;
}

namespace {

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

double rel_err_mat(const Matrix& a, const Matrix& b) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), 1e-10});
}

struct Family {
  GradAuditFamily data;
  void add(double err) {
    data.max_rel_err = std::max(data.max_rel_err, err);
    data.trials++;
  }
};

AbldParams random_params(Rng& rng, bool negative) {
  const double a = rng.uniform(0.2, 2.0);
  const double b = rng.uniform(0.2, 2.0);
  return negative ? AbldParams::negative(-a, -b) : AbldParams::positive(a, b);
}

struct ToyProblem {
  LabeledSpdDataset ds;
  Dictionary dict;
  ClassifierWeights cw;
};

ToyProblem make_toy(Rng& rng, bool ssvm) {
  const int d = 4, n = 3, num = 8, num_classes = 2;
  std::vector<SpdMatrix> samples;
  std::vector<int> labels;
  for (int i = 0; i < num; ++i) {
    samples.push_back(rng.spd(d));
    labels.push_back(1 + i % num_classes);
  }
  ToyProblem tp{LabeledSpdDataset(std::move(samples), std::move(labels)), {}, {}};
  tp.dict.tying = Tying::N;
  for (int k = 0; k < n; ++k) {
    tp.dict.atoms.push_back(rng.spd(d));
    tp.dict.params.push_back(random_params(rng, false));
  }
  tp.cw.gamma = 0.05;
  tp.cw.margin = 1.0;
  tp.cw.w = 0.5 * rng.normal_matrix(num_classes, ssvm ? n + 1 : n);
  return tp;
}

// all hinge margins strictly away from the kink
bool ssvm_non_kink(const ToyProblem& tp) {
  const Matrix v = encode_all(tp.ds, tp.dict, true);
  const Matrix scores = tp.cw.w * v;
  for (Index i = 0; i < scores.cols(); ++i) {
    const int y = tp.ds.label(static_cast<std::size_t>(i)) - 1;
    for (Index l = 0; l < scores.rows(); ++l) {
      if (l == y) continue;
      if (std::abs(scores(l, i) - scores(y, i) + tp.cw.margin) < 1e-3) return false;
    }
  }
  return true;
}

Matrix fd_w_grad(const std::function<double(const Matrix&)>& f, const Matrix& at,
                 double h) {
  Matrix g(at.rows(), at.cols());
  for (Index i = 0; i < at.rows(); ++i) {
    for (Index j = 0; j < at.cols(); ++j) {
      Matrix e = Matrix::Zero(at.rows(), at.cols());
      e(i, j) = 1.0;
      g(i, j) = (f(at + h * e) - f(at - h * e)) / (2.0 * h);
    }
  }
  return g;
}

}  // namespace

GradAuditReport gradient_audit(uint64_t seed, int trials) {
  GradAuditReport report;
  if (trials <= 0) return report;
  Rng rng(seed);

  Family dalpha{{"abld_dalpha"}};
  Family dbeta{{"abld_dbeta"}};
  Family dy_pos{{"abld_dY_positive"}};
  Family dy_neg{{"abld_dY_negative"}};
  Family dy_origin{{"abld_dY_origin"}};
  Family thm{{"logdet_term_grad"}};
  Family ridge_atom{{"ridge_atom_grad"}};
  Family ridge_param{{"ridge_param_grad"}};
  Family ssvm_w{{"ssvm_w_grad"}};
  Family ssvm_atom{{"ssvm_atom_grad"}};
  Family ssvm_param{{"ssvm_param_grad"}};
  Family idc_centroid{{"idc_centroid_grad"}};
  Family idc_param{{"idc_param_grad"}};

  for (int t = 0; t < trials; ++t) {
    const int d = 4 + (t % 2);
    const SpdMatrix x = rng.spd(d);
    const SpdMatrix y = rng.spd(d);
    const bool negative = (t % 2 == 1);
    const AbldParams p = random_params(rng, negative);

    // d/d(alpha), d/d(beta)
    {
      const double fd_a = fd_scalar(
          [&](double a) {
            const AbldParams q{a, p.beta, p.orthant};
            return abld(x, y, q);
          },
          p.alpha);
      dalpha.add(rel_err(abld_grad_alpha(x, y, p), fd_a));
      const double fd_b = fd_scalar(
          [&](double b) {
            const AbldParams q{p.alpha, b, p.orthant};
            return abld(x, y, q);
          },
          p.beta);
      dbeta.add(rel_err(abld_grad_beta(x, y, p), fd_b));
    }

    // d/dY, both orthants and the origin branch
    {
      const Matrix fd = fd_sym_grad(
          [&](const Matrix& m) { return abld(x, SpdMatrix::unchecked(m), p); },
          y.mat());
      const double err = rel_err_mat(abld_grad_y(x, y, p).mat(), fd);
      (negative ? dy_neg : dy_pos).add(err);

      const AbldParams origin = AbldParams::origin();
      const Matrix fd0 = fd_sym_grad(
          [&](const Matrix& m) { return abld(x, SpdMatrix::unchecked(m), origin); },
          y.mat());
      dy_origin.add(rel_err_mat(abld_grad_y(x, y, origin).mat(), fd0));
    }

    // Theorem-style logdet helper
    {
      const double pp = rng.uniform(0.1, 1.5);
      const double qq = rng.uniform(0.3, 2.0);
      const Matrix ah = spd_sqrt(x).mat();
      auto f = [&](const Matrix& m) {
        const Vector s = sym_eigvals(sym(ah * m * ah));
        double acc = 0.0;
        for (Index i = 0; i < s.size(); ++i) {
          acc += std::log1p(pp * std::pow(s(i), qq));
        }
        return acc;
      };
      const Matrix fd = fd_sym_grad(f, y.mat());
      thm.add(rel_err_mat(logdet_term_grad(x, y, pp, qq).mat(), fd));
    }
  }

  // ridge chain-rule gradients on a toy problem
  for (int t = 0; t < trials; ++t) {
    ToyProblem tp = make_toy(rng, false);
    const int k = t % tp.dict.size();
    auto loss_with_atom = [&](const Matrix& m) {
      Dictionary dd = tp.dict;
      dd.atoms[static_cast<std::size_t>(k)] = SpdMatrix::unchecked(m);
      return ridge_loss(tp.ds, dd, tp.cw);
    };
    const Matrix fd = fd_sym_grad(loss_with_atom, tp.dict.atoms[k].mat());
    ridge_atom.add(rel_err_mat(ridge_grad_atom(tp.ds, tp.dict, tp.cw, k).mat(), fd));

    const ParamGradients pg = ridge_grad_params(tp.ds, tp.dict, tp.cw);
    const double fd_a = fd_scalar(
        [&](double a) {
          Dictionary dd = tp.dict;
          dd.params[static_cast<std::size_t>(k)].alpha = a;
          return ridge_loss(tp.ds, dd, tp.cw);
        },
        tp.dict.params[static_cast<std::size_t>(k)].alpha);
    ridge_param.add(rel_err(pg.d_alpha(k), fd_a));
    const double fd_b = fd_scalar(
        [&](double b) {
          Dictionary dd = tp.dict;
          dd.params[static_cast<std::size_t>(k)].beta = b;
          return ridge_loss(tp.ds, dd, tp.cw);
        },
        tp.dict.params[static_cast<std::size_t>(k)].beta);
    ridge_param.add(rel_err(pg.d_beta(k), fd_b));
  }

  // structured-SVM gradients at non-kink points
  for (int t = 0; t < trials; ++t) {
    ToyProblem tp = make_toy(rng, true);
    int guard = 0;
    while (!ssvm_non_kink(tp) && guard++ < 50) {
      tp.cw.w = 0.5 * rng.normal_matrix(tp.cw.w.rows(), tp.cw.w.cols());
    }
    if (guard >= 50) continue;

    const Matrix v = encode_all(tp.ds, tp.dict, true);
    auto loss_of_w = [&](const Matrix& w) {
      return ssvm_loss_encoded(v, tp.ds.labels(), w, tp.cw.gamma, tp.cw.margin);
    };
    const Matrix fd_w = fd_w_grad(loss_of_w, tp.cw.w, 1e-6);
    ssvm_w.add(rel_err_mat(ssvm_grad_w(tp.ds, tp.dict, tp.cw), fd_w));

    const int k = t % tp.dict.size();
    auto loss_with_atom = [&](const Matrix& m) {
      Dictionary dd = tp.dict;
      dd.atoms[static_cast<std::size_t>(k)] = SpdMatrix::unchecked(m);
      return ssvm_loss(tp.ds, dd, tp.cw);
    };
    const Matrix fd = fd_sym_grad(loss_with_atom, tp.dict.atoms[k].mat());
    ssvm_atom.add(rel_err_mat(ssvm_grad_atom(tp.ds, tp.dict, tp.cw, k).mat(), fd));

    const ParamGradients pg = ssvm_grad_params(tp.ds, tp.dict, tp.cw);
    const double fd_a = fd_scalar(
        [&](double a) {
          Dictionary dd = tp.dict;
          dd.params[static_cast<std::size_t>(k)].alpha = a;
          return ssvm_loss(tp.ds, dd, tp.cw);
        },
        tp.dict.params[static_cast<std::size_t>(k)].alpha);
    ssvm_param.add(rel_err(pg.d_alpha(k), fd_a));
  }

  // clustering-objective gradients
  for (int t = 0; t < trials; ++t) {
    const int d = 4;
    const int num = 6;
    std::vector<SpdMatrix> samples;
    for (int i = 0; i < num; ++i) samples.push_back(rng.spd(d));
    const SpdDataset ds(samples);
    Partition part;
    part.centroids = {rng.spd(d), rng.spd(d)};
    part.params = random_params(rng, false);
    part.mu = 1.0;
    for (int i = 0; i < num; ++i) {
      part.assignments.push_back(static_cast<int>(rng.below(2)));
    }

    const int z = t % 2;
    Matrix analytic = Matrix::Zero(d, d);
    for (int i = 0; i < num; ++i) {
      if (part.assignments[static_cast<std::size_t>(i)] != z) continue;
      analytic += abld_grad_y(ds.sample(static_cast<std::size_t>(i)),
                              part.centroids[static_cast<std::size_t>(z)], part.params)
                      .mat();
    }
    const Matrix fd = fd_sym_grad(
        [&](const Matrix& m) {
          Partition pp = part;
          pp.centroids[static_cast<std::size_t>(z)] = SpdMatrix::unchecked(m);
          return idc_objective(ds, pp);
        },
        part.centroids[static_cast<std::size_t>(z)].mat());
    if (fd.norm() > 1e-8) idc_centroid.add(rel_err_mat(analytic, fd));

    double da = 2.0 * part.mu * part.params.alpha;
    double db = 2.0 * part.mu * part.params.beta;
    for (int i = 0; i < num; ++i) {
      const auto& c = part.centroids[static_cast<std::size_t>(
          part.assignments[static_cast<std::size_t>(i)])];
      da += abld_grad_alpha(ds.sample(static_cast<std::size_t>(i)), c, part.params);
      db += abld_grad_beta(ds.sample(static_cast<std::size_t>(i)), c, part.params);
    }
    const double fd_a = fd_scalar(
        [&](double a) {
          Partition pp = part;
          pp.params.alpha = a;
          return idc_objective(ds, pp);
        },
        part.params.alpha);
    const double fd_b = fd_scalar(
        [&](double b) {
          Partition pp = part;
          pp.params.beta = b;
          return idc_objective(ds, pp);
        },
        part.params.beta);
    idc_param.add(rel_err(da, fd_a));
    idc_param.add(rel_err(db, fd_b));
  }

  for (Family* f : {&dalpha, &dbeta, &dy_pos, &dy_neg, &dy_origin, &thm, &ridge_atom,
                    &ridge_param, &ssvm_w, &ssvm_atom, &ssvm_param, &idc_centroid,
                    &idc_param}) {
    report.families.push_back(f->data);
  }
  return report;
}

}  // namespace spd
