#include "scriptid/classify.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "scriptid/raster.hpp"

namespace scriptid::cls {

using img::PipelineError;

namespace {

constexpr double kResidualTol = 1e-8;
constexpr double kInf = std::numeric_limits<double>::infinity();

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double dot(const double* a, const double* b, std::size_t dim) {
  double acc = 0.0;
  for (std::size_t i = 0; i < dim; ++i) acc += a[i] * b[i];
  return acc;
}

double squared_distance(const double* a, const double* b, std::size_t dim) {
  double acc = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

/// Dual system shared by every head trained on the same kernel matrix.
struct LssvmSystem {
  Eigen::MatrixXd a;  ///< K + I/reg
  Eigen::LLT<Eigen::MatrixXd> llt;
  bool llt_ok = false;
  Eigen::VectorXd eta;  ///< A^-1 * 1
  double sum_eta = 0.0;

  explicit LssvmSystem(Eigen::MatrixXd matrix) : a(std::move(matrix)) {
    llt.compute(a);
    if (llt.info() == Eigen::Success) {
      llt_ok = true;
      eta = llt.solve(Eigen::VectorXd::Ones(a.rows()));
      sum_eta = eta.sum();
    }
  }
};

Eigen::MatrixXd kernel_matrix(const DataMatrix& x, const KernelConfig& k) {
  const auto n = static_cast<Eigen::Index>(x.rows);
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = kernel(k, x.row(static_cast<std::size_t>(i)),
                              x.row(static_cast<std::size_t>(j)), x.cols);
      m(i, j) = v;
      m(j, i) = v;
    }
  return m;
}

double relative_residual(const Eigen::MatrixXd& a, const Eigen::VectorXd& y,
                         const Eigen::VectorXd& alpha, double bias) {
  const Eigen::VectorXd row = a * alpha + Eigen::VectorXd::Constant(a.rows(), bias) - y;
  const double top = alpha.sum();
  const double norm = std::sqrt(top * top + row.squaredNorm());
  return norm / std::max(1.0, y.norm());
}

/// Solves the saddle-point system for one label vector; the Cholesky
/// factorization is reused across calls, with a pivoted-LU fallback on
/// the full system when the Schur route loses accuracy.
void solve_head(const LssvmSystem& sys, const Eigen::VectorXd& y,
                Eigen::VectorXd& alpha, double& bias) {
  const Eigen::Index n = sys.a.rows();
  if (sys.llt_ok && sys.sum_eta != 0.0) {
    const Eigen::VectorXd nu = sys.llt.solve(y);
    bias = nu.sum() / sys.sum_eta;
    alpha = nu - bias * sys.eta;
    if (relative_residual(sys.a, y, alpha, bias) <= kResidualTol) return;
  }
  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(n + 1, n + 1);
  full.block(1, 0, n, 1).setOnes();
  full.block(0, 1, 1, n).setOnes();
  full.block(1, 1, n, n) = sys.a;
  Eigen::VectorXd rhs(n + 1);
  rhs(0) = 0.0;
  rhs.tail(n) = y;
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(full);
  const Eigen::VectorXd sol = lu.solve(rhs);
  bias = sol(0);
  alpha = sol.tail(n);
  if (relative_residual(sys.a, y, alpha, bias) <= kResidualTol) return;
  const Eigen::VectorXd diag = lu.matrixLU().diagonal().cwiseAbs();
  const double lo = diag.minCoeff();
  std::ostringstream msg;
  msg << "ill-conditioned: dual system unsolvable at requested accuracy"
      << " (pivot ratio " << (lo > 0.0 ? diag.maxCoeff() / lo : kInf) << ")";
  throw PipelineError("ill-conditioned", msg.str());
}

void check_labels(std::size_t rows, const std::vector<double>& y) {
  if (rows == 0 || rows != y.size())
    throw PipelineError("bad-argument", "labels must match sample rows");
  bool pos = false;
  bool neg = false;
  for (double v : y) {
    if (v > 0) pos = true;
    else neg = true;
  }
  if (!pos || !neg)
    throw PipelineError("bad-argument", "training needs both label signs");
}

struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;
};

Standardizer fit_standardizer(const DataMatrix& x) {
  Standardizer s;
  s.mean.assign(x.cols, 0.0);
  s.scale.assign(x.cols, 0.0);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const double* row = x.row(i);
    for (std::size_t j = 0; j < x.cols; ++j) s.mean[j] += row[j];
  }
  for (std::size_t j = 0; j < x.cols; ++j) s.mean[j] /= double(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const double* row = x.row(i);
    for (std::size_t j = 0; j < x.cols; ++j) {
      const double d = row[j] - s.mean[j];
      s.scale[j] += d * d;
    }
  }
  for (std::size_t j = 0; j < x.cols; ++j) {
    const double sd = std::sqrt(s.scale[j] / double(x.rows));
    s.scale[j] = sd > 0.0 ? 1.0 / sd : 0.0;
  }
  return s;
}

DataMatrix apply_standardizer(const Standardizer& s, const DataMatrix& x) {
  DataMatrix out(x.rows, x.cols);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const double* src = x.row(i);
    double* dst = out.row(i);
    for (std::size_t j = 0; j < x.cols; ++j)
      dst[j] = (src[j] - s.mean[j]) * s.scale[j];
  }
  return out;
}

std::set<int> distinct_scripts(const std::vector<int>& scripts) {
  std::set<int> present;
  for (int s : scripts) {
    if (s < 0 || s >= kScriptCount)
      throw PipelineError("bad-argument", "script index out of range");
    present.insert(s);
  }
  return present;
}

/// Trains one head per script present in `scripts` on an already
/// standardized matrix; shared by train_ova and the multiclass grid.
void train_heads(const DataMatrix& xs, const std::vector<int>& scripts,
                 const KernelConfig& k, MultiModel& model) {
  const LssvmSystem sys = [&] {
    Eigen::MatrixXd m = kernel_matrix(xs, k);
    m.diagonal().array() += 1.0 / k.reg;
    return LssvmSystem(std::move(m));
  }();
  const std::set<int> present = distinct_scripts(scripts);
  Eigen::VectorXd y(static_cast<Eigen::Index>(xs.rows));
  Eigen::VectorXd alpha;
  for (int script : present) {
    for (std::size_t i = 0; i < xs.rows; ++i)
      y(static_cast<Eigen::Index>(i)) = scripts[i] == script ? 1.0 : -1.0;
    double bias = 0.0;
    solve_head(sys, y, alpha, bias);
    auto& head = model.heads[static_cast<std::size_t>(script)];
    head.live = true;
    head.alphas.assign(alpha.data(), alpha.data() + alpha.size());
    head.bias = bias;
  }
}

ScoreVector score_from_kernel_row(const MultiModel& m,
                                  const std::vector<double>& krow) {
  ScoreVector scores;
  scores.fill(-kInf);
  for (int s = 0; s < kScriptCount; ++s) {
    const auto& head = m.heads[static_cast<std::size_t>(s)];
    if (!head.live) continue;
    double f = head.bias;
    for (std::size_t i = 0; i < krow.size(); ++i) f += head.alphas[i] * krow[i];
    scores[static_cast<std::size_t>(s)] = f;
  }
  return scores;
}

struct FoldSplit {
  std::vector<std::size_t> fold[2];
};

FoldSplit split_even_odd(std::size_t n) {
  FoldSplit f;
  for (std::size_t i = 0; i < n; ++i) f.fold[i % 2].push_back(i);
  return f;
}

DataMatrix take_rows(const DataMatrix& x, const std::vector<std::size_t>& ids) {
  DataMatrix out(ids.size(), x.cols);
  for (std::size_t i = 0; i < ids.size(); ++i)
    std::copy_n(x.row(ids[i]), x.cols, out.row(i));
  return out;
}

std::vector<KernelConfig> grid_candidates(const GridOptions& grid) {
  GridOptions g = grid;
  const GridOptions defaults = default_grid(grid.kind);
  if (g.regs.empty()) g.regs = defaults.regs;
  if (g.kind == KernelConfig::Kind::Rbf && g.gammas.empty())
    g.gammas = defaults.gammas;
  if (g.kind == KernelConfig::Kind::Linear) g.gammas = {1.0};
  std::vector<KernelConfig> out;
  for (double gamma : g.gammas)
    for (double reg : g.regs)
      out.push_back({g.kind, gamma, reg});
  return out;
}

/// Smaller reg wins ties, then smaller gamma.
bool better_candidate(double acc, const KernelConfig& cfg, double best_acc,
                      const KernelConfig& best) {
  if (acc != best_acc) return acc > best_acc;
  if (cfg.reg != best.reg) return cfg.reg < best.reg;
  return cfg.gamma < best.gamma;
}

}  // namespace

double kernel(const KernelConfig& k, const double* a, const double* b,
              std::size_t dim) {
  switch (k.kind) {
    case KernelConfig::Kind::Linear:
      return dot(a, b, dim);
    case KernelConfig::Kind::Rbf:
      return std::exp(-k.gamma * squared_distance(a, b, dim));
  }
  throw PipelineError("bad-argument", "unknown kernel kind");
}

BinaryModel train_lssvm(const DataMatrix& x, const std::vector<double>& y,
                        const KernelConfig& k) {
  check_labels(x.rows, y);
  if (k.reg <= 0.0)
    throw PipelineError("bad-argument", "regularization must be positive");
  const LssvmSystem sys = [&] {
    Eigen::MatrixXd m = kernel_matrix(x, k);
    m.diagonal().array() += 1.0 / k.reg;
    return LssvmSystem(std::move(m));
  }();
  Eigen::VectorXd labels(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i)
    labels(static_cast<Eigen::Index>(i)) = y[i];
  Eigen::VectorXd alpha;
  BinaryModel model;
  model.kernel = k;
  solve_head(sys, labels, alpha, model.bias);
  model.support = x;
  model.alphas.assign(alpha.data(), alpha.data() + alpha.size());
  return model;
}

double decide(const BinaryModel& m, const double* sample, std::size_t dim) {
  if (dim != m.support.cols)
    throw PipelineError("bad-argument", "sample dimension mismatch");
  double f = m.bias;
  for (std::size_t i = 0; i < m.support.rows; ++i)
    f += m.alphas[i] * kernel(m.kernel, sample, m.support.row(i), dim);
  return f;
}

MultiModel train_ova(const DataMatrix& x, const std::vector<int>& scripts,
                     const KernelConfig& k, feat::Extractor e) {
  if (x.rows == 0 || x.rows != scripts.size())
    throw PipelineError("bad-argument", "scripts must match sample rows");
  if (k.reg <= 0.0)
    throw PipelineError("bad-argument", "regularization must be positive");
  if (distinct_scripts(scripts).size() < 2)
    throw PipelineError("bad-argument",
                        "one-vs-all training needs at least two scripts");
  MultiModel model;
  model.extractor = e;
  model.kernel = k;
  model.dim = static_cast<std::uint32_t>(x.cols);
  const Standardizer st = fit_standardizer(x);
  model.mean = st.mean;
  model.scale = st.scale;
  model.support = apply_standardizer(st, x);
  train_heads(model.support, scripts, k, model);
  return model;
}

ScoreVector predict(const MultiModel& m, const std::vector<double>& sample) {
  if (sample.size() != m.dim)
    throw PipelineError("bad-argument", "sample dimension mismatch");
  std::vector<double> xs(sample.size());
  for (std::size_t j = 0; j < sample.size(); ++j)
    xs[j] = (sample[j] - m.mean[j]) * m.scale[j];
  std::vector<double> krow(m.support.rows);
  for (std::size_t i = 0; i < m.support.rows; ++i)
    krow[i] = kernel(m.kernel, xs.data(), m.support.row(i), m.support.cols);
  return score_from_kernel_row(m, krow);
}

int argmax_score(const ScoreVector& s) {
  int best = 0;
  for (int i = 1; i < kScriptCount; ++i)
    if (s[static_cast<std::size_t>(i)] > s[static_cast<std::size_t>(best)])
      best = i;
  return best;
}

GridOptions default_grid(KernelConfig::Kind kind) {
  GridOptions g;
  g.kind = kind;
  for (int e = -15; e <= 3; e += 3) g.gammas.push_back(std::ldexp(1.0, e));
  for (int e = -3; e <= 12; e += 3) g.regs.push_back(std::ldexp(1.0, e));
  return g;
}

KernelConfig grid_search(const DataMatrix& x, const std::vector<double>& y,
                         const GridOptions& grid) {
  check_labels(x.rows, y);
  if (x.rows < 4)
    throw PipelineError("degenerate-folds",
                        "grid search needs at least four samples");
  const FoldSplit folds = split_even_odd(x.rows);
  for (const auto& fold : folds.fold) {
    bool pos = false;
    bool neg = false;
    for (std::size_t i : fold) (y[i] > 0 ? pos : neg) = true;
    if (!pos || !neg)
      throw PipelineError("degenerate-folds",
                          "each fold needs both label signs");
  }
  const std::vector<KernelConfig> candidates = grid_candidates(grid);
  double best_acc = -1.0;
  KernelConfig best = candidates.front();
  bool any = false;
  for (const KernelConfig& cfg : candidates) {
    double acc = 0.0;
    try {
      for (int dir = 0; dir < 2; ++dir) {
        const auto& train_ids = folds.fold[dir];
        const auto& test_ids = folds.fold[1 - dir];
        const DataMatrix xtr = take_rows(x, train_ids);
        std::vector<double> ytr(train_ids.size());
        for (std::size_t i = 0; i < train_ids.size(); ++i)
          ytr[i] = y[train_ids[i]];
        const BinaryModel m = train_lssvm(xtr, ytr, cfg);
        std::size_t hits = 0;
        for (std::size_t i : test_ids) {
          const double f = decide(m, x.row(i), x.cols);
          if ((f >= 0.0 ? 1.0 : -1.0) * y[i] > 0.0) ++hits;
        }
        acc += double(hits) / double(test_ids.size());
      }
    } catch (const PipelineError& err) {
      if (err.code() != "ill-conditioned") throw;
      continue;
    }
    acc /= 2.0;
    if (!any || better_candidate(acc, cfg, best_acc, best)) {
      any = true;
      best_acc = acc;
      best = cfg;
    }
  }
  if (!any)
    throw PipelineError("ill-conditioned",
                        "no grid candidate produced a solvable system");
  return best;
}

KernelConfig grid_search_multiclass(const DataMatrix& x,
                                    const std::vector<int>& scripts,
                                    const GridOptions& grid) {
  if (x.rows == 0 || x.rows != scripts.size())
    throw PipelineError("bad-argument", "scripts must match sample rows");
  if (x.rows < 4)
    throw PipelineError("degenerate-folds",
                        "grid search needs at least four samples");
  const FoldSplit folds = split_even_odd(x.rows);
  for (const auto& fold : folds.fold) {
    std::set<int> present;
    for (std::size_t i : fold) present.insert(scripts[i]);
    if (present.size() < 2)
      throw PipelineError("degenerate-folds",
                          "each fold needs at least two scripts");
  }
  const std::vector<KernelConfig> candidates = grid_candidates(grid);

  // Per-direction sample statistics are kernel-independent, so pairwise
  // distances (or dot products) are cached once and reused for every
  // grid candidate.
  struct Direction {
    std::vector<int> train_scripts;
    std::vector<int> test_scripts;
    Eigen::MatrixXd train_stat;  ///< train x train
    Eigen::MatrixXd cross_stat;  ///< test x train
  };
  const bool rbf = grid.kind == KernelConfig::Kind::Rbf;
  std::array<Direction, 2> dirs;
  for (int d = 0; d < 2; ++d) {
    const auto& train_ids = folds.fold[d];
    const auto& test_ids = folds.fold[1 - d];
    Direction& dir = dirs[static_cast<std::size_t>(d)];
    const DataMatrix xtr = take_rows(x, train_ids);
    const DataMatrix xte = take_rows(x, test_ids);
    for (std::size_t i : train_ids) dir.train_scripts.push_back(scripts[i]);
    for (std::size_t i : test_ids) dir.test_scripts.push_back(scripts[i]);
    const Standardizer st = fit_standardizer(xtr);
    const DataMatrix xtrs = apply_standardizer(st, xtr);
    const DataMatrix xtes = apply_standardizer(st, xte);
    const auto nt = static_cast<Eigen::Index>(xtrs.rows);
    const auto ne = static_cast<Eigen::Index>(xtes.rows);
    dir.train_stat.resize(nt, nt);
    for (Eigen::Index i = 0; i < nt; ++i)
      for (Eigen::Index j = 0; j <= i; ++j) {
        const double v =
            rbf ? squared_distance(xtrs.row(static_cast<std::size_t>(i)),
                                   xtrs.row(static_cast<std::size_t>(j)),
                                   x.cols)
                : dot(xtrs.row(static_cast<std::size_t>(i)),
                      xtrs.row(static_cast<std::size_t>(j)), x.cols);
        dir.train_stat(i, j) = v;
        dir.train_stat(j, i) = v;
      }
    dir.cross_stat.resize(ne, nt);
    for (Eigen::Index i = 0; i < ne; ++i)
      for (Eigen::Index j = 0; j < nt; ++j)
        dir.cross_stat(i, j) =
            rbf ? squared_distance(xtes.row(static_cast<std::size_t>(i)),
                                   xtrs.row(static_cast<std::size_t>(j)),
                                   x.cols)
                : dot(xtes.row(static_cast<std::size_t>(i)),
                      xtrs.row(static_cast<std::size_t>(j)), x.cols);
  }

  const auto kernelize = [&](const Eigen::MatrixXd& stat, double gamma) {
    return rbf ? Eigen::MatrixXd((-gamma * stat.array()).exp())
               : stat;
  };
  double best_acc = -1.0;
  KernelConfig best = candidates.front();
  bool any = false;
  for (const KernelConfig& cfg : candidates) {
    double acc = 0.0;
    try {
      for (const Direction& dir : dirs) {
        Eigen::MatrixXd a = kernelize(dir.train_stat, cfg.gamma);
        a.diagonal().array() += 1.0 / cfg.reg;
        const LssvmSystem sys(std::move(a));
        MultiModel heads_only;
        const auto nt = static_cast<Eigen::Index>(dir.train_scripts.size());
        Eigen::VectorXd y(nt);
        Eigen::VectorXd alpha;
        for (int script : distinct_scripts(dir.train_scripts)) {
          for (Eigen::Index i = 0; i < nt; ++i)
            y(i) = dir.train_scripts[static_cast<std::size_t>(i)] == script
                       ? 1.0
                       : -1.0;
          double bias = 0.0;
          solve_head(sys, y, alpha, bias);
          auto& head = heads_only.heads[static_cast<std::size_t>(script)];
          head.live = true;
          head.alphas.assign(alpha.data(), alpha.data() + alpha.size());
          head.bias = bias;
        }
        const Eigen::MatrixXd cross = kernelize(dir.cross_stat, cfg.gamma);
        std::size_t hits = 0;
        std::vector<double> krow(static_cast<std::size_t>(nt));
        for (std::size_t i = 0; i < dir.test_scripts.size(); ++i) {
          for (Eigen::Index j = 0; j < nt; ++j)
            krow[static_cast<std::size_t>(j)] =
                cross(static_cast<Eigen::Index>(i), j);
          const ScoreVector scores = score_from_kernel_row(heads_only, krow);
          if (argmax_score(scores) == dir.test_scripts[i]) ++hits;
        }
        acc += double(hits) / double(dir.test_scripts.size());
      }
    } catch (const PipelineError& err) {
      if (err.code() != "ill-conditioned") throw;
      continue;
    }
    acc /= 2.0;
    if (!any || better_candidate(acc, cfg, best_acc, best)) {
      any = true;
      best_acc = acc;
      best = cfg;
    }
  }
  if (!any)
    throw PipelineError("ill-conditioned",
                        "no grid candidate produced a solvable system");
  return best;
}

ScoreVector fuse_scores(const ScoreVector& a, const ScoreVector& b) {
  const auto znorm = [](const ScoreVector& s) {
    ScoreVector z = s;
    double sum = 0.0;
    std::size_t n = 0;
    for (double v : s)
      if (std::isfinite(v)) {
        sum += v;
        ++n;
      }
    if (n == 0) return z;
    const double mean = sum / double(n);
    double var = 0.0;
    for (double v : s)
      if (std::isfinite(v)) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / double(n));
    for (double& v : z)
      if (std::isfinite(v)) v = sd > 0.0 ? (v - mean) / sd : 0.0;
    return z;
  };
  const ScoreVector za = znorm(a);
  const ScoreVector zb = znorm(b);
  ScoreVector fused;
  for (std::size_t i = 0; i < fused.size(); ++i)
    fused[i] = 0.5 * za[i] + 0.5 * zb[i];
  return fused;
}

}  // namespace scriptid::cls
