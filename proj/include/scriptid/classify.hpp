#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "scriptid/features.hpp"

namespace scriptid::cls {

constexpr int kScriptCount = 13;

/// Per-script decision values, indexed in registry order.
using ScoreVector = std::array<double, kScriptCount>;

struct KernelConfig {
  enum class Kind : std::uint8_t { Linear = 0, Rbf = 1 };
  Kind kind = Kind::Rbf;
  double gamma = 1.0;  ///< rbf only
  double reg = 1.0;    ///< least-squares regularization

  bool operator==(const KernelConfig&) const = default;
};

/// Row-major sample matrix.
struct DataMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  DataMatrix() = default;
  DataMatrix(std::size_t r, std::size_t c)
      : rows(r), cols(c), values(r * c, 0.0) {}
  const double* row(std::size_t i) const { return values.data() + i * cols; }
  double* row(std::size_t i) { return values.data() + i * cols; }
};

/// Kernel value for two equally-sized vectors.
double kernel(const KernelConfig& k, const double* a, const double* b,
              std::size_t dim);

/// One binary least-squares SVM: every training vector is a support
/// vector; the decision is f(x) = sum alpha_i k(x, x_i) + bias.
struct BinaryModel {
  KernelConfig kernel;
  int script = -1;  ///< positive-class id when part of a multiclass set
  DataMatrix support;
  std::vector<double> alphas;
  double bias = 0.0;
};

/// Trains by solving the dual system [[0,1^T],[1,K+I/reg]]*[b;a] = [0;y]
/// with a direct dense factorization.  Requires at least one sample of
/// each sign; throws "ill-conditioned" when no accurate solution exists.
BinaryModel train_lssvm(const DataMatrix& x, const std::vector<double>& y,
                        const KernelConfig& k);

double decide(const BinaryModel& m, const double* sample, std::size_t dim);

/// 13 one-vs-all machines over a shared (standardized) training set.
/// Scripts absent from training keep a null head that scores -infinity.
struct MultiModel {
  feat::Extractor extractor = feat::Extractor::Lbp;
  KernelConfig kernel;
  std::uint32_t dim = 0;
  std::vector<double> mean;   ///< per-dimension standardization offset
  std::vector<double> scale;  ///< per-dimension multiplier; 0 drops the dim
  DataMatrix support;         ///< standardized training rows
  struct Head {
    bool live = false;
    std::vector<double> alphas;
    double bias = 0.0;
  };
  std::array<Head, kScriptCount> heads;
};

/// `scripts` holds a registry index per row; at least two distinct
/// scripts must be present.
MultiModel train_ova(const DataMatrix& x, const std::vector<int>& scripts,
                     const KernelConfig& k, feat::Extractor e);

/// Raw per-script decision values for one sample (`-inf` for null heads).
ScoreVector predict(const MultiModel& m, const std::vector<double>& sample);

/// Lowest index among the maxima.
int argmax_score(const ScoreVector& s);

struct GridOptions {
  KernelConfig::Kind kind = KernelConfig::Kind::Rbf;
  std::vector<double> gammas;  ///< ignored for linear kernels
  std::vector<double> regs;
};

/// Default log-spaced grid: gamma 2^-15..2^3 (step 2^3), reg 2^-3..2^12.
GridOptions default_grid(KernelConfig::Kind kind);

/// Binary 2-fold grid search (folds = even/odd sample indices).  Returns
/// the (gamma, reg) with the best mean fold accuracy; ties prefer the
/// smaller reg, then the smaller gamma.
KernelConfig grid_search(const DataMatrix& x, const std::vector<double>& y,
                         const GridOptions& grid);

/// Same 2-fold protocol scored by multiclass rank-1 accuracy, used to
/// pick one shared kernel per extractor for the one-vs-all ensemble.
KernelConfig grid_search_multiclass(const DataMatrix& x,
                                    const std::vector<int>& scripts,
                                    const GridOptions& grid);

/// 50/50 score fusion after per-vector z-normalization.  Statistics are
/// taken over the finite entries, so null-model -inf scores pass through
/// unchanged.
ScoreVector fuse_scores(const ScoreVector& a, const ScoreVector& b);

}  // namespace scriptid::cls
