#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "scriptid/classify.hpp"
#include "scriptid/corpus.hpp"

namespace scriptid::bench {

constexpr int kScriptCount = cls::kScriptCount;

/// The six evaluation cells, modality-major.
enum class TestType : int {
  HwDocs = 0,
  HwLines = 1,
  HwWords = 2,
  PrDocs = 3,
  PrLines = 4,
  PrWords = 5,
};
constexpr std::array<TestType, 6> kTestTypes = {
    TestType::HwDocs, TestType::HwLines, TestType::HwWords,
    TestType::PrDocs, TestType::PrLines, TestType::PrWords};

corpus::Level test_level(TestType t);
corpus::Modality test_modality(TestType t);
std::string_view test_name(TestType t);  // e.g. "handwritten_docs"

struct SelectOptions {
  std::uint64_t budget = 2'000'000;  ///< foreground pixels per script
  std::string preset;                ///< "" or "mdiw13-table4"
};

/// Train/test split of one (level, modality) cell.  Training rows are a
/// per-script prefix of the numerically ordered samples: accumulation
/// stops at (and includes) the first sample that reaches the pixel
/// budget; shorter cells contribute everything.
struct SplitCell {
  corpus::Level level = corpus::Level::Document;
  corpus::Modality modality = corpus::Modality::Handwritten;
  std::uint64_t budget = 0;
  std::vector<corpus::ManifestRow> train;
  std::vector<corpus::ManifestRow> test;
  std::array<std::uint64_t, kScriptCount> train_pixels{};
};

/// Throws "empty-cell" listing every manifest script with no sample in
/// the requested cell.  The "mdiw13-table4" preset replaces the pixel
/// rule with the fixed per-script training counts of the MDIW-13
/// reference split.
SplitCell select_training(const corpus::Manifest& m, corpus::Level level,
                          corpus::Modality modality,
                          const SelectOptions& opts = {});

/// Mean per-class score over the lines of one document.
cls::ScoreVector aggregate_document(
    const std::vector<cls::ScoreVector>& line_scores);

/// Row-normalized percentages; untested rows stay all-zero.
struct ConfusionMatrix {
  std::array<std::array<double, kScriptCount>, kScriptCount> percent{};
  std::array<std::size_t, kScriptCount> row_samples{};
};

ConfusionMatrix confusion(const std::vector<int>& preds,
                          const std::vector<int>& truths);

/// Mean of the diagonal over rows with at least one test sample.
double hit_ratio(const ConfusionMatrix& cm);

/// Cumulative match curve over 13 ranks.  The rank of the true class is
/// pessimistic: equal scores rank after it.  The true class score must
/// be finite; -inf entries for scripts absent from training are allowed
/// elsewhere and never outrank a finite truth.
std::array<double, kScriptCount> cmc(const std::vector<cls::ScoreVector>& scores,
                                     const std::vector<int>& truths);

/// Caches per-sample features keyed by (extractor, path).  Documents are
/// segmented into lines once and cached as one feature per line; line
/// and word images yield a single feature.
class FeatureStore {
 public:
  FeatureStore(const corpus::Manifest& manifest,
               std::vector<feat::Extractor> extractors, int jobs = 1);

  const std::vector<feat::Extractor>& extractors() const {
    return extractors_;
  }

  /// Computes any missing entries for `rows`, fanning out over `jobs`
  /// worker threads; results are merged in row order, so the cache
  /// contents never depend on the job count.
  void warm(const std::vector<const corpus::ManifestRow*>& rows);

  /// Whole-image feature of a line or word row.
  const std::vector<double>& unit(const corpus::ManifestRow& row,
                                  feat::Extractor e);

  /// Per-segmented-line features of a document row, in line order.
  const std::vector<std::vector<double>>& doc_lines(
      const corpus::ManifestRow& row, feat::Extractor e);

 private:
  using Entry = std::vector<std::vector<double>>;
  Entry compute(const corpus::ManifestRow& row) const;
  const Entry& entry(const corpus::ManifestRow& row, feat::Extractor e);

  const corpus::Manifest* manifest_;
  std::vector<feat::Extractor> extractors_;
  int jobs_;
  std::map<std::pair<int, std::string>, Entry> cache_;
};

struct TaskOptions {
  int task = 3;       ///< 1, 2 or 3
  int benchmark = 1;  ///< 1 = LBP+HOT score fusion, 2 = dense multi-block LBP
  SelectOptions select;
  std::uint64_t seed = 13;
  int jobs = 1;          ///< worker threads; never affects report bytes
  std::string command;   ///< provenance only, recorded in runconfig.txt
  std::string corpus;    ///< provenance only
};

struct CellResult {
  TestType type = TestType::HwDocs;
  std::size_t samples = 0;
  ConfusionMatrix cm;
  double hit = 0.0;                            ///< hit ratio %
  std::array<double, kScriptCount> curve{};    ///< CMC, curve[0] = rank-1
};

/// One trained configuration evaluated against all six test types.
struct EvalReport {
  int task = 0;
  int benchmark = 0;
  std::string config;
  std::vector<CellResult> cells;  ///< kTestTypes order
};

/// A trained model labeled "<config>_<extractor>".
using NamedModel = std::pair<std::string, cls::MultiModel>;

/// Runs one task end to end: split cells, per-config kernel grid search
/// and one-vs-all training, then evaluation of all six test types.
/// Task 1 yields 6 reports (one per cell config), Task 2 yields 2
/// (per-modality), Task 3 yields 1 (everything).  When `models` is given
/// it receives every trained one-vs-all model.
std::vector<EvalReport> run_task(const corpus::Manifest& m,
                                 const TaskOptions& opt, FeatureStore& store,
                                 std::vector<NamedModel>* models = nullptr);

/// Emits the per-task hit-ratio and rank-1 tables plus one confusion and
/// one CMC CSV per (config, test type), and a runconfig.txt snapshot.
/// Output is byte-identical across repeated runs on identical inputs.
void write_reports(const std::string& dir,
                   const std::vector<EvalReport>& reports,
                   const TaskOptions& opt);

}  // namespace scriptid::bench
