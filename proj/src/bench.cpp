#include "scriptid/bench.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <set>
#include <sstream>
#include <thread>

#include "scriptid/imageops.hpp"
#include "scriptid/png_io.hpp"
#include "scriptid/segmentation.hpp"

namespace scriptid::bench {

using corpus::Level;
using corpus::ManifestRow;
using corpus::Modality;
using img::PipelineError;

corpus::Level test_level(TestType t) {
  return static_cast<Level>(static_cast<int>(t) % 3);
}

corpus::Modality test_modality(TestType t) {
  return static_cast<Modality>(static_cast<int>(t) / 3);
}

std::string_view test_name(TestType t) {
  switch (t) {
    case TestType::HwDocs: return "handwritten_docs";
    case TestType::HwLines: return "handwritten_lines";
    case TestType::HwWords: return "handwritten_words";
    case TestType::PrDocs: return "printed_docs";
    case TestType::PrLines: return "printed_lines";
    case TestType::PrWords: return "printed_words";
  }
  throw PipelineError("bad-argument", "invalid test type");
}

namespace {

/// MDIW-13 reference training counts per script, [modality][level].
constexpr int kTable4[kScriptCount][2][3] = {
    {{5, 88, 570}, {14, 256, 1996}},    // Arab
    {{3, 55, 401}, {27, 234, 1608}},    // Ban
    {{2, 32, 144}, {22, 190, 1229}},    // Guj
    {{4, 88, 560}, {39, 468, 3629}},    // Gurm
    {{15, 184, 1165}, {33, 215, 1706}}, // Hind
    {{4, 96, 352}, {64, 447, 1451}},    // Jap
    {{3, 122, 872}, {38, 302, 1183}},   // Kan
    {{9, 168, 575}, {26, 314, 2370}},   // Mal
    {{3, 49, 333}, {25, 348, 1660}},    // Ori
    {{9, 83, 558}, {14, 244, 1574}},    // Rom
    {{3, 150, 873}, {36, 240, 451}},    // Tam
    {{3, 123, 640}, {32, 264, 1261}},   // Tel
    {{4, 158, 1828}, {27, 194, 1856}},  // Tha
};

}  // namespace

SplitCell select_training(const corpus::Manifest& m, Level level,
                          Modality modality, const SelectOptions& opts) {
  if (!opts.preset.empty() && opts.preset != "mdiw13-table4")
    throw PipelineError("bad-argument", "unknown preset '" + opts.preset + "'");

  std::set<int> scripts;
  for (const ManifestRow& row : m.rows) scripts.insert(row.script);

  SplitCell cell;
  cell.level = level;
  cell.modality = modality;
  cell.budget = opts.budget;

  std::array<std::vector<const ManifestRow*>, kScriptCount> per_script;
  for (const ManifestRow& row : m.rows)
    if (row.level == level && row.modality == modality)
      per_script[static_cast<std::size_t>(row.script)].push_back(&row);

  std::vector<int> missing;
  for (int s : scripts)
    if (per_script[static_cast<std::size_t>(s)].empty()) missing.push_back(s);
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << "no samples for";
    for (int s : missing)
      msg << " ("
          << corpus::script_registry()[static_cast<std::size_t>(s)].abbrev
          << ", " << corpus::level_name(level) << ", "
          << corpus::modality_name(modality) << ")";
    throw PipelineError("empty-cell", msg.str());
  }

  for (int s : scripts) {
    const auto& rows = per_script[static_cast<std::size_t>(s)];
    std::size_t take = 0;
    if (opts.preset == "mdiw13-table4") {
      const auto want = static_cast<std::size_t>(
          kTable4[s][static_cast<int>(modality)][static_cast<int>(level)]);
      take = std::min(want, rows.size());
    } else {
      std::uint64_t acc = 0;
      while (take < rows.size() && acc < opts.budget)
        acc += rows[take++]->fg_pixels;
      cell.train_pixels[static_cast<std::size_t>(s)] = acc;
    }
    for (std::size_t i = 0; i < rows.size(); ++i)
      (i < take ? cell.train : cell.test).push_back(*rows[i]);
  }
  return cell;
}

cls::ScoreVector aggregate_document(
    const std::vector<cls::ScoreVector>& line_scores) {
  if (line_scores.empty())
    throw PipelineError("bad-argument", "document has no line scores");
  cls::ScoreVector mean;
  mean.fill(0.0);
  for (const cls::ScoreVector& s : line_scores)
    for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += s[c];
  for (double& v : mean) v /= double(line_scores.size());
  return mean;
}

ConfusionMatrix confusion(const std::vector<int>& preds,
                          const std::vector<int>& truths) {
  if (preds.empty() || preds.size() != truths.size())
    throw PipelineError("bad-argument",
                        "predictions and truths must align and be nonempty");
  std::array<std::array<std::size_t, kScriptCount>, kScriptCount> counts{};
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int p = preds[i];
    const int t = truths[i];
    if (p < 0 || p >= kScriptCount || t < 0 || t >= kScriptCount)
      throw PipelineError("bad-argument", "script id out of range");
    ++counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
  }
  ConfusionMatrix cm;
  for (std::size_t t = 0; t < kScriptCount; ++t) {
    std::size_t n = 0;
    for (std::size_t p = 0; p < kScriptCount; ++p) n += counts[t][p];
    cm.row_samples[t] = n;
    if (n == 0) continue;
    for (std::size_t p = 0; p < kScriptCount; ++p)
      cm.percent[t][p] = 100.0 * double(counts[t][p]) / double(n);
  }
  return cm;
}

double hit_ratio(const ConfusionMatrix& cm) {
  double sum = 0.0;
  int rows = 0;
  for (std::size_t t = 0; t < kScriptCount; ++t) {
    if (cm.row_samples[t] == 0) continue;
    sum += cm.percent[t][t];
    ++rows;
  }
  if (rows == 0)
    throw PipelineError("bad-argument", "confusion matrix has no tested rows");
  return sum / double(rows);
}

std::array<double, kScriptCount> cmc(
    const std::vector<cls::ScoreVector>& scores,
    const std::vector<int>& truths) {
  if (scores.empty() || scores.size() != truths.size())
    throw PipelineError("bad-argument",
                        "scores and truths must align and be nonempty");
  std::array<std::size_t, kScriptCount> at_rank{};
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const int t = truths[i];
    if (t < 0 || t >= kScriptCount)
      throw PipelineError("bad-argument", "script id out of range");
    const double truth_score = scores[i][static_cast<std::size_t>(t)];
    if (std::isnan(truth_score) || std::isinf(truth_score))
      throw PipelineError("bad-argument", "true-class score must be finite");
    int rank = 1;
    for (int c = 0; c < kScriptCount; ++c) {
      const double v = scores[i][static_cast<std::size_t>(c)];
      if (std::isnan(v))
        throw PipelineError("bad-argument", "score vector contains NaN");
      if (c != t && v >= truth_score) ++rank;
    }
    ++at_rank[static_cast<std::size_t>(rank - 1)];
  }
  std::array<double, kScriptCount> curve{};
  std::size_t cum = 0;
  for (std::size_t k = 0; k < kScriptCount; ++k) {
    cum += at_rank[k];
    curve[k] = 100.0 * double(cum) / double(scores.size());
  }
  return curve;
}

FeatureStore::FeatureStore(const corpus::Manifest& manifest,
                           std::vector<feat::Extractor> extractors, int jobs)
    : manifest_(&manifest), extractors_(std::move(extractors)),
      jobs_(std::max(1, jobs)) {
  if (extractors_.empty())
    throw PipelineError("bad-argument", "feature store needs extractors");
}

FeatureStore::Entry FeatureStore::compute(const ManifestRow& row) const {
  // One pass per file: load, binarize and (for documents) segment once,
  // then run every configured extractor; the entry holds the per-
  // extractor features back to back, one block per extractor.
  const std::string path = corpus::row_path(*manifest_, row);
  const img::RasterImage page = img::load_png(path);
  const img::BinaryImage ink = img::binarize(page);
  Entry entry;
  if (row.level == Level::Document) {
    const std::vector<seg::Region> lines = seg::segment_lines(ink);
    for (feat::Extractor e : extractors_)
      for (const seg::Region& line : lines)
        entry.push_back(
            feat::extract(e, img::crop(page, line.box), line.mask));
  } else {
    for (feat::Extractor e : extractors_)
      entry.push_back(feat::extract(e, page, ink));
  }
  return entry;
}

const FeatureStore::Entry& FeatureStore::entry(const ManifestRow& row,
                                               feat::Extractor e) {
  auto slot = std::find(extractors_.begin(), extractors_.end(), e);
  if (slot == extractors_.end())
    throw PipelineError("bad-argument", "extractor not configured in store");
  const std::pair<int, std::string> key(static_cast<int>(e), row.path);
  auto it = cache_.find(key);
  if (it == cache_.end()) {
    warm({&row});
    it = cache_.find(key);
  }
  return it->second;
}

void FeatureStore::warm(const std::vector<const ManifestRow*>& rows) {
  std::vector<const ManifestRow*> todo;
  std::set<std::string> seen;
  for (const ManifestRow* row : rows) {
    const std::pair<int, std::string> key(
        static_cast<int>(extractors_.front()), row->path);
    if (cache_.count(key) || !seen.insert(row->path).second) continue;
    todo.push_back(row);
  }
  if (todo.empty()) return;

  std::vector<Entry> results(todo.size());
  std::vector<std::exception_ptr> errors(todo.size());
  const int workers =
      std::min<int>(jobs_, static_cast<int>(todo.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < todo.size(); ++i) {
      try {
        results[i] = compute(*todo[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t i = static_cast<std::size_t>(w); i < todo.size();
             i += static_cast<std::size_t>(workers)) {
          try {
            results[i] = compute(*todo[i]);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    for (std::thread& t : pool) t.join();
  }
  for (std::size_t i = 0; i < todo.size(); ++i)
    if (errors[i]) std::rethrow_exception(errors[i]);

  // The per-extractor blocks of each entry are split out sequentially,
  // so insertion order (and therefore cache state) is job-independent.
  for (std::size_t i = 0; i < todo.size(); ++i) {
    const ManifestRow& row = *todo[i];
    Entry& all = results[i];
    const std::size_t per =
        all.size() / extractors_.size();  // lines per extractor block
    for (std::size_t e = 0; e < extractors_.size(); ++e) {
      Entry block(all.begin() + static_cast<std::ptrdiff_t>(e * per),
                  all.begin() + static_cast<std::ptrdiff_t>((e + 1) * per));
      cache_.emplace(std::make_pair(static_cast<int>(extractors_[e]), row.path),
                     std::move(block));
    }
  }
}

const std::vector<double>& FeatureStore::unit(const ManifestRow& row,
                                              feat::Extractor e) {
  if (row.level == Level::Document)
    throw PipelineError("bad-argument", "unit() is for line/word rows");
  return entry(row, e).front();
}

const std::vector<std::vector<double>>& FeatureStore::doc_lines(
    const ManifestRow& row, feat::Extractor e) {
  if (row.level != Level::Document)
    throw PipelineError("bad-argument", "doc_lines() is for document rows");
  return entry(row, e);
}

namespace {

struct TrainConfig {
  std::string label;
  std::vector<TestType> cells;
};

std::vector<TrainConfig> task_configs(int task) {
  std::vector<TrainConfig> configs;
  switch (task) {
    case 1:
      for (TestType t : kTestTypes)
        configs.push_back({std::string(test_name(t)), {t}});
      break;
    case 2:
      configs.push_back({"handwritten_all",
                         {TestType::HwDocs, TestType::HwLines,
                          TestType::HwWords}});
      configs.push_back({"printed_all",
                         {TestType::PrDocs, TestType::PrLines,
                          TestType::PrWords}});
      break;
    case 3:
      configs.push_back(
          {"all", std::vector<TestType>(kTestTypes.begin(), kTestTypes.end())});
      break;
    default:
      throw PipelineError("bad-argument", "task must be 1, 2 or 3");
  }
  return configs;
}

std::vector<feat::Extractor> benchmark_extractors(int benchmark) {
  if (benchmark == 1) return {feat::Extractor::Lbp, feat::Extractor::Hot};
  if (benchmark == 2) return {feat::Extractor::Dmb};
  throw PipelineError("bad-argument", "benchmark must be 1 or 2");
}

}  // namespace

std::vector<EvalReport> run_task(const corpus::Manifest& m,
                                 const TaskOptions& opt, FeatureStore& store,
                                 std::vector<NamedModel>* models_out) {
  const std::vector<feat::Extractor> exts = benchmark_extractors(opt.benchmark);
  for (feat::Extractor e : exts)
    if (std::find(store.extractors().begin(), store.extractors().end(), e) ==
        store.extractors().end())
      throw PipelineError("bad-argument",
                          "feature store lacks a benchmark extractor");
  const std::vector<TrainConfig> configs = task_configs(opt.task);

  // All six split cells are needed (every config tests all test types);
  // a missing cell therefore fails here, before any training.
  std::array<SplitCell, 6> cells;
  for (TestType t : kTestTypes)
    cells[static_cast<std::size_t>(t)] =
        select_training(m, test_level(t), test_modality(t), opt.select);
  for (const SplitCell& cell : cells) {
    std::set<std::string> train_paths;
    for (const ManifestRow& row : cell.train) train_paths.insert(row.path);
    for (const ManifestRow& row : cell.test)
      if (train_paths.count(row.path))
        throw PipelineError("split-overlap",
                            "train/test overlap at " + row.path);
  }

  std::vector<const ManifestRow*> need;
  for (const SplitCell& cell : cells) {
    for (const ManifestRow& row : cell.train) need.push_back(&row);
    for (const ManifestRow& row : cell.test) need.push_back(&row);
  }
  store.warm(need);

  const cls::KernelConfig::Kind kind = opt.benchmark == 1
                                            ? cls::KernelConfig::Kind::Rbf
                                            : cls::KernelConfig::Kind::Linear;
  std::vector<EvalReport> reports;
  for (const TrainConfig& config : configs) {
    // Training vectors: whole line/word images plus the segmented lines
    // of training documents, in fixed cell order.
    std::vector<int> scripts;
    std::vector<std::vector<const std::vector<double>*>> sources(exts.size());
    for (TestType t : config.cells) {
      const SplitCell& cell = cells[static_cast<std::size_t>(t)];
      for (const ManifestRow& row : cell.train) {
        if (row.level == Level::Document) {
          const std::size_t lines =
              store.doc_lines(row, exts.front()).size();
          for (std::size_t e = 0; e < exts.size(); ++e) {
            const auto& feats = store.doc_lines(row, exts[e]);
            for (const auto& f : feats) sources[e].push_back(&f);
          }
          for (std::size_t i = 0; i < lines; ++i)
            scripts.push_back(row.script);
        } else {
          for (std::size_t e = 0; e < exts.size(); ++e)
            sources[e].push_back(&store.unit(row, exts[e]));
          scripts.push_back(row.script);
        }
      }
    }

    std::vector<cls::MultiModel> models(exts.size());
    for (std::size_t e = 0; e < exts.size(); ++e) {
      const std::size_t dim =
          static_cast<std::size_t>(feat::extractor_dim(exts[e]));
      cls::DataMatrix x(sources[e].size(), dim);
      for (std::size_t i = 0; i < sources[e].size(); ++i)
        std::copy(sources[e][i]->begin(), sources[e][i]->end(), x.row(i));
      const cls::KernelConfig best =
          cls::grid_search_multiclass(x, scripts, cls::default_grid(kind));
      models[e] = cls::train_ova(x, scripts, best, exts[e]);
      if (models_out)
        models_out->emplace_back(
            config.label + "_" + feat::extractor_name(exts[e]), models[e]);
    }

    const auto score_unit = [&](const ManifestRow& row) {
      if (opt.benchmark == 1)
        return cls::fuse_scores(
            cls::predict(models[0], store.unit(row, exts[0])),
            cls::predict(models[1], store.unit(row, exts[1])));
      return cls::predict(models[0], store.unit(row, exts[0]));
    };
    const auto score_doc = [&](const ManifestRow& row) {
      const auto& first = store.doc_lines(row, exts[0]);
      std::vector<cls::ScoreVector> line_scores;
      line_scores.reserve(first.size());
      if (opt.benchmark == 1) {
        const auto& second = store.doc_lines(row, exts[1]);
        for (std::size_t i = 0; i < first.size(); ++i)
          line_scores.push_back(
              cls::fuse_scores(cls::predict(models[0], first[i]),
                               cls::predict(models[1], second[i])));
      } else {
        for (const auto& f : first)
          line_scores.push_back(cls::predict(models[0], f));
      }
      return aggregate_document(line_scores);
    };

    EvalReport report;
    report.task = opt.task;
    report.benchmark = opt.benchmark;
    report.config = config.label;
    for (TestType t : kTestTypes) {
      const SplitCell& cell = cells[static_cast<std::size_t>(t)];
      std::vector<cls::ScoreVector> scores;
      std::vector<int> preds;
      std::vector<int> truths;
      for (const ManifestRow& row : cell.test) {
        const cls::ScoreVector s = row.level == Level::Document
                                       ? score_doc(row)
                                       : score_unit(row);
        scores.push_back(s);
        preds.push_back(cls::argmax_score(s));
        truths.push_back(row.script);
      }
      CellResult result;
      result.type = t;
      result.samples = truths.size();
      result.cm = confusion(preds, truths);
      result.hit = hit_ratio(result.cm);
      result.curve = cmc(scores, truths);

      // Rank-1 must equal the sample-weighted confusion diagonal.
      double weighted = 0.0;
      std::size_t total = 0;
      for (std::size_t r = 0; r < kScriptCount; ++r) {
        weighted +=
            result.cm.percent[r][r] * double(result.cm.row_samples[r]);
        total += result.cm.row_samples[r];
      }
      weighted /= double(total);
      if (std::abs(weighted - result.curve[0]) > 1e-6)
        throw PipelineError("metric-identity",
                            "rank-1 CMC does not match the weighted diagonal");
      report.cells.push_back(result);
    }
    reports.push_back(std::move(report));
  }
  return reports;
}

}  // namespace scriptid::bench
