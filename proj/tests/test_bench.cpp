#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "scriptid/bench.hpp"
#include "scriptid/synth.hpp"
#include "test_util.hpp"

using namespace scriptid;
using testutil::error_code;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

corpus::ManifestRow make_row(int script, corpus::Level level,
                             corpus::Modality mod, int doc,
                             std::uint64_t fg, int line = 0, int word = 0) {
  corpus::ManifestRow row;
  row.script = script;
  row.level = level;
  row.modality = mod;
  row.doc = doc;
  row.line = line;
  row.word = word;
  row.fg_pixels = fg;
  corpus::ParsedName name;
  name.script = script;
  name.level = level;
  name.doc = doc;
  name.line = line;
  name.word = word;
  row.path = corpus::render_name(name);
  return row;
}

std::map<std::string, std::string> dir_bytes(const std::filesystem::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    std::ifstream in(entry.path(), std::ios::binary);
    out[entry.path().filename().string()] =
        std::string((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  }
  return out;
}

}  // namespace

TEST_CASE("test types map onto level and modality") {
  using bench::TestType;
  CHECK(bench::test_level(TestType::HwDocs) == corpus::Level::Document);
  CHECK(bench::test_level(TestType::HwLines) == corpus::Level::Line);
  CHECK(bench::test_level(TestType::PrWords) == corpus::Level::Word);
  CHECK(bench::test_modality(TestType::HwWords) == corpus::Modality::Handwritten);
  CHECK(bench::test_modality(TestType::PrDocs) == corpus::Modality::Printed);
  CHECK(bench::test_name(TestType::HwDocs) == "handwritten_docs");
  CHECK(bench::test_name(TestType::PrLines) == "printed_lines");
}

TEST_CASE("training selection stops at the sample crossing the budget") {
  corpus::Manifest m;
  m.rows = {
      make_row(0, corpus::Level::Line, corpus::Modality::Handwritten, 1,
               1'500'000, 1),
      make_row(0, corpus::Level::Line, corpus::Modality::Handwritten, 1,
               800'000, 2),
      make_row(0, corpus::Level::Line, corpus::Modality::Handwritten, 1,
               300'000, 3),
  };
  const bench::SplitCell cell = bench::select_training(
      m, corpus::Level::Line, corpus::Modality::Handwritten, {});
  REQUIRE(cell.train.size() == 2);  // 1.5M then 0.8M reach the 2M budget
  CHECK(cell.train[0].line == 1);
  CHECK(cell.train[1].line == 2);
  REQUIRE(cell.test.size() == 1);
  CHECK(cell.test[0].line == 3);
  CHECK(cell.train_pixels[0] == 2'300'000);

  // a short cell contributes everything
  bench::SelectOptions huge;
  huge.budget = 10'000'000;
  const bench::SplitCell all = bench::select_training(
      m, corpus::Level::Line, corpus::Modality::Handwritten, huge);
  CHECK(all.train.size() == 3);
  CHECK(all.test.empty());
}

TEST_CASE("missing cells are reported per script") {
  corpus::Manifest m;
  m.rows = {
      make_row(0, corpus::Level::Line, corpus::Modality::Handwritten, 1, 10, 1),
      make_row(4, corpus::Level::Word, corpus::Modality::Handwritten, 1, 10, 1,
               1),
  };
  try {
    bench::select_training(m, corpus::Level::Word,
                           corpus::Modality::Handwritten, {});
    FAIL("expected an error");
  } catch (const img::PipelineError& e) {
    CHECK(e.code() == "empty-cell");
    CHECK(std::string(e.what()).find("(Arab, word, handwritten)") !=
          std::string::npos);
  }
  CHECK(error_code([&] {
          bench::SelectOptions opts;
          opts.preset = "mystery";
          bench::select_training(m, corpus::Level::Line,
                                 corpus::Modality::Handwritten, opts);
        }) == "bad-argument");
}

TEST_CASE("the reference preset takes fixed per-script counts") {
  corpus::Manifest m;
  for (int doc = 1; doc <= 8; ++doc)
    m.rows.push_back(make_row(0, corpus::Level::Document,
                              corpus::Modality::Handwritten, doc, 1000));
  for (int doc = 1; doc <= 4; ++doc)
    m.rows.push_back(make_row(2, corpus::Level::Document,
                              corpus::Modality::Handwritten, doc, 1000));
  for (int doc = 1; doc <= 3; ++doc)
    m.rows.push_back(make_row(4, corpus::Level::Document,
                              corpus::Modality::Handwritten, doc, 1000));
  bench::SelectOptions opts;
  opts.preset = "mdiw13-table4";
  const bench::SplitCell cell = bench::select_training(
      m, corpus::Level::Document, corpus::Modality::Handwritten, opts);
  std::array<int, 13> train_count{};
  std::array<int, 13> test_count{};
  for (const corpus::ManifestRow& row : cell.train) ++train_count[row.script];
  for (const corpus::ManifestRow& row : cell.test) ++test_count[row.script];
  CHECK(train_count[0] == 5);  // Arab handwritten docs
  CHECK(test_count[0] == 3);
  CHECK(train_count[2] == 2);  // Guj handwritten docs
  CHECK(test_count[2] == 2);
  CHECK(train_count[4] == 3);  // Hind wants 15, only 3 exist
  CHECK(test_count[4] == 0);
}

TEST_CASE("document scores average their line scores") {
  cls::ScoreVector a{};
  cls::ScoreVector b{};
  for (int i = 0; i < 13; ++i) {
    a[i] = i;
    b[i] = 13.0 - i;
  }
  const cls::ScoreVector mean = bench::aggregate_document({a, b});
  for (int i = 0; i < 13; ++i) CHECK(mean[i] == doctest::Approx(6.5));
  CHECK(error_code([] { bench::aggregate_document({}); }) == "bad-argument");
}

TEST_CASE("confusion rows normalize to percentages") {
  const std::vector<int> truths = {0, 0, 0, 0, 5, 5, 12};
  const std::vector<int> preds = {0, 0, 0, 5, 5, 5, 0};
  const bench::ConfusionMatrix cm = bench::confusion(preds, truths);
  CHECK(cm.row_samples[0] == 4);
  CHECK(cm.percent[0][0] == doctest::Approx(75.0));
  CHECK(cm.percent[0][5] == doctest::Approx(25.0));
  CHECK(cm.row_samples[5] == 2);
  CHECK(cm.percent[5][5] == doctest::Approx(100.0));
  CHECK(cm.row_samples[12] == 1);
  CHECK(cm.percent[12][0] == doctest::Approx(100.0));
  CHECK(cm.percent[12][12] == 0.0);
  CHECK(cm.row_samples[3] == 0);  // untested row stays zero
  for (int p = 0; p < 13; ++p) CHECK(cm.percent[3][p] == 0.0);

  CHECK(error_code([] { bench::confusion({}, {}); }) == "bad-argument");
  CHECK(error_code([] { bench::confusion({0, 1}, {0}); }) == "bad-argument");
  CHECK(error_code([] { bench::confusion({13}, {0}); }) == "bad-argument");

  // diagonal mean over the three tested rows
  CHECK(bench::hit_ratio(cm) ==
        doctest::Approx((75.0 + 100.0 + 0.0) / 3.0));
  CHECK(error_code([] {
          bench::hit_ratio(bench::ConfusionMatrix{});
        }) == "bad-argument");
}

TEST_CASE("hit ratio equals an independent diagonal-mean oracle") {
  std::mt19937_64 rng(307);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng() % 60;
    std::vector<int> preds(n), truths(n);
    for (std::size_t i = 0; i < n; ++i) {
      preds[i] = static_cast<int>(rng() % 13);
      truths[i] = static_cast<int>(rng() % 13);
    }
    const bench::ConfusionMatrix cm = bench::confusion(preds, truths);
    double sum = 0.0;
    int rows = 0;
    for (int t = 0; t < 13; ++t) {
      std::size_t total = 0, hits = 0;
      for (std::size_t i = 0; i < n; ++i)
        if (truths[i] == t) {
          ++total;
          if (preds[i] == t) ++hits;
        }
      if (!total) continue;
      sum += 100.0 * double(hits) / double(total);
      ++rows;
    }
    CHECK(bench::hit_ratio(cm) == doctest::Approx(sum / rows).epsilon(1e-12));
  }
}

TEST_CASE("the match curve ranks ties pessimistically") {
  cls::ScoreVector flat{};
  flat.fill(0.0);
  const auto uniform = bench::cmc({flat}, {0});
  for (int k = 0; k < 12; ++k) CHECK(uniform[k] == 0.0);  // rank 13
  CHECK(uniform[12] == 100.0);

  cls::ScoreVector top{};
  top.fill(0.0);
  top[4] = 1.0;
  CHECK(bench::cmc({top}, {4})[0] == 100.0);
  // one competitor ties the truth: rank 2
  top[9] = 1.0;
  const auto tied = bench::cmc({top}, {4});
  CHECK(tied[0] == 0.0);
  CHECK(tied[1] == 100.0);

  // -inf entries for untrained scripts are fine outside the truth
  cls::ScoreVector holes{};
  holes.fill(-kInf);
  holes[2] = 0.5;
  holes[7] = 0.25;
  CHECK(bench::cmc({holes}, {2})[0] == 100.0);
  CHECK(error_code([&] { bench::cmc({holes}, {3}); }) == "bad-argument");
  cls::ScoreVector poison{};
  poison.fill(0.0);
  poison[11] = std::nan("");
  CHECK(error_code([&] { bench::cmc({poison}, {0}); }) == "bad-argument");
  CHECK(error_code([] { bench::cmc({}, {}); }) == "bad-argument");
}

TEST_CASE("the match curve matches a sort oracle and is monotone") {
  std::mt19937_64 rng(509);
  std::uniform_real_distribution<double> d(-5.0, 5.0);
  std::vector<cls::ScoreVector> scores;
  std::vector<int> truths;
  for (int i = 0; i < 200; ++i) {
    cls::ScoreVector s{};
    for (double& v : s) v = d(rng);
    if (i % 7 == 0) s[(i / 7) % 13] = -kInf;  // some dead heads
    truths.push_back(static_cast<int>(rng() % 13));
    s[truths.back()] = d(rng);  // keep the truth finite
    scores.push_back(s);
  }
  const auto curve = bench::cmc(scores, truths);
  // oracle: count strictly-better-or-equal competitors per sample
  std::array<int, 13> at_rank{};
  for (std::size_t i = 0; i < scores.size(); ++i) {
    int rank = 1;
    for (int c = 0; c < 13; ++c)
      if (c != truths[i] && scores[i][c] >= scores[i][truths[i]]) ++rank;
    ++at_rank[rank - 1];
  }
  int cum = 0;
  for (int k = 0; k < 13; ++k) {
    cum += at_rank[k];
    CHECK(curve[k] == doctest::Approx(100.0 * cum / 200.0).epsilon(1e-12));
    if (k) CHECK(curve[k] >= curve[k - 1]);
  }
  CHECK(curve[12] == 100.0);
}

namespace {

/// Tiny two-script corpus shared by the pipeline tests below.
struct MiniCorpus {
  testutil::TempDir dir{"mini"};
  corpus::Manifest manifest;
  bench::FeatureStore store;

  static corpus::Manifest build(const std::string& root) {
    synth::SynthOptions opts;
    opts.classes = 2;
    opts.docs_per_class = 4;
    opts.lines_per_doc = 2;
    opts.words_per_line = 2;
    opts.seed = 17;
    return synth::generate(root, opts);
  }

  MiniCorpus()
      : manifest(build(dir.str())), store(manifest, {feat::Extractor::Dmb}) {}
};

MiniCorpus& mini() {
  static MiniCorpus corpus;
  return corpus;
}

bench::TaskOptions mini_options(int task) {
  bench::TaskOptions opt;
  opt.task = task;
  opt.benchmark = 2;
  opt.select.budget = 100'000;
  return opt;
}

}  // namespace

TEST_CASE("feature store caches lines, words and segmented documents") {
  MiniCorpus& mc = mini();
  const corpus::ManifestRow* doc = nullptr;
  const corpus::ManifestRow* line = nullptr;
  const corpus::ManifestRow* word = nullptr;
  for (const corpus::ManifestRow& row : mc.manifest.rows) {
    if (!doc && row.level == corpus::Level::Document) doc = &row;
    if (!line && row.level == corpus::Level::Line) line = &row;
    if (!word && row.level == corpus::Level::Word) word = &row;
  }
  REQUIRE(doc);
  REQUIRE(line);
  REQUIRE(word);

  const auto& lines = mc.store.doc_lines(*doc, feat::Extractor::Dmb);
  CHECK(lines.size() == 2);  // two rendered lines per document
  for (const auto& f : lines) CHECK(f.size() == 10240);
  CHECK(mc.store.unit(*line, feat::Extractor::Dmb).size() == 10240);
  CHECK(mc.store.unit(*word, feat::Extractor::Dmb).size() == 10240);

  CHECK(error_code([&] { mc.store.unit(*doc, feat::Extractor::Dmb); }) ==
        "bad-argument");
  CHECK(error_code([&] { mc.store.doc_lines(*line, feat::Extractor::Dmb); }) ==
        "bad-argument");
  CHECK(error_code([&] { mc.store.unit(*line, feat::Extractor::Lbp); }) ==
        "bad-argument");

  // the job count never changes cached feature values
  bench::FeatureStore serial(mc.manifest, {feat::Extractor::Dmb}, 1);
  bench::FeatureStore parallel(mc.manifest, {feat::Extractor::Dmb}, 2);
  std::vector<const corpus::ManifestRow*> words;
  for (const corpus::ManifestRow& row : mc.manifest.rows)
    if (row.level == corpus::Level::Word && row.script == 0 &&
        row.modality == corpus::Modality::Handwritten)
      words.push_back(&row);
  REQUIRE(words.size() >= 4);
  serial.warm(words);
  parallel.warm(words);
  for (const corpus::ManifestRow* row : words)
    CHECK(serial.unit(*row, feat::Extractor::Dmb) ==
          parallel.unit(*row, feat::Extractor::Dmb));
}

TEST_CASE("tasks produce 6, 2 and 1 configurations of six cells each") {
  MiniCorpus& mc = mini();

  std::vector<bench::NamedModel> models;
  const auto r3 =
      bench::run_task(mc.manifest, mini_options(3), mc.store, &models);
  REQUIRE(r3.size() == 1);
  CHECK(r3[0].config == "all");
  CHECK(r3[0].cells.size() == 6);
  REQUIRE(models.size() == 1);
  CHECK(models[0].first == "all_dmb");
  CHECK(models[0].second.extractor == feat::Extractor::Dmb);
  for (const bench::CellResult& cell : r3[0].cells) {
    CHECK(cell.samples > 0);
    CHECK(cell.curve[12] == 100.0);
    for (int k = 1; k < 13; ++k) CHECK(cell.curve[k] >= cell.curve[k - 1]);
  }

  const auto r1 = bench::run_task(mc.manifest, mini_options(1), mc.store);
  REQUIRE(r1.size() == 6);  // 36 cells in total
  for (std::size_t c = 0; c < 6; ++c) {
    CHECK(r1[c].config == bench::test_name(bench::kTestTypes[c]));
    CHECK(r1[c].cells.size() == 6);
  }

  const auto r2 = bench::run_task(mc.manifest, mini_options(2), mc.store);
  REQUIRE(r2.size() == 2);  // 12 cells
  CHECK(r2[0].config == "handwritten_all");
  CHECK(r2[1].config == "printed_all");

  // a store without the benchmark extractors is rejected up front
  bench::FeatureStore lbp_only(mc.manifest, {feat::Extractor::Lbp});
  CHECK(error_code([&] {
          bench::run_task(mc.manifest, mini_options(3), lbp_only);
        }) == "bad-argument");
  bench::TaskOptions bad = mini_options(4);
  CHECK(error_code([&] { bench::run_task(mc.manifest, bad, mc.store); }) ==
        "bad-argument");
}

TEST_CASE("written reports are byte-identical across runs") {
  MiniCorpus& mc = mini();
  const bench::TaskOptions opt = mini_options(3);
  const auto first = bench::run_task(mc.manifest, opt, mc.store);
  const auto second = bench::run_task(mc.manifest, opt, mc.store);

  const std::filesystem::path out_a = mc.dir.path / "rep_a";
  const std::filesystem::path out_b = mc.dir.path / "rep_b";
  bench::write_reports(out_a.string(), first, opt);
  bench::write_reports(out_b.string(), second, opt);
  const auto bytes_a = dir_bytes(out_a);
  const auto bytes_b = dir_bytes(out_b);
  CHECK(bytes_a.size() == bytes_b.size());
  CHECK(bytes_a == bytes_b);

  // expected layout: summary tables, per-cell matrices, run snapshot
  CHECK(bytes_a.count("task3_hits.csv") == 1);
  CHECK(bytes_a.count("task3_rank1.csv") == 1);
  CHECK(bytes_a.count("task3_all_handwritten_docs_confusion.csv") == 1);
  CHECK(bytes_a.count("task3_all_printed_words_cmc.csv") == 1);
  CHECK(bytes_a.count("runconfig.txt") == 1);
  CHECK(bytes_a.size() == 2 + 12 + 1);

  const std::string& hits = bytes_a.at("task3_hits.csv");
  CHECK(hits.rfind("config,handwritten_docs,handwritten_lines,"
                   "handwritten_words,printed_docs,printed_lines,"
                   "printed_words\n",
                   0) == 0);
  CHECK(hits.find("\nall,") != std::string::npos);
  const std::string& rc = bytes_a.at("runconfig.txt");
  CHECK(rc.find("task=3") != std::string::npos);
  CHECK(rc.find("benchmark=2") != std::string::npos);
  CHECK(rc.find("budget=100000") != std::string::npos);
  CHECK(rc.find("seed=13") != std::string::npos);

  CHECK(error_code([&] {
          bench::write_reports((mc.dir.path / "rep_c").string(), {}, opt);
        }) == "bad-argument");
}
