#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "scriptid/corpus.hpp"
#include "scriptid/png_io.hpp"
#include "test_util.hpp"

using namespace scriptid;
using testutil::error_code;

namespace {

/// 20x20 page with a 6x6 ink block; binarizes to 36 foreground pixels.
img::RasterImage inked_page() {
  img::RasterImage page(20, 20, 300.0);
  for (int y = 7; y < 13; ++y)
    for (int x = 7; x < 13; ++x) page.at(x, y) = 0;
  return page;
}

}  // namespace

TEST_CASE("the script registry is fixed and ordered") {
  const auto& reg = corpus::script_registry();
  const char* abbrevs[13] = {"Arab", "Ban", "Guj", "Gurm", "Hind", "Jap",
                             "Kan",  "Mal", "Ori", "Rom",  "Tam",  "Tel",
                             "Tha"};
  const char* names[13] = {"Arabic",    "Bangla", "Gujarati", "Gurmukhi",
                           "Hindi",     "Japanese", "Kannada", "Malayalam",
                           "Oriya",     "Roman",  "Tamil",    "Telugu",
                           "Thai"};
  for (int i = 0; i < 13; ++i) {
    CHECK(reg[i].abbrev == abbrevs[i]);
    CHECK(reg[i].full_name == names[i]);
    // only Japanese and Thai segment into pseudo-words
    CHECK(reg[i].pseudo_words == (i == 5 || i == 12));
  }
}

TEST_CASE("script lookup is case-insensitive and prefix-tolerant") {
  CHECK(corpus::script_index("Rom") == 9);
  CHECK(corpus::script_index("roma") == 9);
  CHECK(corpus::script_index("ROMAN") == 9);
  CHECK(corpus::script_index("arab") == 0);
  CHECK(corpus::script_index("Gurm") == 3);
  CHECK(corpus::script_index("guj") == 2);
  CHECK(corpus::script_index("tha") == 12);
  CHECK(error_code([] { corpus::script_index("xyz"); }) == "unknown-script");
  CHECK(error_code([] { corpus::script_index(""); }) == "unknown-script");
}

TEST_CASE("level and modality names round trip") {
  CHECK(corpus::level_name(corpus::Level::Document) == "doc");
  CHECK(corpus::level_name(corpus::Level::Line) == "line");
  CHECK(corpus::level_name(corpus::Level::Word) == "word");
  CHECK(corpus::parse_level("word") == corpus::Level::Word);
  CHECK(error_code([] { corpus::parse_level("paragraph"); }) == "parse-error");
  CHECK(corpus::modality_name(corpus::Modality::Printed) == "printed");
  CHECK(corpus::parse_modality("Handwritten") == corpus::Modality::Handwritten);
  CHECK(error_code([] { corpus::parse_modality("typed"); }) == "parse-error");
}

TEST_CASE("filenames parse into script, level and indices") {
  const corpus::ParsedName word = corpus::parse_name("roma_004_012_004.png");
  CHECK(word.script == 9);
  CHECK(word.level == corpus::Level::Word);
  CHECK(word.doc == 4);
  CHECK(word.line == 12);
  CHECK(word.word == 4);

  const corpus::ParsedName doc = corpus::parse_name("Tha_001.png");
  CHECK(doc.script == 12);
  CHECK(doc.level == corpus::Level::Document);
  CHECK(doc.doc == 1);
  CHECK(doc.line == 0);
  CHECK(doc.word == 0);

  const corpus::ParsedName line = corpus::parse_name("Gurm_002_010.png");
  CHECK(line.level == corpus::Level::Line);
  CHECK(line.line == 10);

  // directories are ignored; only the basename matters
  CHECK(corpus::parse_name("some/dir/Arab_003.png").doc == 3);

  CHECK(error_code([] { corpus::parse_name("xyz_001.png"); }) == "parse-error");
  CHECK(error_code([] { corpus::parse_name("Arab_001_.png"); }) == "parse-error");
  CHECK(error_code([] { corpus::parse_name("Arab_000.png"); }) == "parse-error");
  CHECK(error_code([] { corpus::parse_name("Arab.png"); }) == "parse-error");
  CHECK(error_code([] { corpus::parse_name("Arab_001_002_003_004.png"); }) ==
        "parse-error");
  CHECK(error_code([] { corpus::parse_name("Arab_0x1.png"); }) == "parse-error");
  CHECK(error_code([] { corpus::parse_name("Arab_001.jpg"); }) == "parse-error");

  // the unknown token is named in the message
  try {
    corpus::parse_name("xyz_001.png");
  } catch (const img::PipelineError& e) {
    CHECK(std::string(e.what()).find("xyz") != std::string::npos);
  }
}

TEST_CASE("rendered names are canonical and parse back") {
  corpus::ParsedName n;
  n.script = 9;
  n.level = corpus::Level::Word;
  n.doc = 4;
  n.line = 12;
  n.word = 4;
  CHECK(corpus::render_name(n) == "Rom_004_012_004.png");

  std::mt19937_64 rng(91);
  for (int trial = 0; trial < 50; ++trial) {
    corpus::ParsedName p;
    p.script = static_cast<int>(rng() % 13);
    p.level = static_cast<corpus::Level>(rng() % 3);
    p.doc = 1 + static_cast<int>(rng() % 999);
    if (p.level != corpus::Level::Document)
      p.line = 1 + static_cast<int>(rng() % 999);
    if (p.level == corpus::Level::Word)
      p.word = 1 + static_cast<int>(rng() % 999);
    CHECK(corpus::parse_name(corpus::render_name(p)) == p);
  }
}

TEST_CASE("manifests build from a directory tree, skipping bad files") {
  testutil::TempDir tmp("corpus");
  namespace fs = std::filesystem;
  fs::create_directories(tmp.path / "handwritten");
  fs::create_directories(tmp.path / "printed");
  fs::create_directories(tmp.path / "stray");

  const img::RasterImage page = inked_page();
  img::save_png((tmp.path / "handwritten" / "Arab_001.png").string(), page);
  img::save_png((tmp.path / "handwritten" / "Arab_001_001.png").string(), page);
  img::save_png((tmp.path / "printed" / "Rom_002_001_003.png").string(), page);
  img::save_png((tmp.path / "printed" / "bogus.png").string(), page);
  img::save_png((tmp.path / "stray" / "Tha_001.png").string(), page);
  // blank line image: ingested file but empty after binarization
  img::save_png((tmp.path / "printed" / "Ban_001_002.png").string(),
                img::RasterImage(16, 16, 300.0));
  std::ofstream(tmp.file("notes.txt")) << "ignored outright";

  const corpus::BuildResult result = corpus::build_manifest(tmp.str());
  const corpus::Manifest& m = result.manifest;
  REQUIRE(m.rows.size() == 3);
  CHECK(m.root == tmp.str());

  // sorted by script, then indices
  CHECK(m.rows[0].path == "handwritten/Arab_001.png");
  CHECK(m.rows[0].script == 0);
  CHECK(m.rows[0].level == corpus::Level::Document);
  CHECK(m.rows[0].modality == corpus::Modality::Handwritten);
  CHECK(m.rows[0].fg_pixels == 36);
  CHECK(m.rows[1].path == "handwritten/Arab_001_001.png");
  CHECK(m.rows[1].level == corpus::Level::Line);
  CHECK(m.rows[2].path == "printed/Rom_002_001_003.png");
  CHECK(m.rows[2].modality == corpus::Modality::Printed);
  CHECK(m.rows[2].word == 3);

  REQUIRE(result.skipped.size() == 3);  // bogus, stray, blank
  CHECK(result.skipped[0].first == "printed/Ban_001_002.png");
  CHECK(result.skipped[0].second == "blank image");
  CHECK(result.skipped[1].first == "printed/bogus.png");
  CHECK(result.skipped[2].first == "stray/Tha_001.png");

  // an override adopts files outside the two modality directories
  corpus::BuildOptions opts;
  opts.modality_override = corpus::Modality::Printed;
  const corpus::BuildResult forced = corpus::build_manifest(tmp.str(), opts);
  CHECK(forced.manifest.rows.size() == 4);  // stray/Tha_001.png joins
  for (const corpus::ManifestRow& row : forced.manifest.rows)
    CHECK(row.modality == corpus::Modality::Printed);

  CHECK(error_code([&] {
          corpus::build_manifest(tmp.file("missing_dir"));
        }) == "io-error");
}

TEST_CASE("manifest files round trip") {
  testutil::TempDir tmp("manifest");
  corpus::Manifest m;
  m.root = tmp.str();
  corpus::ManifestRow a;
  a.path = "handwritten/Arab_001.png";
  a.script = 0;
  a.level = corpus::Level::Document;
  a.modality = corpus::Modality::Handwritten;
  a.doc = 1;
  a.fg_pixels = 1234567;
  corpus::ManifestRow b;
  b.path = "printed/Tha_002_003_004.png";
  b.script = 12;
  b.level = corpus::Level::Word;
  b.modality = corpus::Modality::Printed;
  b.doc = 2;
  b.line = 3;
  b.word = 4;
  b.fg_pixels = 99;
  m.rows = {b, a};
  corpus::sort_manifest(m);
  CHECK(m.rows[0] == a);  // Arab before Tha

  const std::string path = tmp.file("manifest.csv");
  corpus::save_manifest(path, m);
  const corpus::Manifest back = corpus::load_manifest(path);
  REQUIRE(back.rows.size() == 2);
  CHECK(back.rows[0] == a);
  CHECK(back.rows[1] == b);
  CHECK(back.root == tmp.str());
  CHECK(corpus::row_path(back, back.rows[0]) ==
        (tmp.path / "handwritten/Arab_001.png").string());

  // header is validated
  std::ofstream(tmp.file("broken.csv")) << "not,the,right,header\n";
  CHECK(error_code([&] { corpus::load_manifest(tmp.file("broken.csv")); }) ==
        "format-error");
  CHECK(error_code([&] { corpus::load_manifest(tmp.file("void.csv")); }) ==
        "io-error");
}

TEST_CASE("summaries count cells by script, level and modality") {
  corpus::Manifest m;
  const auto add = [&](int script, corpus::Level level, corpus::Modality mod) {
    corpus::ManifestRow row;
    row.script = script;
    row.level = level;
    row.modality = mod;
    row.doc = 1;
    m.rows.push_back(row);
  };
  add(0, corpus::Level::Document, corpus::Modality::Handwritten);
  add(0, corpus::Level::Document, corpus::Modality::Handwritten);
  add(0, corpus::Level::Line, corpus::Modality::Printed);
  add(5, corpus::Level::Word, corpus::Modality::Printed);

  const corpus::CellCounts counts = corpus::summarize(m);
  CHECK(counts[0][0][0] == 2);  // Arab handwritten docs
  CHECK(counts[0][1][1] == 1);  // Arab printed lines
  CHECK(counts[5][2][1] == 1);  // Jap printed words
  CHECK(counts[12][0][0] == 0);
}
