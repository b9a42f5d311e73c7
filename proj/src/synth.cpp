#include "scriptid/synth.hpp"

#include <cmath>
#include <filesystem>
#include <random>

#include "scriptid/imageops.hpp"
#include "scriptid/png_io.hpp"
#include "scriptid/raster.hpp"

namespace scriptid::synth {

namespace fs = std::filesystem;
using img::BinaryImage;
using img::PipelineError;
using img::RasterImage;

namespace {

constexpr int kWordW = 380;
constexpr int kWordH = 260;
constexpr int kFrame = 2;          ///< border keeps word hulls exact boxes
constexpr double kDensity = 0.45;  ///< target ink fraction per word
constexpr int kLineMargin = 20;
constexpr int kLineGap = 100;  ///< wide word gaps in standalone line images
constexpr int kDocMargin = 40;
constexpr int kDocWordGap = 4;  ///< narrow gaps merge into one line object
constexpr int kDocLineGap = 120;

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  a ^= b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2);
  return a;
}

/// Distribution helpers pinned to raw engine output so rendered pixels
/// do not depend on library-specific distribution internals.
int rand_int(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

double rand_real(std::mt19937_64& rng, double lo, double hi) {
  const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + unit * (hi - lo);
}

struct WordArt {
  RasterImage gray;
  BinaryImage mask;
};

void stamp(WordArt& art, int cx, int cy, int width, std::uint8_t value) {
  const int x0 = std::max(0, cx - width / 2);
  const int y0 = std::max(0, cy - width / 2);
  const int x1 = std::min(art.mask.width(), x0 + width);
  const int y1 = std::min(art.mask.height(), y0 + width);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) {
      art.gray.at(x, y) = value;
      art.mask.set(x, y, true);
    }
}

/// One word: a black border plus wavy strokes of speckled ink drawn
/// until the target ink density is reached. Class cues: stroke
/// orientation, stroke width and wiggle amplitude. The speckle makes
/// ink values equal across a stroke but varying along it, so local
/// texture carries the orientation.
WordArt render_word(int cls, int k, std::mt19937_64& rng) {
  WordArt art{RasterImage(kWordW, kWordH, 300.0),
              BinaryImage(kWordW, kWordH, 300.0)};
  for (int x = 0; x < kWordW; ++x)
    for (int f = 0; f < kFrame; ++f) {
      art.gray.at(x, f) = 0;
      art.gray.at(x, kWordH - 1 - f) = 0;
      art.mask.set(x, f, true);
      art.mask.set(x, kWordH - 1 - f, true);
    }
  for (int y = 0; y < kWordH; ++y)
    for (int f = 0; f < kFrame; ++f) {
      art.gray.at(f, y) = 0;
      art.gray.at(kWordW - 1 - f, y) = 0;
      art.mask.set(f, y, true);
      art.mask.set(kWordW - 1 - f, y, true);
    }

  constexpr double kPi = 3.14159265358979323846;
  const double base = double(cls) * kPi / double(k);
  const int stroke = 2 + cls % 3;
  const double wiggle = 0.075 + 0.05 * double((cls + 1) % 3);
  const auto target =
      static_cast<std::size_t>(kDensity * double(kWordW) * double(kWordH));
  while (art.mask.foreground_count() < target) {
    double x = rand_real(rng, 0.0, double(kWordW));
    double y = rand_real(rng, 0.0, double(kWordH));
    const double heading = base + rand_real(rng, -0.1, 0.1);
    const double freq = rand_real(rng, 0.05, 0.15);
    const double phase = rand_real(rng, 0.0, 2.0 * kPi);
    const int length = rand_int(rng, 40, 120);
    for (int step = 0; step < length; ++step) {
      const auto value = static_cast<std::uint8_t>(rand_int(rng, 0, 120));
      stamp(art, static_cast<int>(std::lround(x)),
            static_cast<int>(std::lround(y)), stroke, value);
      const double theta = heading + wiggle * std::sin(phase + step * freq);
      x += std::cos(theta);
      y += std::sin(theta);
    }
  }
  return art;
}

void paste(RasterImage& canvas, const WordArt& word, int ox, int oy) {
  for (int y = 0; y < word.mask.height(); ++y)
    for (int x = 0; x < word.mask.width(); ++x)
      if (word.mask.at(x, y)) canvas.at(ox + x, oy + y) = word.gray.at(x, y);
}

RasterImage white_canvas(int w, int h) { return RasterImage(w, h, 300.0); }

/// Manifest counts use the default binarizer on the stored pixels, so a
/// later rescan of the tree reproduces the shipped manifest exactly.
std::uint64_t stored_fg(const RasterImage& image) {
  return img::binarize(image).foreground_count();
}

}  // namespace

corpus::Manifest generate(const std::string& root, const SynthOptions& opt) {
  if (opt.classes < 1 || opt.classes > corpus::kScriptCount)
    throw PipelineError("bad-argument", "classes must be in 1..13");
  if (opt.docs_per_class < 1 || opt.lines_per_doc < 1 || opt.words_per_line < 1)
    throw PipelineError("bad-argument", "all corpus counts must be >= 1");

  const int line_w = 2 * kLineMargin + opt.words_per_line * kWordW +
                     (opt.words_per_line - 1) * kLineGap;
  const int line_h = 2 * kLineMargin + kWordH;
  const int doc_w = 2 * kDocMargin + opt.words_per_line * kWordW +
                    (opt.words_per_line - 1) * kDocWordGap;
  const int doc_h = 2 * kDocMargin + opt.lines_per_doc * kWordH +
                    (opt.lines_per_doc - 1) * kDocLineGap;

  corpus::Manifest manifest;
  manifest.root = root;
  const auto add_row = [&](const std::string& rel, int script,
                           corpus::Level level, corpus::Modality modality,
                           int doc, int line, int word, std::uint64_t fg) {
    corpus::ManifestRow row;
    row.path = rel;
    row.script = script;
    row.level = level;
    row.modality = modality;
    row.doc = doc;
    row.line = line;
    row.word = word;
    row.fg_pixels = fg;
    manifest.rows.push_back(std::move(row));
  };

  for (int cls = 0; cls < opt.classes; ++cls) {
    const std::string abbrev(
        corpus::script_registry()[static_cast<std::size_t>(cls)].abbrev);
    for (int doc = 1; doc <= opt.docs_per_class; ++doc) {
      const corpus::Modality modality = doc % 2 == 1
                                            ? corpus::Modality::Handwritten
                                            : corpus::Modality::Printed;
      const std::string rel_dir =
          std::string(corpus::modality_name(modality)) + "/" + abbrev;
      const fs::path dir = fs::path(root) / rel_dir;
      std::error_code ec;
      fs::create_directories(dir, ec);
      if (ec)
        throw PipelineError("io-error", "cannot create " + dir.string());

      RasterImage doc_img = white_canvas(doc_w, doc_h);
      for (int line = 1; line <= opt.lines_per_doc; ++line) {
        RasterImage line_img = white_canvas(line_w, line_h);
        const int doc_y = kDocMargin + (line - 1) * (kWordH + kDocLineGap);
        for (int word = 1; word <= opt.words_per_line; ++word) {
          std::uint64_t h = mix(opt.seed, 0x53594e5448ULL);
          h = mix(h, static_cast<std::uint64_t>(cls));
          h = mix(h, static_cast<std::uint64_t>(doc));
          h = mix(h, static_cast<std::uint64_t>(line));
          h = mix(h, static_cast<std::uint64_t>(word));
          std::mt19937_64 rng(h);
          const WordArt art = render_word(cls, opt.classes, rng);

          corpus::ParsedName name;
          name.script = cls;
          name.doc = doc;
          name.line = line;
          name.word = word;
          name.level = corpus::Level::Word;
          const std::string word_rel = rel_dir + "/" + corpus::render_name(name);
          img::save_png((fs::path(root) / word_rel).string(), art.gray);
          add_row(word_rel, cls, corpus::Level::Word, modality, doc, line,
                  word, stored_fg(art.gray));

          paste(line_img, art,
                kLineMargin + (word - 1) * (kWordW + kLineGap), kLineMargin);
          paste(doc_img, art,
                kDocMargin + (word - 1) * (kWordW + kDocWordGap), doc_y);
        }
        corpus::ParsedName name;
        name.script = cls;
        name.doc = doc;
        name.line = line;
        name.level = corpus::Level::Line;
        const std::string line_rel = rel_dir + "/" + corpus::render_name(name);
        img::save_png((fs::path(root) / line_rel).string(), line_img);
        add_row(line_rel, cls, corpus::Level::Line, modality, doc, line, 0,
                stored_fg(line_img));
      }
      corpus::ParsedName name;
      name.script = cls;
      name.doc = doc;
      name.level = corpus::Level::Document;
      const std::string doc_rel = rel_dir + "/" + corpus::render_name(name);
      img::save_png((fs::path(root) / doc_rel).string(), doc_img);
      add_row(doc_rel, cls, corpus::Level::Document, modality, doc, 0, 0,
              stored_fg(doc_img));
    }
  }
  corpus::sort_manifest(manifest);
  corpus::save_manifest((fs::path(root) / "manifest.csv").string(), manifest);
  return manifest;
}

}  // namespace scriptid::synth
