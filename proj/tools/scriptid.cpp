#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "scriptid/bench.hpp"
#include "scriptid/corpus.hpp"
#include "scriptid/feature_io.hpp"
#include "scriptid/imageops.hpp"
#include "scriptid/model_io.hpp"
#include "scriptid/png_io.hpp"
#include "scriptid/segmentation.hpp"
#include "scriptid/synth.hpp"

namespace fs = std::filesystem;
using namespace scriptid;

namespace {

std::vector<fs::path> list_pngs(const fs::path& root) {
  std::vector<fs::path> files;
  for (fs::recursive_directory_iterator it(root), end; it != end; ++it) {
    if (!it->is_regular_file()) continue;
    std::string ext = it->path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") files.push_back(it->path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

corpus::Manifest open_manifest(const std::string& corpus_arg) {
  fs::path path(corpus_arg);
  if (fs::is_directory(path)) path /= "manifest.csv";
  return corpus::load_manifest(path.string());
}

void ok(std::size_t cells) {
  std::cout << "STATUS=ok cells=" << cells << std::endl;
}

struct BenchArgs {
  std::string corpus;
  std::string out = "reports";
  int task = 3;
  int benchmark = 1;
  std::uint64_t budget = 2'000'000;
  std::string preset;
  std::uint64_t seed = 13;
  int jobs = 1;
};

void add_bench_options(CLI::App* sub, BenchArgs& opt) {
  sub->add_option("--corpus", opt.corpus, "corpus root or manifest.csv path")
      ->required();
  sub->add_option("--out", opt.out, "report directory");
  sub->add_option("--task", opt.task, "evaluation task (1-3)");
  sub->add_option("--benchmark", opt.benchmark,
                  "1 = LBP+HOT fusion, 2 = dense multi-block LBP");
  sub->add_option("--budget", opt.budget, "training pixel budget per script");
  sub->add_option("--preset", opt.preset, "split preset (mdiw13-table4)");
  sub->add_option("--seed", opt.seed, "run seed");
  sub->add_option("--jobs", opt.jobs, "worker threads")
      ->envname("SCRIPTID_JOBS");
}

std::size_t run_bench(const BenchArgs& opt, const char* command,
                      bool save_models) {
  corpus::Manifest manifest = open_manifest(opt.corpus);
  bench::TaskOptions task;
  task.task = opt.task;
  task.benchmark = opt.benchmark;
  task.select.budget = opt.budget;
  task.select.preset = opt.preset;
  task.seed = opt.seed;
  task.jobs = opt.jobs;
  task.command = command;
  task.corpus = opt.corpus;
  bench::FeatureStore store(
      manifest,
      opt.benchmark == 1
          ? std::vector<feat::Extractor>{feat::Extractor::Lbp,
                                         feat::Extractor::Hot}
          : std::vector<feat::Extractor>{feat::Extractor::Dmb},
      opt.jobs);
  std::vector<bench::NamedModel> models;
  const std::vector<bench::EvalReport> reports =
      bench::run_task(manifest, task, store, save_models ? &models : nullptr);
  bench::write_reports(opt.out, reports, task);
  if (save_models)
    for (const bench::NamedModel& nm : models)
      cls::save_model(
          (fs::path(opt.out) / ("task" + std::to_string(opt.task) + "_" +
                                nm.first + ".mdsv"))
              .string(),
          nm.second);
  std::size_t cells = 0;
  for (const bench::EvalReport& report : reports) cells += report.cells.size();
  return cells;
}

std::size_t cmd_synth(const std::string& out, const synth::SynthOptions& opt) {
  return synth::generate(out, opt).rows.size();
}

std::size_t cmd_manifest(const std::string& root, const std::string& out,
                         const std::string& modality) {
  corpus::BuildOptions opts;
  if (!modality.empty())
    opts.modality_override = corpus::parse_modality(modality);
  const corpus::BuildResult result = corpus::build_manifest(root, opts);
  for (const auto& [path, reason] : result.skipped)
    std::cerr << "skipped " << path << ": " << reason << '\n';
  const std::string target =
      out.empty() ? (fs::path(root) / "manifest.csv").string() : out;
  corpus::save_manifest(target, result.manifest);
  return result.manifest.rows.size();
}

std::size_t cmd_preprocess(const std::string& in, const std::string& out,
                           const img::BinarizeOptions& bin) {
  std::size_t cells = 0;
  for (const fs::path& file : list_pngs(in)) {
    const fs::path rel = fs::relative(file, in);
    const fs::path dir = fs::path(out) / rel.parent_path();
    fs::create_directories(dir);
    const std::string stem = rel.stem().string();
    const img::RasterImage page = img::load_png(file.string());
    const img::BinaryImage mask = img::binarize(page, bin);
    img::save_png((dir / (stem + "_bin.png")).string(), mask);
    img::save_png((dir / (stem + "_eq.png")).string(), img::equalize_ink(mask));
    ++cells;
  }
  return cells;
}

std::size_t cmd_segment(const std::string& in, const std::string& out,
                        const img::BinarizeOptions& bin) {
  std::size_t cells = 0;
  for (const fs::path& file : list_pngs(in)) {
    const fs::path rel = fs::relative(file, in);
    corpus::ParsedName name;
    try {
      name = corpus::parse_name(file.filename().string());
    } catch (const img::PipelineError& err) {
      std::cerr << "skipped " << rel.string() << ": " << err.what() << '\n';
      continue;
    }
    if (name.level == corpus::Level::Word) {
      std::cerr << "skipped " << rel.string() << ": already a word\n";
      continue;
    }
    const fs::path dir = fs::path(out) / rel.parent_path();
    fs::create_directories(dir);
    const img::RasterImage page = img::load_png(file.string());
    const img::BinaryImage mask = img::binarize(page, bin);
    const bool pseudo =
        corpus::script_registry()[static_cast<std::size_t>(name.script)]
            .pseudo_words;

    // Document inputs are cut into lines first; then every line (cut
    // here or given directly) is cut into words or pseudo-words.
    struct LineJob {
      corpus::ParsedName name;
      img::BinaryImage mask;
    };
    std::vector<LineJob> lines;
    if (name.level == corpus::Level::Document) {
      for (const seg::Region& region : seg::segment_lines(mask)) {
        corpus::ParsedName line_name = name;
        line_name.level = corpus::Level::Line;
        line_name.line = region.index;
        img::RasterImage crop = img::crop(page, region.box);
        for (int y = 0; y < crop.height; ++y)
          for (int x = 0; x < crop.width; ++x)
            if (!region.mask.at(x, y)) crop.at(x, y) = 255;
        img::save_png((dir / corpus::render_name(line_name)).string(), crop);
        ++cells;
        lines.push_back({line_name, region.mask});
      }
    } else {
      lines.push_back({name, mask});
    }
    for (const LineJob& line : lines) {
      const std::vector<seg::Region> words =
          pseudo ? seg::pseudo_segment(line.mask)
                 : seg::segment_words(line.mask);
      for (const seg::Region& region : words) {
        corpus::ParsedName word_name = line.name;
        word_name.level = corpus::Level::Word;
        word_name.word = region.index;
        img::save_png((dir / corpus::render_name(word_name)).string(),
                      region.mask);
        ++cells;
      }
    }
  }
  return cells;
}

std::size_t cmd_extract(const std::string& manifest_arg,
                        const std::string& extractor_name,
                        const std::string& out, int jobs) {
  feat::Extractor extractor;
  if (extractor_name == "lbp") extractor = feat::Extractor::Lbp;
  else if (extractor_name == "hot") extractor = feat::Extractor::Hot;
  else if (extractor_name == "dmb") extractor = feat::Extractor::Dmb;
  else
    throw img::PipelineError("bad-argument",
                             "extractor must be lbp, hot or dmb");
  const corpus::Manifest manifest = open_manifest(manifest_arg);
  bench::FeatureStore store(manifest, {extractor}, jobs);
  std::vector<const corpus::ManifestRow*> rows;
  for (const corpus::ManifestRow& row : manifest.rows) rows.push_back(&row);
  store.warm(rows);
  feat::FeatureSet set;
  set.extractor = extractor;
  set.dim = static_cast<std::uint32_t>(feat::extractor_dim(extractor));
  for (const corpus::ManifestRow& row : manifest.rows) {
    const std::string script(
        corpus::script_registry()[static_cast<std::size_t>(row.script)]
            .abbrev);
    const std::string level(corpus::level_name(row.level));
    const std::string modality(corpus::modality_name(row.modality));
    if (row.level == corpus::Level::Document) {
      const auto& lines = store.doc_lines(row, extractor);
      for (std::size_t i = 0; i < lines.size(); ++i) {
        char id[16];
        std::snprintf(id, sizeof id, "#L%03zu", i + 1);
        set.append(lines[i], row.path + id, script, level, modality);
      }
    } else {
      set.append(store.unit(row, extractor), row.path, script, level,
                 modality);
    }
  }
  feat::save_features(out, set);
  return set.count();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MDIW-13 script identification toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value config file");

  synth::SynthOptions synth_opt;
  std::string synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic corpus");
  synth_cmd->add_option("--out", synth_out, "corpus root")->required();
  synth_cmd->add_option("--classes", synth_opt.classes, "script count (1-13)");
  synth_cmd->add_option("--docs", synth_opt.docs_per_class,
                        "documents per class");
  synth_cmd->add_option("--lines", synth_opt.lines_per_doc,
                        "lines per document");
  synth_cmd->add_option("--words", synth_opt.words_per_line, "words per line");
  synth_cmd->add_option("--seed", synth_opt.seed, "generation seed");

  std::string manifest_root, manifest_out, manifest_modality;
  auto* manifest_cmd =
      app.add_subcommand("manifest", "scan a corpus tree into manifest.csv");
  manifest_cmd->add_option("--root", manifest_root, "corpus root")->required();
  manifest_cmd->add_option("--out", manifest_out,
                           "output path (default <root>/manifest.csv)");
  manifest_cmd->add_option("--modality", manifest_modality,
                           "force handwritten or printed");

  std::string pre_in, pre_out;
  img::BinarizeOptions pre_bin;
  bool pre_no_refine = false;
  auto* pre_cmd = app.add_subcommand("preprocess", "binarize and equalize ink");
  pre_cmd->add_option("--in", pre_in, "input directory")->required();
  pre_cmd->add_option("--out", pre_out, "output directory")->required();
  pre_cmd->add_option("--window", pre_bin.window, "binarization window");
  pre_cmd->add_option("--sensitivity", pre_bin.sensitivity,
                      "binarization sensitivity");
  pre_cmd->add_flag("--no-refine", pre_no_refine, "keep speckles");

  std::string seg_in, seg_out;
  img::BinarizeOptions seg_bin;
  auto* seg_cmd =
      app.add_subcommand("segment", "cut pages into lines and words");
  seg_cmd->add_option("--in", seg_in, "input directory")->required();
  seg_cmd->add_option("--out", seg_out, "output directory")->required();
  seg_cmd->add_option("--window", seg_bin.window, "binarization window");
  seg_cmd->add_option("--sensitivity", seg_bin.sensitivity,
                      "binarization sensitivity");

  std::string ext_manifest, ext_name, ext_out;
  int ext_jobs = 1;
  auto* ext_cmd =
      app.add_subcommand("extract", "batch feature extraction to MDFV");
  ext_cmd->add_option("--manifest", ext_manifest,
                      "corpus root or manifest.csv path")
      ->required();
  ext_cmd->add_option("--extractor", ext_name, "lbp, hot or dmb")->required();
  ext_cmd->add_option("--out", ext_out, "output feature file")->required();
  ext_cmd->add_option("--jobs", ext_jobs, "worker threads")
      ->envname("SCRIPTID_JOBS");

  BenchArgs train_opt;
  auto* train_cmd = app.add_subcommand(
      "train", "train task models, save them and write reports");
  add_bench_options(train_cmd, train_opt);

  BenchArgs eval_opt;
  auto* eval_cmd =
      app.add_subcommand("evaluate", "run a task and write reports");
  add_bench_options(eval_cmd, eval_opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth_cmd->parsed()) {
      ok(cmd_synth(synth_out, synth_opt));
    } else if (manifest_cmd->parsed()) {
      ok(cmd_manifest(manifest_root, manifest_out, manifest_modality));
    } else if (pre_cmd->parsed()) {
      pre_bin.refine = !pre_no_refine;
      ok(cmd_preprocess(pre_in, pre_out, pre_bin));
    } else if (seg_cmd->parsed()) {
      ok(cmd_segment(seg_in, seg_out, seg_bin));
    } else if (ext_cmd->parsed()) {
      ok(cmd_extract(ext_manifest, ext_name, ext_out, ext_jobs));
    } else if (train_cmd->parsed()) {
      ok(run_bench(train_opt, "train", true));
    } else if (eval_cmd->parsed()) {
      ok(run_bench(eval_opt, "evaluate", false));
    }
    return 0;
  } catch (const img::PipelineError& e) {
    std::cerr << "error (" << e.code() << "): " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
