#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "scriptid/bench.hpp"

namespace scriptid::bench {

namespace fs = std::filesystem;
using img::PipelineError;

namespace {

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw PipelineError("io-error", "cannot write " + path.string());
  return out;
}

void write_table(const fs::path& path, const std::vector<EvalReport>& reports,
                 bool rank1) {
  std::ofstream out = open_out(path);
  out << "config";
  for (TestType t : kTestTypes) out << ',' << test_name(t);
  out << '\n';
  for (const EvalReport& report : reports) {
    out << report.config;
    for (const CellResult& cell : report.cells)
      out << ',' << fmt2(rank1 ? cell.curve[0] : cell.hit);
    out << '\n';
  }
}

void write_confusion(const fs::path& path, const ConfusionMatrix& cm) {
  std::ofstream out = open_out(path);
  out << "script";
  for (const corpus::ScriptInfo& info : corpus::script_registry())
    out << ',' << info.abbrev;
  out << ",samples\n";
  for (std::size_t t = 0; t < kScriptCount; ++t) {
    out << corpus::script_registry()[t].abbrev;
    for (std::size_t p = 0; p < kScriptCount; ++p)
      out << ',' << fmt2(cm.percent[t][p]);
    out << ',' << cm.row_samples[t] << '\n';
  }
}

void write_cmc(const fs::path& path,
               const std::array<double, kScriptCount>& curve) {
  std::ofstream out = open_out(path);
  out << "rank,percent\n";
  for (std::size_t k = 0; k < curve.size(); ++k)
    out << (k + 1) << ',' << fmt2(curve[k]) << '\n';
}

}  // namespace

void write_reports(const std::string& dir,
                   const std::vector<EvalReport>& reports,
                   const TaskOptions& opt) {
  if (reports.empty())
    throw PipelineError("bad-argument", "nothing to report");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw PipelineError("io-error", "cannot create " + dir);
  const fs::path base(dir);
  const std::string prefix = "task" + std::to_string(opt.task) + "_";

  write_table(base / (prefix + "hits.csv"), reports, false);
  write_table(base / (prefix + "rank1.csv"), reports, true);
  for (const EvalReport& report : reports)
    for (const CellResult& cell : report.cells) {
      const std::string stem =
          prefix + report.config + "_" + std::string(test_name(cell.type));
      write_confusion(base / (stem + "_confusion.csv"), cell.cm);
      write_cmc(base / (stem + "_cmc.csv"), cell.curve);
    }

  std::ofstream out = open_out(base / "runconfig.txt");
  out << "command=" << opt.command << '\n'
      << "corpus=" << opt.corpus << '\n'
      << "task=" << opt.task << '\n'
      << "benchmark=" << opt.benchmark << '\n'
      << "grid=default\n"
      << "budget=" << opt.select.budget << '\n'
      << "preset=" << opt.select.preset << '\n'
      << "seed=" << opt.seed << '\n';
}

}  // namespace scriptid::bench
