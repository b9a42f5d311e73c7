#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <vector>

#include "doctest.h"
#include "scriptid/classify.hpp"
#include "scriptid/model_io.hpp"
#include "test_util.hpp"

using namespace scriptid;
using testutil::error_code;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

cls::DataMatrix matrix(const std::vector<std::vector<double>>& rows) {
  cls::DataMatrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy(rows[i].begin(), rows[i].end(), m.row(i));
  return m;
}

/// Relative residual of the saddle-point system the trainer solves.
double kkt_residual(const cls::DataMatrix& x, const std::vector<double>& y,
                    const cls::BinaryModel& m) {
  const std::size_t n = x.rows;
  double rhs = 0.0;
  for (const double v : y) rhs += v * v;
  rhs = std::max(1.0, std::sqrt(rhs));
  double sq = 0.0;
  double asum = 0.0;
  for (std::size_t i = 0; i < n; ++i) asum += m.alphas[i];
  sq += asum * asum;
  for (std::size_t i = 0; i < n; ++i) {
    double f = m.bias + m.alphas[i] / m.kernel.reg;
    for (std::size_t j = 0; j < n; ++j)
      f += m.alphas[j] * cls::kernel(m.kernel, x.row(i), x.row(j), x.cols);
    const double r = f - y[i];
    sq += r * r;
  }
  return std::sqrt(sq) / rhs;
}

}  // namespace

TEST_CASE("kernel values match their closed forms") {
  const double a[3] = {1.0, -2.0, 0.5};
  const double b[3] = {0.0, 1.0, 2.0};
  cls::KernelConfig lin{cls::KernelConfig::Kind::Linear, 1.0, 1.0};
  CHECK(cls::kernel(lin, a, b, 3) == doctest::Approx(-1.0));  // dot product
  cls::KernelConfig rbf{cls::KernelConfig::Kind::Rbf, 0.25, 1.0};
  const double d2 = 1.0 + 9.0 + 2.25;
  CHECK(cls::kernel(rbf, a, b, 3) == doctest::Approx(std::exp(-0.25 * d2)));
  CHECK(cls::kernel(rbf, a, a, 3) == doctest::Approx(1.0));
}

TEST_CASE("two-sample system solves to the hand-derived solution") {
  const cls::DataMatrix x = matrix({{0.0}, {1.0}});
  const std::vector<double> y = {-1.0, 1.0};
  const cls::KernelConfig cfg{cls::KernelConfig::Kind::Linear, 1.0, 1.0};
  const cls::BinaryModel m = cls::train_lssvm(x, y, cfg);
  // [[0,1,1],[1,1,0],[1,0,2]] [b,a1,a2] = [0,-1,1]
  CHECK(m.alphas[0] == doctest::Approx(-2.0 / 3.0).epsilon(1e-12));
  CHECK(m.alphas[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(m.bias == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
  CHECK(cls::decide(m, x.row(0), 1) < 0.0);
  CHECK(cls::decide(m, x.row(1), 1) > 0.0);
}

TEST_CASE("random systems solve to tight residuals and negate exactly") {
  std::mt19937_64 rng(401);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 4 + rng() % 37;
    const std::size_t dim = 1 + rng() % 8;
    cls::DataMatrix x(n, dim);
    for (double& v : x.values) v = d(rng);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = i % 2 ? 1.0 : -1.0;
    const cls::KernelConfig cfg{
        trial % 2 ? cls::KernelConfig::Kind::Rbf : cls::KernelConfig::Kind::Linear,
        std::ldexp(1.0, -static_cast<int>(rng() % 8)),
        std::ldexp(1.0, static_cast<int>(rng() % 8) - 2)};
    const cls::BinaryModel m = cls::train_lssvm(x, y, cfg);
    CHECK(kkt_residual(x, y, m) <= 1e-8);

    std::vector<double> neg(y);
    for (double& v : neg) v = -v;
    const cls::BinaryModel mn = cls::train_lssvm(x, neg, cfg);
    for (std::size_t i = 0; i < n; ++i)
      CHECK(mn.alphas[i] == -m.alphas[i]);  // exact sign flip
    CHECK(mn.bias == -m.bias);
  }
}

TEST_CASE("training validates labels") {
  const cls::DataMatrix x = matrix({{0.0}, {1.0}, {2.0}});
  const cls::KernelConfig cfg{cls::KernelConfig::Kind::Linear, 1.0, 1.0};
  CHECK(error_code([&] {
          cls::train_lssvm(x, {1.0, 1.0, 1.0}, cfg);
        }) == "bad-argument");
  CHECK(error_code([&] { cls::train_lssvm(x, {1.0, -1.0}, cfg); }) ==
        "bad-argument");
  CHECK(error_code([&] {
          cls::train_lssvm(x, {1.0, -1.0, 1.0},
                           {cls::KernelConfig::Kind::Linear, 1.0, 0.0});
        }) == "bad-argument");
}

TEST_CASE("grid search prefers small regularization on ties") {
  // linearly separable: every candidate scores 100%, so the tie-break
  // must pick the smallest regularization (and the single linear gamma)
  const cls::DataMatrix x = matrix({{-2.0}, {-1.0}, {1.0}, {2.0}});
  const std::vector<double> y = {-1.0, -1.0, 1.0, 1.0};
  const cls::KernelConfig cfg =
      cls::grid_search(x, y, cls::default_grid(cls::KernelConfig::Kind::Linear));
  CHECK(cfg.kind == cls::KernelConfig::Kind::Linear);
  CHECK(cfg.gamma == 1.0);
  CHECK(cfg.reg == std::ldexp(1.0, -3));

  CHECK(error_code([&] {
          cls::grid_search(matrix({{0.0}, {1.0}}), {-1.0, 1.0},
                           cls::default_grid(cls::KernelConfig::Kind::Linear));
        }) == "degenerate-folds");
  // even fold {0,2} sees only positives
  CHECK(error_code([&] {
          cls::grid_search(x, {1.0, -1.0, 1.0, -1.0},
                           cls::default_grid(cls::KernelConfig::Kind::Linear));
        }) == "degenerate-folds");
}

TEST_CASE("default grids span the documented exponent ranges") {
  const cls::GridOptions rbf = cls::default_grid(cls::KernelConfig::Kind::Rbf);
  REQUIRE(rbf.gammas.size() == 7);
  CHECK(rbf.gammas.front() == std::ldexp(1.0, -15));
  CHECK(rbf.gammas.back() == std::ldexp(1.0, 3));
  REQUIRE(rbf.regs.size() == 6);
  CHECK(rbf.regs.front() == std::ldexp(1.0, -3));
  CHECK(rbf.regs.back() == std::ldexp(1.0, 12));
}

TEST_CASE("one-vs-all training standardizes and fills null heads") {
  std::mt19937_64 rng(79);
  std::normal_distribution<double> noise(0.0, 0.1);
  cls::DataMatrix x(12, 3);
  std::vector<int> scripts;
  for (int i = 0; i < 12; ++i) {
    const int cl = i % 3;  // interleaved so both folds see every class
    x.row(i)[0] = cl == 0 ? 3.0 : (cl == 1 ? -3.0 : 0.0);
    x.row(i)[1] = cl == 2 ? 3.0 : -1.0;
    x.row(i)[2] = 7.5;  // constant column: dropped by the standardizer
    x.row(i)[0] += noise(rng);
    x.row(i)[1] += noise(rng);
    scripts.push_back(cl);
  }
  const cls::KernelConfig cfg{cls::KernelConfig::Kind::Rbf, 0.5, 16.0};
  const cls::MultiModel m = cls::train_ova(x, scripts, cfg, feat::Extractor::Lbp);
  CHECK(m.dim == 3);
  CHECK(m.scale[2] == 0.0);
  // population statistics
  double mean0 = 0.0;
  for (int i = 0; i < 12; ++i) mean0 += x.row(i)[0];
  mean0 /= 12.0;
  CHECK(m.mean[0] == doctest::Approx(mean0).epsilon(1e-12));
  double var0 = 0.0;
  for (int i = 0; i < 12; ++i)
    var0 += (x.row(i)[0] - mean0) * (x.row(i)[0] - mean0);
  CHECK(m.scale[0] == doctest::Approx(1.0 / std::sqrt(var0 / 12.0)));

  for (int s = 0; s < cls::kScriptCount; ++s)
    CHECK(m.heads[s].live == (s < 3));

  // every training sample classifies correctly; absent scripts score -inf
  for (int i = 0; i < 12; ++i) {
    std::vector<double> sample(x.row(i), x.row(i) + 3);
    const cls::ScoreVector scores = cls::predict(m, sample);
    CHECK(cls::argmax_score(scores) == scripts[i]);
    for (int s = 3; s < cls::kScriptCount; ++s) CHECK(scores[s] == -kInf);
  }

  // decision values match the explicit support-vector sum
  std::vector<double> sample(x.row(5), x.row(5) + 3);
  const cls::ScoreVector scores = cls::predict(m, sample);
  std::vector<double> z(3);
  for (int j = 0; j < 3; ++j) z[j] = (sample[j] - m.mean[j]) * m.scale[j];
  for (int s = 0; s < 3; ++s) {
    double f = m.heads[s].bias;
    for (std::size_t i = 0; i < m.support.rows; ++i)
      f += m.heads[s].alphas[i] *
           cls::kernel(m.kernel, z.data(), m.support.row(i), 3);
    CHECK(scores[s] == doctest::Approx(f).epsilon(1e-12));
  }

  CHECK(error_code([&] {
          cls::train_ova(x, std::vector<int>(12, 0), cfg, feat::Extractor::Lbp);
        }) == "bad-argument");
  CHECK(error_code([&] {
          std::vector<int> bad = scripts;
          bad[0] = 13;
          cls::train_ova(x, bad, cfg, feat::Extractor::Lbp);
        }) == "bad-argument");
}

TEST_CASE("multiclass grid search recovers separable blobs") {
  std::mt19937_64 rng(171);
  std::normal_distribution<double> noise(0.0, 0.2);
  cls::DataMatrix x(24, 2);
  std::vector<int> scripts;
  for (int i = 0; i < 24; ++i) {
    const int cl = i % 3;
    x.row(i)[0] = 4.0 * cl + noise(rng);
    x.row(i)[1] = (cl == 1 ? -4.0 : 4.0) + noise(rng);
    scripts.push_back(cl);
  }
  const cls::KernelConfig cfg = cls::grid_search_multiclass(
      x, scripts, cls::default_grid(cls::KernelConfig::Kind::Rbf));
  const cls::MultiModel m = cls::train_ova(x, scripts, cfg, feat::Extractor::Hot);
  for (int i = 0; i < 24; ++i) {
    std::vector<double> sample(x.row(i), x.row(i) + 2);
    CHECK(cls::argmax_score(cls::predict(m, sample)) == scripts[i]);
  }

  CHECK(error_code([&] {
          cls::grid_search_multiclass(
              matrix({{0.0}, {1.0}, {2.0}}), {0, 1, 2},
              cls::default_grid(cls::KernelConfig::Kind::Rbf));
        }) == "degenerate-folds");
  // even fold {0,2} sees one script only
  CHECK(error_code([&] {
          cls::grid_search_multiclass(
              matrix({{0.0}, {1.0}, {2.0}, {3.0}}), {0, 1, 0, 1},
              cls::default_grid(cls::KernelConfig::Kind::Rbf));
        }) == "degenerate-folds");
}

TEST_CASE("score fusion z-normalizes finite entries and averages") {
  cls::ScoreVector a{};
  cls::ScoreVector b{};
  for (int i = 0; i < 13; ++i) {
    a[i] = i;          // mean 6, population sd sqrt(14)
    b[i] = 2.0 * i;
  }
  const cls::ScoreVector fused = cls::fuse_scores(a, b);
  const double sd = std::sqrt(14.0);
  for (int i = 0; i < 13; ++i) {
    const double z = (i - 6.0) / sd;  // both inputs share the same z-score
    CHECK(fused[i] == doctest::Approx(z).epsilon(1e-12));
  }

  SUBCASE("minus infinity passes through untouched") {
    a[4] = -kInf;
    const cls::ScoreVector f = cls::fuse_scores(a, b);
    CHECK(f[4] == -kInf);
    CHECK(std::isfinite(f[3]));
  }
  SUBCASE("zero spread maps to zero") {
    cls::ScoreVector flat{};
    flat.fill(3.5);
    const cls::ScoreVector f = cls::fuse_scores(flat, b);
    for (int i = 0; i < 13; ++i) {
      const double zb = (2.0 * i - 12.0) / (2.0 * sd);
      CHECK(f[i] == doctest::Approx(0.5 * zb).epsilon(1e-12));
    }
  }
  SUBCASE("all minus infinity copies straight through") {
    cls::ScoreVector dead{};
    dead.fill(-kInf);
    const cls::ScoreVector f = cls::fuse_scores(dead, dead);
    for (int i = 0; i < 13; ++i) CHECK(f[i] == -kInf);
  }
}

TEST_CASE("argmax breaks ties toward the lowest index") {
  cls::ScoreVector s{};
  s.fill(1.0);
  CHECK(cls::argmax_score(s) == 0);
  s[7] = 2.0;
  s[9] = 2.0;
  CHECK(cls::argmax_score(s) == 7);
}

TEST_CASE("model files round trip bit for bit") {
  testutil::TempDir tmp("mdsv");
  std::mt19937_64 rng(271);
  std::normal_distribution<double> noise(0.0, 0.5);
  cls::DataMatrix x(10, 4);
  std::vector<int> scripts;
  for (int i = 0; i < 10; ++i) {
    const int cl = i % 2 ? 9 : 12;  // two scripts, interleaved
    for (int j = 0; j < 4; ++j)
      x.row(i)[j] = (cl == 9 ? 1.0 : -1.0) * (j + 1) + noise(rng);
    scripts.push_back(cl);
  }
  const cls::KernelConfig cfg{cls::KernelConfig::Kind::Rbf, 0.125, 8.0};
  const cls::MultiModel m = cls::train_ova(x, scripts, cfg, feat::Extractor::Dmb);
  const std::string path = tmp.file("model.mdsv");
  cls::save_model(path, m);

  const cls::MultiModel back = cls::load_model(path);
  CHECK(back.extractor == m.extractor);
  CHECK(back.kernel == m.kernel);
  CHECK(back.dim == m.dim);
  CHECK(back.mean == m.mean);
  CHECK(back.scale == m.scale);
  CHECK(back.support.values == m.support.values);
  for (int s = 0; s < cls::kScriptCount; ++s) {
    CHECK(back.heads[s].live == m.heads[s].live);
    CHECK(back.heads[s].alphas == m.heads[s].alphas);
    CHECK(back.heads[s].bias == m.heads[s].bias);
  }
  // identical predictions
  std::vector<double> sample(x.row(3), x.row(3) + 4);
  const cls::ScoreVector sa = cls::predict(m, sample);
  const cls::ScoreVector sb = cls::predict(back, sample);
  for (int i = 0; i < 13; ++i)
    CHECK((sa[i] == sb[i] || (sa[i] == -kInf && sb[i] == -kInf)));

  CHECK(error_code([&] { cls::load_model(tmp.file("nope.mdsv")); }) ==
        "io-error");
  std::ofstream bad(tmp.file("bad.mdsv"), std::ios::binary);
  bad << "garbage";
  bad.close();
  CHECK(error_code([&] { cls::load_model(tmp.file("bad.mdsv")); }) ==
        "format-error");
}
