// One line per acceptance criterion: PASS/FAIL, what was measured, wall time.
// Exit status is the number of failed criteria (capped at 255).

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "algaeid/evaluate.hpp"
#include "algaeid/features.hpp"
#include "algaeid/pipeline.hpp"
#include "algaeid/preprocess.hpp"
#include "algaeid/segment.hpp"
#include "algaeid/select.hpp"
#include "algaeid/standardize.hpp"
#include "support.hpp"

using namespace algaeid;
namespace fs = std::filesystem;
namespace ts = testing_support;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& cli, const std::string& args, const fs::path& log) {
  const std::string cmd = cli + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// 1 -------------------------------------------------------------------------
Outcome posterize_exact() {
  const std::set<int> alphabet{0, 85, 170, 255};
  int bad = 0;
  for (int v = 0; v < 256; ++v) {
    const auto once = posterize_value(static_cast<std::uint8_t>(v), {3});
    if (!alphabet.count(once) || posterize_value(once, {3}) != once) ++bad;
  }
  return {bad == 0, std::to_string(256 - bad) + "/256 inputs in {0,85,170,255} and fixed under reapplication"};
}

// 2 -------------------------------------------------------------------------
Outcome otsu_oracle() {
  int match = 0;
  for (int i = 0; i < 200; ++i) {
    const int lo = static_cast<int>(derive_seed(11, "lo", static_cast<std::uint64_t>(i)) % 128);
    const GrayImage img = ts::random_image(32, 32, derive_seed(11, "otsu", static_cast<std::uint64_t>(i)), lo, 255 - lo / 2);
    match += otsu_threshold(img) == ts::otsu_brute_force(img);
  }
  return {match == 200, std::to_string(match) + "/200 thresholds equal to brute force"};
}

// 3 -------------------------------------------------------------------------
Outcome dimensionalities() {
  const std::array<std::size_t, 5> sizes{std::tuple_size_v<decltype(hu_moments(RegionPatch{}))>,
                                         std::tuple_size_v<decltype(hog_descriptor(RegionPatch{}))>,
                                         std::tuple_size_v<decltype(zernike_moments(RegionPatch{}))>,
                                         std::tuple_size_v<decltype(lbp_histogram(RegionPatch{}))>,
                                         std::tuple_size_v<decltype(haralick_features(RegionPatch{}))>};
  const std::array<std::size_t, 5> want{7, 81, 40, 59, 28};
  bool ok = sizes == want && std::tuple_size_v<FeatureVector> == 215;
  std::size_t begin = 0;
  for (std::size_t b = 0; b < kFeatureBlocks.size(); ++b) {
    ok = ok && kFeatureBlocks[b].begin == begin && kFeatureBlocks[b].size == want[b];
    begin += kFeatureBlocks[b].size;
  }
  return {ok && begin == 215, "7 + 81 + 40 + 59 + 28 = " + std::to_string(begin)};
}

// 4 -------------------------------------------------------------------------
Outcome invariance() {
  Rng rng(404);
  double hu90 = 0, zrot = 0, hutr = 0, ztr = 0;
  for (int i = 0; i < 100; ++i) {
    const RegionPatch p = ts::textured_patch(rng, 8, 40, i % 2 == 1);
    const RegionPatch q = ts::quarter_turn(p);
    hu90 = std::max(hu90, ts::max_relative_deviation(hu_invariants(p.image, p.mask), hu_invariants(q.image, q.mask)));
  }
  for (int i = 0; i < 100; ++i) {
    const RegionPatch p = ts::textured_patch(rng, 100, 140);
    zrot = std::max(zrot, ts::vector_relative_deviation(zernike_moments(p), zernike_moments(rotate_patch(p, 30.0))));
  }
  for (int i = 0; i < 100; ++i) {
    const RegionPatch p = ts::textured_patch(rng, 8, 40, i % 2 == 1);
    const int dx = static_cast<int>(rng.below(20)), dy = static_cast<int>(rng.below(20));
    const RegionPatch t = ts::translated(p, dx, dy, dx + static_cast<int>(rng.below(9)), dy + static_cast<int>(rng.below(9)));
    hutr = std::max(hutr, ts::max_relative_deviation(hu_invariants(p.image, p.mask), hu_invariants(t.image, t.mask)));
    ztr = std::max(ztr, ts::max_relative_deviation(zernike_moments(p), zernike_moments(t)));
  }
  const bool ok = hu90 <= 1e-6 && zrot <= 0.05 && hutr <= 1e-6 && ztr <= 1e-6;
  return {ok, "worst: Hu 90deg " + fmt("%.1e", hu90) + ", Zernike 30deg " + fmt("%.2f%%", 100 * zrot) + ", Hu shift " +
                  fmt("%.1e", hutr) + ", Zernike shift " + fmt("%.1e", ztr)};
}

// 5 -------------------------------------------------------------------------
Outcome haralick_closed_forms() {
  RegionPatch flat;
  flat.image = GrayImage(9, 9, 130);
  flat.mask = BinaryMask(9, 9, 1);
  const auto f = haralick_features(flat);
  bool ok = f[0] == 1.0 && f[1] == 0.0 && f[8] == 0.0;
  for (int k = 14; k < 28; ++k) ok = ok && f[static_cast<std::size_t>(k)] == 0.0;
  GrayImage board(10, 10);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 10; ++x) board(x, y) = (x + y) % 2 ? 32 : 0;
  }
  Glcm p;
  const bool have = glcm(board, BinaryMask(10, 10, 1), kGlcmOffsets[0], p);
  const double contrast = have ? haralick_statistics(p)[1] : -1.0;
  ok = ok && contrast == 1.0;
  return {ok, "constant: ASM " + fmt("%g", f[0]) + ", contrast " + fmt("%g", f[1]) + ", entropy " + fmt("%g", f[8]) +
                  "; checkerboard contrast " + fmt("%g", contrast)};
}

// 6 -------------------------------------------------------------------------
Outcome svm_correctness() {
  SvmConfig lin;
  lin.kernel = KernelKind::Linear;
  lin.C = 100;
  Eigen::MatrixXd x2(2, 2);
  x2 << 0, 0, 2, 2;
  const SvmModel m = svm_train(x2, {LabelClass::One, LabelClass::Two}, lin);
  double boundary = 0;
  for (const auto& q : {Eigen::Vector2d(1, 1), Eigen::Vector2d(2, 0), Eigen::Vector2d(0, 2), Eigen::Vector2d(4, -2)}) {
    boundary = std::max(boundary, std::abs(svm_decision(m.machines[0], m.config, q)));
  }
  const bool two_ok = boundary <= 1e-3 && svm_predict(m, Eigen::Vector2d(0, 0)) == LabelClass::One &&
                      svm_predict(m, Eigen::Vector2d(2, 2)) == LabelClass::Two;

  Eigen::MatrixXd xo(4, 2);
  xo << 1, 1, -1, -1, 1, -1, -1, 1;
  const std::vector<LabelClass> yo{LabelClass::One, LabelClass::One, LabelClass::Two, LabelClass::Two};
  SvmConfig rbf;
  rbf.gamma = 1;
  rbf.C = 100;
  const SvmModel xm = svm_train(xo, yo, rbf);
  int xor_ok = 0;
  for (int i = 0; i < 4; ++i) xor_ok += svm_predict(xm, xo.row(i).transpose()) == yo[static_cast<std::size_t>(i)];

  double worst_gap = 0;
  int gap_ok = 0;
  for (int p = 0; p < 20; ++p) {
    Rng rng(derive_seed(606, "svm", static_cast<std::uint64_t>(p)));
    const int n = 20 + static_cast<int>(rng.below(30));
    const int d = 2 + static_cast<int>(rng.below(4));
    Eigen::MatrixXd x(n, d);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      y(i) = i % 2 ? 1.0 : -1.0;
      for (int j = 0; j < d; ++j) x(i, j) = rng.normal() + (j == 0 ? 0.8 * y(i) : 0.0);
    }
    const double c = std::pow(10.0, rng.uniform(-1.0, 1.0));
    SvmConfig cfg = lin;
    cfg.C = c;
    const SmoResult r = smo_solve(kernel_matrix(x, x, cfg), y, c, cfg.tol, cfg.max_iter);
    const auto obj = ts::svm_objectives(x, y, r.alpha, r.bias, c);
    const double rel = (obj.primal - obj.dual) / (1.0 + std::abs(obj.dual));
    worst_gap = std::max(worst_gap, rel);
    bool box = r.converged && std::abs(r.alpha.dot(y)) <= 1e-8;
    for (int i = 0; i < n; ++i) box = box && r.alpha(i) >= 0 && r.alpha(i) <= c;
    gap_ok += box && rel <= 1e-3;
  }
  const bool ok = two_ok && xor_ok == 4 && gap_ok == 20;
  return {ok, "2-point boundary error " + fmt("%.1e", boundary) + ", XOR " + std::to_string(xor_ok) + "/4, gap within " +
                  "1e-3(1+|D|) on " + std::to_string(gap_ok) + "/20 (worst " + fmt("%.1e", worst_gap) + ")"};
}

// 7 -------------------------------------------------------------------------
Outcome ann_gradient() {
  double worst = 0;
  Eigen::MatrixXd x(3, 6);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(derive_seed(seed, "acceptance-batch"));
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.normal();
    const std::vector<int> cls{static_cast<int>(rng.below(4)), static_cast<int>(rng.below(4)), static_cast<int>(rng.below(4))};
    for (int tau : {5, 20}) {
      MlpModel m = mlp_init(6, tau, seed);
      Eigen::VectorXd g;
      mlp_loss_grad(m, x, cls, &g);
      for (Eigen::Index p = 0; p < m.theta.size(); ++p) {
        const double keep = m.theta(p);
        m.theta(p) = keep + 1e-5;
        const double up = mlp_loss_grad(m, x, cls, nullptr);
        m.theta(p) = keep - 1e-5;
        const double down = mlp_loss_grad(m, x, cls, nullptr);
        m.theta(p) = keep;
        const double fd = (up - down) / 2e-5;
        worst = std::max(worst, std::abs(fd - g(p)) / std::max({std::abs(fd), std::abs(g(p)), 1e-6}));
      }
    }
  }
  return {worst <= 1e-4, "max relative error " + fmt("%.2e", worst) + " over 5 seeds x tau {5, 20}"};
}

// 8 -------------------------------------------------------------------------
Outcome sfs_oracle() {
  Rng rng(808);
  const int n = 80;
  Eigen::MatrixXd x(n, 10);
  std::vector<LabelClass> y;
  for (int i = 0; i < n; ++i) {
    const int c = i % 4;
    y.push_back(class_from_index(c));
    x(i, 0) = (c >= 2 ? 2.0 : -2.0) + 0.3 * rng.normal();
    x(i, 1) = (c % 2 ? 2.0 : -2.0) + 0.3 * rng.normal();
    for (int j = 2; j < 10; ++j) x(i, j) = rng.normal();
  }
  x = Standardizer::fit(x).apply_rows(x);
  SfsOptions opt;
  const SfsRanking r = sfs_rank(x, y, opt);
  const auto folds = stratified_folds(y, opt.folds, derive_seed(opt.seed, "sfs"));
  double best = -1;
  std::pair<int, int> arg{-1, -1};
  for (int a = 0; a < 10; ++a) {
    for (int b = a + 1; b < 10; ++b) {
      const double s = subset_score(x, y, {a, b}, folds, opt.criterion).first;
      if (s > best) {
        best = s;
        arg = {a, b};
      }
    }
  }
  const std::pair<int, int> top{std::min(r.order[0], r.order[1]), std::max(r.order[0], r.order[1])};
  const bool ok = top == std::make_pair(0, 1) && arg == top;
  return {ok, "SFS top pair {" + std::to_string(top.first) + "," + std::to_string(top.second) + "}, exhaustive best {" +
                  std::to_string(arg.first) + "," + std::to_string(arg.second) + "} at " + fmt("%.3f", best)};
}

// 9 -------------------------------------------------------------------------
Outcome hoover_cases() {
  LabelMap gt(10, 10, 1), split(10, 10, 1);
  for (int y = 0; y < 10; ++y) {
    for (int x = 5; x < 10; ++x) split(x, y) = 2;
  }
  const HooverCurves s = hoover_curves(gt, split, {0.8});
  LabelMap multi(20, 12, 0);
  for (int y = 0; y < 12; ++y) {
    for (int x = 0; x < 20; ++x) multi(x, y) = x < 6 ? (y < 6 ? 1 : 0) : (x < 15 ? 2 : 3);
  }
  std::vector<double> ts_;
  for (int i = 51; i <= 99; ++i) ts_.push_back(i / 100.0);
  const HooverCurves same = hoover_curves(multi, multi, ts_);
  bool all = true;
  for (double c : same.correct) all = all && c == 1.0;
  const bool ok = s.correct[0] == 0.0 && s.over_segmented[0] == 1.0 && all;
  return {ok, "split case: correct " + fmt("%g%%", 100 * s.correct[0]) + ", over " + fmt("%g%%", 100 * s.over_segmented[0]) +
                  "; identical maps 100% correct for T in [0.51, 0.99]: " + (all ? "yes" : "no")};
}

// 10 ------------------------------------------------------------------------
Outcome end_to_end(const std::string& cli, const fs::path& work) {
  const fs::path out = work / "exp12";
  const int code = run_cli(cli, "pipeline --synth 100 --seed 1 --classifier svm --sfs --out " + out.string(), work / "exp12.log");
  if (code != 0) return {false, "pipeline exited with " + std::to_string(code) + "; see " + (work / "exp12.log").string()};
  const auto report = nlohmann::json::parse(slurp(out / "report.json"));
  const auto& cls = report["classification"];
  const double mean = cls["mean_accuracy"], sd = cls["std_accuracy"];
  const auto& cm = cls["confusion_mean_percent"];
  bool adjacent = true;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      if (std::abs(r - c) > 1 && cm[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>() != 0.0) adjacent = false;
    }
  }
  const bool ok = mean >= 0.95 && sd <= 0.03 && adjacent;
  std::string detail = "10-fold mean " + fmt("%.2f%%", 100 * mean) + " std " + fmt("%.2f%%", 100 * sd) +
                       ", confusions only between adjacent sizes: " + (adjacent ? "yes" : "no");
  if (report["selection"].is_object()) detail += ", l = " + std::to_string(report["selection"]["l"].get<int>());
  return {ok, detail};
}

// 11 ------------------------------------------------------------------------
Outcome segmentation_quality() {
  const auto frames = synth_frames(50, SynthConfig{}, 1111);
  const SegmentConfig cfg;
  const auto segs = segment_frames(frames, cfg);
  const SegmentationEval e = evaluate_segmentation(frames, segs, {0.8});
  const double correct = e.pooled.correct[0];
  const bool ok = e.frames == 200 && correct >= 0.88 && e.f_mean >= 0.93;
  return {ok, std::to_string(e.frames) + " frames: Hoover correct " + fmt("%.2f%%", 100 * correct) + " at T=0.8, pixel F " +
                  fmt("%.4f", e.f_mean)};
}

// 12 ------------------------------------------------------------------------
Outcome timing() {
  const auto frames = synth_frames(10, SynthConfig{}, 1212);
  const SegmentConfig cfg;
  std::vector<PatchRecord> kept;
  std::vector<PatchDrop> dropped;
  collect_patches(frames, segment_frames(frames, cfg), kept, dropped);
  const auto rows = compute_features(kept, nullptr);
  const LabeledDataset ds = to_dataset(rows, "timing");
  std::vector<int> all(kFeatureDim);
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  const TrainedModel model = train_full(to_matrix(ds), labels_of(ds), all, SvmConfig{});
  const TimingReport t = time_per_alga(frames, cfg, model);
  return {t.mean_s < 2.43, std::to_string(t.patches) + " algae: mean " + fmt("%.4f s", t.mean_s) + " (std " +
                               fmt("%.4f s", t.std_s) + ") per alga"};
}

// 13 ------------------------------------------------------------------------
Outcome determinism(const std::string& cli, const fs::path& work) {
  std::string text[2];
  for (int i = 0; i < 2; ++i) {
    // Same output path both times: the report echoes it.
    const fs::path out = work / "det";
    fs::remove_all(out);
    const int code = run_cli(cli, "pipeline --synth 12 --seed 5 --sfs --k 5 --out " + out.string(),
                             work / ("det" + std::to_string(i) + ".log"));
    if (code != 0) return {false, "run " + std::to_string(i) + " exited with " + std::to_string(code)};
    auto j = nlohmann::json::parse(slurp(out / "report.json"));
    if (!j.contains("timestamp")) return {false, "report has no timestamp field"};
    j.erase("timestamp");
    text[i] = j.dump(2);
    for (const char* f : {"hoover.csv", "counts.csv", "model.bin", "ranking.json"}) text[i] += "\n" + slurp(out / f);
  }
  const bool ok = text[0] == text[1] && !text[0].empty();
  return {ok, std::string("report.json (without timestamp), hoover.csv, counts.csv, model.bin, ranking.json ") +
                  (ok ? "byte-identical" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::string cli;
  std::string work = "acceptance_work";
  std::vector<int> only;
  app.add_option("--cli", cli, "path to the algaeid executable")->required();
  app.add_option("--work", work, "scratch directory");
  app.add_option("--only", only, "run only these criteria");
  CLI11_PARSE(app, argc, argv);
  fs::remove_all(work);
  fs::create_directories(work);

  struct Criterion {
    int id;
    const char* name;
    double limit_s;  // 0: no runtime bound
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "posterize n=3 exactness", 1, posterize_exact},
      {2, "Otsu brute-force equivalence", 10, otsu_oracle},
      {3, "descriptor dimensionalities", 0, dimensionalities},
      {4, "invariance suite", 120, invariance},
      {5, "Haralick closed forms", 0, haralick_closed_forms},
      {6, "SVM correctness", 60, svm_correctness},
      {7, "ANN gradient check", 0, ann_gradient},
      {8, "SFS planted oracle", 30, sfs_oracle},
      {9, "Hoover hand cases", 0, hoover_cases},
      {10, "synthetic end-to-end classification", 1800, [&] { return end_to_end(cli, work); }},
      {11, "synthetic segmentation quality", 600, segmentation_quality},
      {12, "per-alga timing", 0, timing},
      {13, "seeded determinism", 0, [&] { return determinism(cli, work); }},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_s > 0 && secs > c.limit_s) {
      o.pass = false;
      o.detail += "; over the " + fmt("%g s", c.limit_s) + " budget";
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s  %2d  %-38s %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return std::min(failed, 255);
}
