// Parallel kernels against their serial references. On a single core the
// pairs should run at the same speed; the gap grows with OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <numeric>

#include "algaeid/evaluate.hpp"
#include "algaeid/features.hpp"
#include "algaeid/pipeline.hpp"
#include "algaeid/preprocess.hpp"
#include "algaeid/rng.hpp"
#include "algaeid/select.hpp"
#include "algaeid/standardize.hpp"

using namespace algaeid;

namespace {

GrayImage noise_image(int w, int h) {
  Rng rng(42);
  GrayImage img(w, h);
  for (auto& v : img.pixels()) v = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

const std::vector<Frame>& frames() {
  static const std::vector<Frame> f = synth_frames(8, SynthConfig{}, 3);
  return f;
}

const std::vector<RegionPatch>& patches() {
  static const std::vector<RegionPatch> p = [] {
    std::vector<RegionPatch> out;
    for (const auto& s : segment_frames(frames(), SegmentConfig{})) {
      for (const auto& q : s.patches) out.push_back(q);
    }
    return out;
  }();
  return p;
}

struct Table {
  Eigen::MatrixXd x;
  std::vector<LabelClass> y;
};

const Table& table() {
  static const Table t = [] {
    const BatchResult b = extract_batch(patches());
    std::vector<PatchRecord> kept;
    std::vector<PatchDrop> dropped;
    collect_patches(frames(), segment_frames(frames(), SegmentConfig{}), kept, dropped);
    Table out;
    out.x.resize(static_cast<Eigen::Index>(b.features.size()), static_cast<Eigen::Index>(kFeatureDim));
    for (std::size_t i = 0; i < b.features.size(); ++i) {
      for (std::size_t j = 0; j < kFeatureDim; ++j) {
        out.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = b.features[i][j];
      }
      out.y.push_back(*kept[i].label);
    }
    out.x = Standardizer::fit(out.x).apply_rows(out.x);
    return out;
  }();
  return t;
}

void BM_Clahe(benchmark::State& st) {
  const GrayImage img = noise_image(1024, 768);
  for (auto _ : st) benchmark::DoNotOptimize(clahe(img, ClaheConfig{}));
}
BENCHMARK(BM_Clahe)->Unit(benchmark::kMillisecond);

void BM_ClaheSerial(benchmark::State& st) {
  const GrayImage img = noise_image(1024, 768);
  for (auto _ : st) benchmark::DoNotOptimize(clahe_serial(img, ClaheConfig{}));
}
BENCHMARK(BM_ClaheSerial)->Unit(benchmark::kMillisecond);

void BM_SegmentFrames(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(segment_frames(frames(), SegmentConfig{}));
}
BENCHMARK(BM_SegmentFrames)->Unit(benchmark::kMillisecond);

void BM_SegmentFramesSerial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(segment_frames_serial(frames(), SegmentConfig{}));
}
BENCHMARK(BM_SegmentFramesSerial)->Unit(benchmark::kMillisecond);

void BM_ExtractBatch(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(extract_batch(patches()));
}
BENCHMARK(BM_ExtractBatch)->Unit(benchmark::kMillisecond);

void BM_ExtractBatchSerial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(extract_batch_serial(patches()));
}
BENCHMARK(BM_ExtractBatchSerial)->Unit(benchmark::kMillisecond);

void BM_KfoldCv(benchmark::State& st) {
  const bool parallel = st.range(0) != 0;
  for (auto _ : st) {
    benchmark::DoNotOptimize(kfold_cv(table().x, table().y, 4, SvmConfig{}, 1, parallel));
  }
}
BENCHMARK(BM_KfoldCv)->Arg(1)->Arg(0)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void BM_SfsFirstSteps(benchmark::State& st) {
  SfsOptions opt;
  opt.folds = 4;
  opt.parallel = st.range(0) != 0;
  std::vector<int> cols(40);
  std::iota(cols.begin(), cols.end(), 0);
  const Eigen::MatrixXd x = select_columns(table().x, cols);
  for (auto _ : st) benchmark::DoNotOptimize(sfs_rank(x, table().y, opt));
}
BENCHMARK(BM_SfsFirstSteps)->Arg(1)->Arg(0)->ArgName("parallel")->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
