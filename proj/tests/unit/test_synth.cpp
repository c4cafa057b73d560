#include <gtest/gtest.h>

#include "algaeid/error.hpp"
#include "algaeid/evaluate.hpp"
#include "algaeid/segment.hpp"
#include "algaeid/synth.hpp"
#include "support.hpp"

using namespace algaeid;

namespace {

long area(const BinaryMask& m) {
  long n = 0;
  for (auto v : m.pixels()) n += v != 0;
  return n;
}

}  // namespace

TEST(Synth, Deterministic) {
  SynthConfig cfg;
  cfg.seed = 7;
  const SynthFrame a = generate_coenobium(cfg);
  const SynthFrame b = generate_coenobium(cfg);
  EXPECT_EQ(a.image, b.image);
  EXPECT_EQ(a.truth, b.truth);
  cfg.seed = 8;
  EXPECT_NE(generate_coenobium(cfg).image, a.image);
}

TEST(Synth, ColoniesAreContiguous) {
  for (LabelClass cls : kAllClasses) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      SynthConfig cfg;
      cfg.cls = cls;
      cfg.seed = seed;
      const LabelMap l = label_components(generate_coenobium(cfg).truth);
      int n = 0;
      for (auto v : l.pixels()) n = std::max(n, v);
      EXPECT_EQ(n, 1) << static_cast<int>(cls) << " seed " << seed;
    }
  }
}

TEST(Synth, EightCellAreaScales) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SynthConfig cfg;
    cfg.long_axis_min = cfg.long_axis_max = 12.0;
    cfg.short_axis_min = cfg.short_axis_max = 5.0;
    cfg.seed = seed;
    const long one = area(generate_coenobium(cfg).truth);
    cfg.cls = LabelClass::Eight;
    const long eight = area(generate_coenobium(cfg).truth);
    EXPECT_NEAR(static_cast<double>(eight) / static_cast<double>(one), 8.0, 2.0) << seed;
  }
}

TEST(Synth, NoiseFreeTruthIsRenderedForeground) {
  SynthConfig cfg;
  cfg.noise_sigma = 0.0;
  for (LabelClass cls : kAllClasses) {
    cfg.cls = cls;
    const SynthFrame f = generate_coenobium(cfg);
    for (std::size_t i = 0; i < f.image.size(); ++i) {
      ASSERT_EQ(f.truth.pixels()[i] != 0, f.image.pixels()[i] != 180) << i;
      if (f.truth.pixels()[i]) ASSERT_LT(f.image.pixels()[i], 180);
    }
  }
}

TEST(Synth, RejectsBadConfig) {
  auto code = [](SynthConfig cfg) {
    try {
      generate_coenobium(cfg);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  SynthConfig c;
  c.width = 4;
  EXPECT_EQ(code(c), ErrorCode::ConfigOutOfRange);
  c = {};
  c.short_axis_min = -1;
  EXPECT_EQ(code(c), ErrorCode::ConfigOutOfRange);
  c = {};
  c.body = 200;
  EXPECT_EQ(code(c), ErrorCode::ConfigOutOfRange);
  c = {};
  c.cls = static_cast<LabelClass>(3);
  EXPECT_EQ(code(c), ErrorCode::ConfigOutOfRange);
  EXPECT_THROW(generate_frames(0, {}, 1), Error);
}

TEST(Synth, DatasetOnDisk) {
  const auto frames = generate_frames(5, {}, 3);
  ASSERT_EQ(frames.size(), 20u);
  std::array<int, kNumClasses> per{};
  for (const auto& f : frames) ++per[static_cast<std::size_t>(class_index(f.label))];
  for (int n : per) EXPECT_EQ(n, 5);
  EXPECT_EQ(generate_frames(5, {}, 3)[7].image, frames[7].image);

  const auto dir = testing_support::scratch_dir("synth");
  const auto rows = write_dataset(frames, dir);
  ASSERT_EQ(rows.size(), 20u);
  const auto back = read_manifest(dir / "manifest.csv");
  ASSERT_EQ(back.size(), 20u);
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].label, frames[i].label);
    EXPECT_EQ(load_image(back[i].path), frames[i].image);
    EXPECT_EQ(load_mask(truth_path_for(back[i].path)), frames[i].truth);
  }
  EXPECT_EQ(truth_path_for("x/img_0003.pgm"), std::filesystem::path("x/gt_0003.pgm"));
}

TEST(Synth, SegmentationFindsOneColonyPerFrame) {
  const auto frames = generate_frames(10, {}, 21);
  int good = 0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const SegmentResult r = segment_image(frames[i].image, {}, "f" + std::to_string(i));
    if (r.patches.size() != 1) continue;
    const LabelMap l = patches_to_label_map(r.patches, frames[i].image.width(), frames[i].image.height());
    long inter = 0, uni = 0;
    for (std::size_t p = 0; p < l.size(); ++p) {
      const bool a = l.pixels()[p] > 0, b = frames[i].truth.pixels()[p] != 0;
      inter += a && b;
      uni += a || b;
    }
    good += static_cast<double>(inter) / static_cast<double>(uni) >= 0.8;
  }
  EXPECT_GE(good, 38) << "of " << frames.size();
}
