#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "algaeid/error.hpp"
#include "algaeid/formats.hpp"
#include "algaeid/pipeline.hpp"
#include "support.hpp"

using namespace algaeid;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Formats, DoubleRoundTrip) {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.normal() * std::pow(10.0, rng.uniform(-30, 30));
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(Formats, PatchesRoundTrip) {
  Rng rng(3);
  std::vector<PatchRecord> kept;
  for (int i = 0; i < 3; ++i) {
    PatchRecord r;
    r.sample_id = "img_" + std::to_string(i) + "_00";
    r.source = "dir/img_" + std::to_string(i) + ".pgm";
    r.label = i == 2 ? std::nullopt : std::optional<LabelClass>(class_from_index(i));
    r.patch = testing_support::textured_patch(rng, 5, 9);
    r.patch.offset = {i * 3, 7};
    r.patch.orientation_deg = 12.5 * i;
    r.patch.low_confidence_orientation = i == 1;
    kept.push_back(std::move(r));
  }
  const std::vector<PatchDrop> dropped{{"dir/img_9.pgm", LabelClass::Eight, "size"}};
  const auto dir = testing_support::scratch_dir("patches");
  write_patches(dir, kept, dropped);
  const std::string csv = slurp(dir / "patches.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "sample_id,source,label,offset_x,offset_y,width,height,angle,low_confidence,area,drop_reason");
  EXPECT_NE(csv.find(",size"), std::string::npos);

  const auto back = read_patches(dir);
  ASSERT_EQ(back.size(), kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    EXPECT_EQ(back[i].sample_id, kept[i].sample_id);
    EXPECT_EQ(back[i].source, kept[i].source);
    EXPECT_EQ(back[i].label, kept[i].label);
    EXPECT_EQ(back[i].patch.image, kept[i].patch.image);
    EXPECT_EQ(back[i].patch.mask, kept[i].patch.mask);
    EXPECT_EQ(back[i].patch.offset.x, kept[i].patch.offset.x);
    EXPECT_EQ(back[i].patch.orientation_deg, kept[i].patch.orientation_deg);
    EXPECT_EQ(back[i].patch.low_confidence_orientation, kept[i].patch.low_confidence_orientation);
  }
  EXPECT_THROW(read_patches(dir / "nowhere"), Error);
}

TEST(Formats, FeaturesRoundTrip) {
  Rng rng(4);
  std::vector<FeatureRow> rows(5);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].sample_id = "s" + std::to_string(i);
    rows[i].label = i == 3 ? std::nullopt : std::optional<LabelClass>(class_from_index(static_cast<int>(i % 4)));
    for (auto& f : rows[i].features) f = rng.normal() * 1e3;
  }
  const auto dir = testing_support::scratch_dir("features");
  write_features_csv(dir / "f.csv", rows);
  const std::string text = slurp(dir / "f.csv");
  EXPECT_EQ(text.rfind("# blocks:", 0), 0u);
  EXPECT_NE(text.find("sample_id,label,f000,"), std::string::npos);
  EXPECT_NE(text.find(",f214\n"), std::string::npos);

  const auto back = read_features_csv(dir / "f.csv");
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].sample_id, rows[i].sample_id);
    EXPECT_EQ(back[i].label, rows[i].label);
    EXPECT_EQ(back[i].features, rows[i].features);
  }
  const LabeledDataset ds = to_dataset(back, "test");
  EXPECT_EQ(ds.size(), 4u);

  std::ofstream(dir / "short.csv") << "sample_id,label,f000\na,1,0.5\n";
  EXPECT_EQ(code_of([&] { read_features_csv(dir / "short.csv"); }), ErrorCode::MalformedRow);
}

TEST(Formats, RankingRoundTrip) {
  SfsRanking r;
  r.order = {2, 0, 1};
  r.score_curve = {0.5, 0.75, 0.7};
  r.std_curve = {0.1, 0.05, 0.02};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  r.step_scores = {{0.4, 0.3, 0.5}, {0.75, 0.6, nan}, {nan, 0.7, nan}};
  const LChoice c{2, 0.75, 0.05};
  const nlohmann::json j = ranking_to_json(r, c);
  EXPECT_TRUE(j["step_scores"][1][2].is_null());
  const auto dir = testing_support::scratch_dir("ranking");
  write_json(dir / "r.json", j);
  const auto [r2, c2] = ranking_from_json(read_json(dir / "r.json"));
  EXPECT_EQ(r2.order, r.order);
  EXPECT_EQ(r2.score_curve, r.score_curve);
  EXPECT_EQ(r2.std_curve, r.std_curve);
  EXPECT_TRUE(std::isnan(r2.step_scores[2][0]));
  EXPECT_EQ(r2.step_scores[0][2], 0.5);
  EXPECT_EQ(c2.l, 2);
  EXPECT_EQ(c2.accuracy, 0.75);

  nlohmann::json bad = j;
  bad["l"] = 7;
  EXPECT_EQ(code_of([&] { ranking_from_json(bad); }), ErrorCode::MalformedRow);
}

TEST(Formats, HooverAndCountsCsv) {
  const auto dir = testing_support::scratch_dir("csvs");
  HooverCounts hc;
  hc.correct = 3;
  hc.gt_regions = 4;
  hc.ms_regions = 4;
  write_hoover_csv(dir / "h.csv", curves_from_counts({0.8}, {hc}));
  EXPECT_EQ(slurp(dir / "h.csv"), "tolerance,correct,over_segmented,under_segmented,missed,noise\n0.8,0.75,0,0,0,0\n");

  FrameCount f{"a.pgm", {1, 0, 2, 0}, 1};
  write_counts_csv(dir / "c.csv", {f});
  EXPECT_EQ(slurp(dir / "c.csv"), "source,cells_1,cells_2,cells_4,cells_8,failed,total\na.pgm,1,0,2,0,1,4\n");
}

TEST(Config, KeysAndValidation) {
  PipelineConfig cfg;
  EXPECT_EQ(code_of([&] { set_config_value(cfg, "no.such.key", "1"); }), ErrorCode::ConfigOutOfRange);
  EXPECT_EQ(code_of([&] { set_config_value(cfg, "svm.C", "abc"); }), ErrorCode::ConfigOutOfRange);
  set_config_value(cfg, "svm.C", "0");
  EXPECT_EQ(code_of([&] { validate_settings(cfg); }), ErrorCode::ConfigOutOfRange);
  cfg = {};
  set_config_value(cfg, "evaluate.folds", "1");
  EXPECT_EQ(code_of([&] { validate_settings(cfg); }), ErrorCode::ConfigOutOfRange);
  cfg = {};
  // No manifest and no synthetic corpus: nothing to run on.
  EXPECT_NO_THROW(validate_settings(cfg));
  EXPECT_EQ(code_of([&] { validate(cfg); }), ErrorCode::ConfigOutOfRange);

  const nlohmann::json j = config_to_json(cfg);
  for (const auto& k : config_keys()) {
    EXPECT_TRUE(j.contains(k.name)) << k.name;
    EXPECT_FALSE(k.help.empty()) << k.name;
    // Every key accepts its own printed default.
    PipelineConfig copy;
    EXPECT_NO_THROW(k.set(copy, k.get(cfg))) << k.name;
    EXPECT_EQ(k.get(copy), k.get(cfg)) << k.name;
  }
  EXPECT_EQ(j.size(), config_keys().size());
}

TEST(Config, FileThenOverrides) {
  const auto dir = testing_support::scratch_dir("config");
  std::ofstream(dir / "a.conf") << "# comment\nsvm.C = 5\n\nseed=9  # trailing\nclassifier = ann\nann.tau = 15\n";
  PipelineConfig cfg;
  load_config_file(dir / "a.conf", cfg);
  EXPECT_EQ(cfg.svm.C, 5.0);
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_EQ(cfg.classifier, ClassifierKind::Ann);
  EXPECT_EQ(cfg.ann.tau, 15);
  set_config_value(cfg, "svm.C", "0.5");
  EXPECT_EQ(cfg.svm.C, 0.5);
  // The master seed reaches the network initialization.
  EXPECT_EQ(std::get<AnnConfig>(cfg.classifier_config()).seed, 9u);

  std::ofstream(dir / "b.conf") << "svm.C\n";
  EXPECT_EQ(code_of([&] { load_config_file(dir / "b.conf", cfg); }), ErrorCode::ConfigOutOfRange);
  EXPECT_THROW(load_config_file(dir / "missing.conf", cfg), Error);
}

TEST(Config, ExitCodes) {
  EXPECT_EQ(exit_code_for(ErrorCode::ConfigOutOfRange), 1);
  EXPECT_EQ(exit_code_for(ErrorCode::FileNotFound), 2);
  EXPECT_EQ(exit_code_for(ErrorCode::BadLabel), 2);
  EXPECT_EQ(exit_code_for(ErrorCode::BadModelFile), 2);
  EXPECT_EQ(exit_code_for(ErrorCode::TooFewPatches), 2);
  EXPECT_EQ(exit_code_for(ErrorCode::DegenerateSpectrum), 3);
}
