#include <gtest/gtest.h>

#include <cstring>
#include <fstream>

#include "algaeid/error.hpp"
#include "algaeid/model_io.hpp"
#include "support.hpp"

using namespace algaeid;

namespace {

TrainedModel fit(const ClassifierConfig& cfg) {
  Rng rng(14);
  const int n = 48;
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(kFeatureDim));
  std::vector<LabelClass> y;
  for (int i = 0; i < n; ++i) {
    const int c = i % 4;
    y.push_back(class_from_index(c));
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rng.normal() + (j % 5 == 0 ? 2.0 * c : 0.0);
  }
  return train_full(x, y, {0, 5, 7, 10, 100, 214}, cfg);
}

std::vector<FeatureVector> probes() {
  Rng rng(99);
  std::vector<FeatureVector> out(100);
  for (auto& v : out) {
    for (auto& f : v) f = rng.normal() * 3.0;
  }
  return out;
}

ErrorCode code_of(const std::vector<std::uint8_t>& bytes) {
  try {
    deserialize_model(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

void expect_same(const TrainedModel& a, const TrainedModel& b) {
  EXPECT_EQ(a.selected, b.selected);
  for (const auto& p : probes()) {
    const Eigen::VectorXd pa = a.prepare(p), pb = b.prepare(p);
    ASSERT_EQ(pa.size(), pb.size());
    for (Eigen::Index i = 0; i < pa.size(); ++i) ASSERT_EQ(std::memcmp(&pa(i), &pb(i), sizeof(double)), 0);
    EXPECT_EQ(a.predict(p), b.predict(p));
  }
}

}  // namespace

TEST(ModelIo, SvmRoundTrip) {
  SvmConfig cfg;
  cfg.C = 10;
  cfg.gamma = 0.05;
  const TrainedModel m = fit(cfg);
  const auto bytes = serialize_model(m);
  ASSERT_GE(bytes.size(), 6u);
  EXPECT_EQ(std::memcmp(bytes.data(), "CNSC", 4), 0);
  EXPECT_EQ(bytes[4] | (bytes[5] << 8), kModelFormatVersion);
  const TrainedModel back = deserialize_model(bytes);
  expect_same(m, back);
  const auto& sa = std::get<SvmModel>(m.payload);
  const auto& sb = std::get<SvmModel>(back.payload);
  ASSERT_EQ(sa.machines.size(), sb.machines.size());
  for (std::size_t i = 0; i < sa.machines.size(); ++i) {
    const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(6, -1, 1);
    const double da = svm_decision(sa.machines[i], sa.config, x);
    const double db = svm_decision(sb.machines[i], sb.config, x);
    EXPECT_EQ(std::memcmp(&da, &db, sizeof(double)), 0);
  }
  EXPECT_EQ(serialize_model(back), bytes);
}

TEST(ModelIo, AnnRoundTripThroughFile) {
  AnnConfig cfg;
  cfg.tau = 10;
  cfg.epochs = 40;
  const TrainedModel m = fit(cfg);
  const auto dir = testing_support::scratch_dir("model");
  save_model(m, dir / "m.bin");
  const TrainedModel back = load_model(dir / "m.bin");
  expect_same(m, back);
  const auto& a = std::get<MlpModel>(m.payload);
  const auto& b = std::get<MlpModel>(back.payload);
  for (const auto& p : probes()) {
    const Eigen::VectorXd pa = a.probabilities(m.prepare(p)), pb = b.probabilities(back.prepare(p));
    for (Eigen::Index i = 0; i < 4; ++i) ASSERT_EQ(std::memcmp(&pa(i), &pb(i), sizeof(double)), 0);
  }
}

TEST(ModelIo, RejectsCorruptFiles) {
  const auto bytes = serialize_model(fit(SvmConfig{}));
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_EQ(code_of(bad), ErrorCode::BadModelFile);
  bad = bytes;
  bad[4] = 99;
  EXPECT_EQ(code_of(bad), ErrorCode::BadModelFile);
  for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{6}, bytes.size() / 2, bytes.size() - 1}) {
    EXPECT_EQ(code_of(std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut))),
              ErrorCode::BadModelFile)
        << cut;
  }
  bad = bytes;
  bad.push_back(0);
  EXPECT_EQ(code_of(bad), ErrorCode::BadModelFile);

  const auto dir = testing_support::scratch_dir("model_bad");
  std::ofstream(dir / "junk.bin") << "not a model";
  try {
    load_model(dir / "junk.bin");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadModelFile);
  }
  EXPECT_THROW(load_model(dir / "absent.bin"), Error);
}
