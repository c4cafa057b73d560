#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "algaeid/evaluate.hpp"
#include "algaeid/select.hpp"
#include "algaeid/types.hpp"

namespace algaeid {

// Column layouts are described in docs/formats.md.

struct PatchRecord {
  std::string sample_id;
  std::string source;
  std::optional<LabelClass> label;
  RegionPatch patch;
};

struct PatchDrop {
  std::string source;
  std::optional<LabelClass> label;
  std::string reason;
};

/// patches.csv plus <sample_id>.pgm / <sample_id>_mask.pgm for every kept patch.
void write_patches(const std::filesystem::path& dir, const std::vector<PatchRecord>& kept,
                   const std::vector<PatchDrop>& dropped);
std::vector<PatchRecord> read_patches(const std::filesystem::path& dir);

struct FeatureRow {
  std::string sample_id;
  std::optional<LabelClass> label;
  FeatureVector features{};
};

void write_features_csv(const std::filesystem::path& path, const std::vector<FeatureRow>& rows);
std::vector<FeatureRow> read_features_csv(const std::filesystem::path& path);
/// Labelled rows only.
LabeledDataset to_dataset(const std::vector<FeatureRow>& rows, const std::string& provenance);

nlohmann::json ranking_to_json(const SfsRanking& r, const LChoice& choice);
/// Restores the ranking and the stored prefix length.
std::pair<SfsRanking, LChoice> ranking_from_json(const nlohmann::json& j);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

void write_hoover_csv(const std::filesystem::path& path, const HooverCurves& curves);

struct FrameCount {
  std::string source;
  std::array<int, kNumClasses> per_class{};
  int failed = 0;  // patches whose features could not be computed
};

void write_counts_csv(const std::filesystem::path& path, const std::vector<FrameCount>& counts);

/// Round-trip formatting for doubles in text files.
std::string format_double(double v);

}  // namespace algaeid
