#include "algaeid/formats.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "algaeid/error.hpp"
#include "algaeid/io.hpp"

namespace fs = std::filesystem;

namespace algaeid {

namespace {

std::string trim_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  return out;
}

std::string label_text(const std::optional<LabelClass>& l) { return l ? std::to_string(cells(*l)) : std::string(); }

std::optional<LabelClass> parse_label(const std::string& s, const std::string& where) {
  if (s.empty()) return std::nullopt;
  int n = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
  if (ec != std::errc() || p != s.data() + s.size() || !class_from_cells(n)) {
    throw Error(ErrorCode::BadLabel, where + ": '" + s + "'");
  }
  return class_from_cells(n);
}

double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw Error(ErrorCode::MalformedRow, where + ": '" + s + "'");
  return v;
}

int parse_int(const std::string& s, const std::string& where) {
  int v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw Error(ErrorCode::MalformedRow, where + ": '" + s + "'");
  return v;
}

constexpr const char* kPatchHeader =
    "sample_id,source,label,offset_x,offset_y,width,height,angle,low_confidence,area,drop_reason";

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

void write_patches(const fs::path& dir, const std::vector<PatchRecord>& kept, const std::vector<PatchDrop>& dropped) {
  fs::create_directories(dir);
  auto out = open_out(dir / "patches.csv");
  out << kPatchHeader << '\n';
  for (const auto& r : kept) {
    const auto& p = r.patch;
    save_pgm(dir / (r.sample_id + ".pgm"), p.image);
    save_mask(dir / (r.sample_id + "_mask.pgm"), p.mask);
    out << r.sample_id << ',' << r.source << ',' << label_text(r.label) << ',' << p.offset.x << ',' << p.offset.y << ','
        << p.source_size.x << ',' << p.source_size.y << ',' << format_double(p.orientation_deg) << ','
        << (p.low_confidence_orientation ? 1 : 0) << ',' << foreground_count(p.mask) << ",\n";
  }
  for (const auto& d : dropped) out << ',' << d.source << ',' << label_text(d.label) << ",,,,,,,," << d.reason << '\n';
  if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + (dir / "patches.csv").string());
}

std::vector<PatchRecord> read_patches(const fs::path& dir) {
  const fs::path csv = dir / "patches.csv";
  std::ifstream in(csv, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, csv.string());
  std::string line;
  if (!std::getline(in, line) || trim_cr(line) != kPatchHeader) {
    throw Error(ErrorCode::MalformedRow, csv.string() + ": unexpected header");
  }
  std::vector<PatchRecord> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim_cr(line);
    if (line.empty()) continue;
    const std::string where = csv.string() + ":" + std::to_string(lineno);
    const auto c = split_csv_line(line);
    if (c.size() != 11) throw Error(ErrorCode::MalformedRow, where);
    if (!c[10].empty()) continue;  // dropped candidate
    PatchRecord r;
    r.sample_id = c[0];
    r.source = c[1];
    r.label = parse_label(c[2], where);
    r.patch.offset = {parse_int(c[3], where), parse_int(c[4], where)};
    r.patch.source_size = {parse_int(c[5], where), parse_int(c[6], where)};
    r.patch.orientation_deg = parse_double(c[7], where);
    r.patch.low_confidence_orientation = c[8] == "1";
    r.patch.source_id = r.source;
    r.patch.image = load_image(dir / (r.sample_id + ".pgm"));
    r.patch.mask = load_mask(dir / (r.sample_id + "_mask.pgm"));
    if (r.patch.mask.width() != r.patch.image.width() || r.patch.mask.height() != r.patch.image.height()) {
      throw Error(ErrorCode::DimensionMismatch, where + ": crop and mask differ in size");
    }
    out.push_back(std::move(r));
  }
  return out;
}

void write_features_csv(const fs::path& path, const std::vector<FeatureRow>& rows) {
  auto out = open_out(path);
  out << "# blocks:";
  for (const auto& b : kFeatureBlocks) {
    char buf[48];
    std::snprintf(buf, sizeof buf, " %.*s=f%03zu..f%03zu", static_cast<int>(b.name.size()), b.name.data(), b.begin,
                  b.begin + b.size - 1);
    out << buf;
  }
  out << "\nsample_id,label";
  for (std::size_t j = 0; j < kFeatureDim; ++j) {
    char buf[8];
    std::snprintf(buf, sizeof buf, ",f%03zu", j);
    out << buf;
  }
  out << '\n';
  for (const auto& r : rows) {
    out << r.sample_id << ',' << label_text(r.label);
    for (double v : r.features) out << ',' << format_double(v);
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path.string());
}

std::vector<FeatureRow> read_features_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  std::string line;
  bool header = false;
  std::vector<FeatureRow> rows;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim_cr(line);
    if (line.empty() || line[0] == '#') continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    const auto c = split_csv_line(line);
    if (c.size() != kFeatureDim + 2) throw Error(ErrorCode::MalformedRow, where + ": expected 217 columns");
    if (!header) {
      if (c[0] != "sample_id" || c[1] != "label") throw Error(ErrorCode::MalformedRow, where + ": bad header");
      header = true;
      continue;
    }
    FeatureRow r;
    r.sample_id = c[0];
    r.label = parse_label(c[1], where);
    for (std::size_t j = 0; j < kFeatureDim; ++j) r.features[j] = parse_double(c[j + 2], where);
    rows.push_back(std::move(r));
  }
  if (!header) throw Error(ErrorCode::MalformedRow, path.string() + ": missing header");
  return rows;
}

LabeledDataset to_dataset(const std::vector<FeatureRow>& rows, const std::string& provenance) {
  LabeledDataset ds(provenance);
  for (const auto& r : rows) {
    if (r.label) ds.add({r.sample_id, r.features, *r.label});
  }
  return ds;
}

nlohmann::json ranking_to_json(const SfsRanking& r, const LChoice& choice) {
  nlohmann::json j;
  j["order"] = r.order;
  j["score_curve"] = r.score_curve;
  j["std_curve"] = r.std_curve;
  // NaN marks an already chosen feature; stored as null.
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& row : r.step_scores) {
    nlohmann::json jr = nlohmann::json::array();
    for (double v : row) jr.push_back(std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v));
    steps.push_back(std::move(jr));
  }
  j["step_scores"] = std::move(steps);
  j["l"] = choice.l;
  j["accuracy"] = choice.accuracy;
  j["std"] = choice.std;
  return j;
}

std::pair<SfsRanking, LChoice> ranking_from_json(const nlohmann::json& j) {
  SfsRanking r;
  LChoice c;
  try {
    r.order = j.at("order").get<std::vector<int>>();
    r.score_curve = j.at("score_curve").get<std::vector<double>>();
    r.std_curve = j.at("std_curve").get<std::vector<double>>();
    if (j.contains("step_scores")) {
      for (const auto& row : j.at("step_scores")) {
        std::vector<double> v;
        for (const auto& x : row) v.push_back(x.is_null() ? std::numeric_limits<double>::quiet_NaN() : x.get<double>());
        r.step_scores.push_back(std::move(v));
      }
    }
    c.l = j.at("l").get<int>();
    c.accuracy = j.at("accuracy").get<double>();
    c.std = j.at("std").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedRow, std::string("ranking: ") + e.what());
  }
  if (c.l < 1 || c.l > static_cast<int>(r.order.size())) throw Error(ErrorCode::MalformedRow, "ranking: l out of range");
  return {r, c};
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path.string());
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedRow, path.string() + ": " + e.what());
  }
}

void write_hoover_csv(const fs::path& path, const HooverCurves& c) {
  auto out = open_out(path);
  out << "tolerance,correct,over_segmented,under_segmented,missed,noise\n";
  for (std::size_t i = 0; i < c.tolerances.size(); ++i) {
    out << format_double(c.tolerances[i]) << ',' << format_double(c.correct[i]) << ','
        << format_double(c.over_segmented[i]) << ',' << format_double(c.under_segmented[i]) << ','
        << format_double(c.missed[i]) << ',' << format_double(c.noise[i]) << '\n';
  }
  if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path.string());
}

void write_counts_csv(const fs::path& path, const std::vector<FrameCount>& counts) {
  auto out = open_out(path);
  out << "source,cells_1,cells_2,cells_4,cells_8,failed,total\n";
  for (const auto& c : counts) {
    int total = c.failed;
    out << c.source;
    for (int n : c.per_class) {
      out << ',' << n;
      total += n;
    }
    out << ',' << c.failed << ',' << total << '\n';
  }
  if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path.string());
}

}  // namespace algaeid
