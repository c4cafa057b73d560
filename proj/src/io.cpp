#include "algaeid/io.hpp"

#include <png.h>

#include <array>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace algaeid {

namespace fs = std::filesystem;

namespace {

std::vector<unsigned char> read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Parses one unsigned header token, skipping whitespace and '#' comments.
bool next_header_int(const std::vector<unsigned char>& buf, std::size_t& pos, long& out) {
  for (;;) {
    while (pos < buf.size() && std::isspace(buf[pos])) ++pos;
    if (pos < buf.size() && buf[pos] == '#') {
      while (pos < buf.size() && buf[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  if (pos >= buf.size() || !std::isdigit(buf[pos])) return false;
  long v = 0;
  while (pos < buf.size() && std::isdigit(buf[pos])) {
    v = v * 10 + (buf[pos] - '0');
    if (v > 1'000'000'000L) return false;
    ++pos;
  }
  out = v;
  return true;
}

GrayImage decode_pgm(const std::vector<unsigned char>& buf, const fs::path& path) {
  if (buf[1] != '5') throw Error(ErrorCode::UnsupportedFormat, path.string() + ": only binary P5 PGM is supported");
  std::size_t pos = 2;
  long w = 0, h = 0, maxval = 0;
  if (!next_header_int(buf, pos, w) || !next_header_int(buf, pos, h) || !next_header_int(buf, pos, maxval)) {
    throw Error(ErrorCode::CorruptHeader, path.string());
  }
  if (w < 1 || h < 1 || maxval < 1) throw Error(ErrorCode::CorruptHeader, path.string());
  if (maxval > 255) throw Error(ErrorCode::UnsupportedFormat, path.string() + ": maxval " + std::to_string(maxval));
  if (pos >= buf.size() || !std::isspace(buf[pos])) throw Error(ErrorCode::CorruptHeader, path.string());
  ++pos;
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (buf.size() - pos < n) throw Error(ErrorCode::CorruptHeader, path.string() + ": truncated pixel data");
  std::vector<std::uint8_t> data(buf.begin() + static_cast<std::ptrdiff_t>(pos),
                                 buf.begin() + static_cast<std::ptrdiff_t>(pos + n));
  if (maxval != 255) {
    for (auto& v : data) {
      if (v > maxval) throw Error(ErrorCode::CorruptHeader, path.string() + ": sample exceeds maxval");
      v = static_cast<std::uint8_t>((v * 255 + maxval / 2) / maxval);
    }
  }
  return GrayImage(static_cast<int>(w), static_cast<int>(h), std::move(data));
}

GrayImage decode_png(const std::vector<unsigned char>& buf, const fs::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, buf.data(), buf.size())) {
    throw Error(ErrorCode::CorruptHeader, path.string() + ": " + image.message);
  }
  if (image.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&image);
    throw Error(ErrorCode::UnsupportedFormat, path.string() + ": 16-bit PNG");
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> raw(PNG_IMAGE_SIZE(image));
  png_color background{255, 255, 255};
  if (!png_image_finish_read(&image, &background, raw.data(), 0, nullptr)) {
    throw Error(ErrorCode::CorruptHeader, path.string() + ": " + image.message);
  }
  const int w = static_cast<int>(image.width);
  const int h = static_cast<int>(image.height);
  if (!color) return GrayImage(w, h, std::move(raw));
  std::vector<std::uint8_t> gray(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  for (std::size_t i = 0; i < gray.size(); ++i) {
    gray[i] = luminance_bt601(raw[3 * i], raw[3 * i + 1], raw[3 * i + 2]);
  }
  return GrayImage(w, h, std::move(gray));
}

std::string trim_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace

std::uint8_t luminance_bt601(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  // Integer form of floor(0.299 r + 0.587 g + 0.114 b + 0.5); exact, no FP drift.
  const int scaled = 299 * r + 587 * g + 114 * b;
  return static_cast<std::uint8_t>((scaled + 500) / 1000);
}

GrayImage load_image(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::FileNotFound, path.string());
  const auto buf = read_all(path);
  if (buf.size() >= 2 && buf[0] == 'P' && std::isdigit(buf[1])) return decode_pgm(buf, path);
  static constexpr std::array<unsigned char, 8> kPngSig{0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  if (buf.size() >= 8 && std::equal(kPngSig.begin(), kPngSig.end(), buf.begin())) return decode_png(buf, path);
  throw Error(ErrorCode::UnsupportedFormat, path.string());
}

void save_pgm(const fs::path& path, const GrayImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels().data()), static_cast<std::streamsize>(img.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
}

void save_mask(const fs::path& path, const BinaryMask& mask) {
  GrayImage img(mask.width(), mask.height());
  auto dst = img.pixels();
  auto src = mask.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] ? 255 : 0;
  save_pgm(path, img);
}

BinaryMask load_mask(const fs::path& path) {
  const GrayImage img = load_image(path);
  BinaryMask mask(img.width(), img.height());
  auto dst = mask.pixels();
  auto src = img.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] != 0;
  return mask;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  cells.push_back(std::move(cur));
  return cells;
}

std::vector<ManifestRow> read_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  const fs::path base = path.parent_path();
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::MalformedRow, path.string() + ": missing header");
  line = trim_cr(line);
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  if (line != "path,label") throw Error(ErrorCode::MalformedRow, path.string() + ": header must be 'path,label'");

  std::vector<ManifestRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim_cr(line);
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 2 || cells[0].empty()) {
      throw Error(ErrorCode::MalformedRow, path.string() + ":" + std::to_string(lineno));
    }
    ManifestRow row;
    const fs::path p(cells[0]);
    row.path = p.is_absolute() ? p : base / p;
    if (!cells[1].empty()) {
      int n = 0;
      std::istringstream ss(cells[1]);
      if (!(ss >> n) || !ss.eof() || !class_from_cells(n)) {
        throw Error(ErrorCode::BadLabel, path.string() + ":" + std::to_string(lineno) + ": '" + cells[1] + "'");
      }
      row.label = class_from_cells(n);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_manifest(const fs::path& path, const std::vector<ManifestRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  const fs::path base = path.parent_path();
  out << "path,label\n";
  for (const auto& row : rows) {
    fs::path p = row.path;
    if (!base.empty()) {
      const auto rel = p.lexically_relative(base);
      if (!rel.empty() && *rel.begin() != "..") p = rel;
    }
    out << p.generic_string() << ',';
    if (row.label) out << cells(*row.label);
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
}

}  // namespace algaeid
