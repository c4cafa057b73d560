#include "algaeid/model_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "algaeid/error.hpp"

namespace algaeid {

namespace {

class Writer {
 public:
  template <typename T>
  void put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::uint8_t b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    bytes.insert(bytes.end(), b, b + sizeof(T));
  }
  void f64(double v) { put(v); }
  void u8(std::uint8_t v) { put(v); }
  void u32(std::uint32_t v) { put(v); }

  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& b, std::size_t pos, std::size_t end) : b_(b), pos_(pos), end_(end) {}

  template <typename T>
  T get() {
    if (end_ - pos_ < sizeof(T)) throw Error(ErrorCode::BadModelFile, "model file truncated");
    std::uint8_t tmp[sizeof(T)];
    std::memcpy(tmp, b_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(tmp, tmp + sizeof(T));
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, tmp, sizeof(T));
    return v;
  }
  double f64() { return get<double>(); }
  std::uint8_t u8() { return get<std::uint8_t>(); }
  std::uint32_t u32() { return get<std::uint32_t>(); }
  /// Guards counts read from the file before allocating.
  std::uint32_t count(std::size_t bytes_each) {
    const std::uint32_t n = u32();
    if (bytes_each > 0 && n > (end_ - pos_) / bytes_each) throw Error(ErrorCode::BadModelFile, "count exceeds file size");
    return n;
  }
  bool done() const { return pos_ == end_; }

 private:
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_;
  std::size_t end_;
};

LabelClass label_from_byte(std::uint8_t v) {
  const auto c = class_from_cells(v);
  if (!c) throw Error(ErrorCode::BadModelFile, "invalid class label in model");
  return *c;
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const TrainedModel& m) {
  Writer body;
  const bool svm = std::holds_alternative<SvmModel>(m.payload);
  body.u8(svm ? 0 : 1);
  const auto dim = static_cast<std::uint32_t>(m.selected.size());
  body.u32(dim);
  for (int s : m.selected) body.u32(static_cast<std::uint32_t>(s));
  for (Eigen::Index i = 0; i < m.standardizer.dim(); ++i) body.f64(m.standardizer.mean()(i));
  for (Eigen::Index i = 0; i < m.standardizer.dim(); ++i) body.f64(m.standardizer.std()(i));
  if (svm) {
    const auto& s = std::get<SvmModel>(m.payload);
    body.u8(s.config.kernel == KernelKind::Linear ? 0 : 1);
    body.f64(s.config.C);
    body.f64(s.config.gamma);
    body.f64(s.config.tol);
    body.put<std::int64_t>(s.config.max_iter);
    body.u8(static_cast<std::uint8_t>(s.classes.size()));
    for (LabelClass c : s.classes) body.u8(static_cast<std::uint8_t>(cells(c)));
    body.u32(static_cast<std::uint32_t>(s.machines.size()));
    for (const auto& mach : s.machines) {
      body.u8(static_cast<std::uint8_t>(cells(mach.positive)));
      body.u8(static_cast<std::uint8_t>(cells(mach.negative)));
      body.f64(mach.bias);
      body.u32(static_cast<std::uint32_t>(mach.support.rows()));
      for (Eigen::Index r = 0; r < mach.support.rows(); ++r) {
        body.f64(mach.coef(r));
        for (Eigen::Index c = 0; c < mach.support.cols(); ++c) body.f64(mach.support(r, c));
      }
    }
  } else {
    const auto& a = std::get<MlpModel>(m.payload);
    body.u32(static_cast<std::uint32_t>(a.in));
    body.u32(static_cast<std::uint32_t>(a.tau));
    body.u32(static_cast<std::uint32_t>(a.theta.size()));
    for (Eigen::Index i = 0; i < a.theta.size(); ++i) body.f64(a.theta(i));
  }

  Writer out;
  for (char c : kModelMagic) out.u8(static_cast<std::uint8_t>(c));
  out.put<std::uint16_t>(kModelFormatVersion);
  out.put<std::uint64_t>(body.bytes.size());
  out.bytes.insert(out.bytes.end(), body.bytes.begin(), body.bytes.end());
  return out.bytes;
}

TrainedModel deserialize_model(const std::vector<std::uint8_t>& bytes) {
  constexpr std::size_t kHeader = 4 + 2 + 8;
  if (bytes.size() < kHeader || std::memcmp(bytes.data(), kModelMagic, 4) != 0) {
    throw Error(ErrorCode::BadModelFile, "missing CNSC magic");
  }
  Reader head(bytes, 4, kHeader);
  const auto version = head.get<std::uint16_t>();
  if (version != kModelFormatVersion) throw Error(ErrorCode::BadModelFile, "unsupported model format version " + std::to_string(version));
  const auto length = head.get<std::uint64_t>();
  if (length != bytes.size() - kHeader) throw Error(ErrorCode::BadModelFile, "body length does not match file size");
  Reader r(bytes, kHeader, bytes.size());

  TrainedModel m;
  const std::uint8_t kind = r.u8();
  if (kind > 1) throw Error(ErrorCode::BadModelFile, "unknown classifier kind");
  const std::uint32_t dim = r.count(4 + 16);
  if (dim == 0) throw Error(ErrorCode::BadModelFile, "model selects no features");
  for (std::uint32_t i = 0; i < dim; ++i) {
    const std::uint32_t s = r.u32();
    if (s >= kFeatureDim) throw Error(ErrorCode::BadModelFile, "selected index out of range");
    m.selected.push_back(static_cast<int>(s));
  }
  Eigen::VectorXd mean(dim), sd(dim);
  for (std::uint32_t i = 0; i < dim; ++i) mean(i) = r.f64();
  for (std::uint32_t i = 0; i < dim; ++i) sd(i) = r.f64();
  try {
    m.standardizer = Standardizer(mean, sd);
  } catch (const Error& e) {
    throw Error(ErrorCode::BadModelFile, std::string("bad standardizer: ") + e.what());
  }

  if (kind == 0) {
    SvmModel s;
    s.dim = dim;
    const std::uint8_t kernel = r.u8();
    if (kernel > 1) throw Error(ErrorCode::BadModelFile, "unknown kernel");
    s.config.kernel = kernel == 0 ? KernelKind::Linear : KernelKind::Rbf;
    s.config.C = r.f64();
    s.config.gamma = r.f64();
    s.config.tol = r.f64();
    s.config.max_iter = r.get<std::int64_t>();
    const std::uint8_t nc = r.u8();
    if (nc < 2 || nc > kNumClasses) throw Error(ErrorCode::BadModelFile, "invalid class count");
    for (std::uint8_t i = 0; i < nc; ++i) s.classes.push_back(label_from_byte(r.u8()));
    const std::uint32_t nm = r.count(2 + 8 + 4);
    if (nm != static_cast<std::uint32_t>(nc * (nc - 1) / 2)) throw Error(ErrorCode::BadModelFile, "machine count does not match classes");
    for (std::uint32_t k = 0; k < nm; ++k) {
      BinarySvm b{label_from_byte(r.u8()), label_from_byte(r.u8()), {}, {}, 0.0};
      b.bias = r.f64();
      const std::uint32_t nsv = r.count(8 * (static_cast<std::size_t>(dim) + 1));
      b.support.resize(nsv, dim);
      b.coef.resize(nsv);
      for (std::uint32_t row = 0; row < nsv; ++row) {
        b.coef(row) = r.f64();
        for (std::uint32_t c = 0; c < dim; ++c) b.support(row, c) = r.f64();
      }
      s.machines.push_back(std::move(b));
    }
    m.payload = std::move(s);
  } else {
    MlpModel a;
    a.in = static_cast<int>(r.u32());
    a.tau = static_cast<int>(r.u32());
    if (a.in != static_cast<int>(dim) || a.tau < 1 || a.tau > 100000) throw Error(ErrorCode::BadModelFile, "network shape inconsistent");
    const std::uint32_t np = r.count(8);
    if (np != MlpModel::parameter_count(a.in, a.tau)) throw Error(ErrorCode::BadModelFile, "parameter count inconsistent");
    a.theta.resize(np);
    for (std::uint32_t i = 0; i < np; ++i) a.theta(i) = r.f64();
    m.payload = std::move(a);
  }
  if (!r.done()) throw Error(ErrorCode::BadModelFile, "trailing bytes after payload");
  return m;
}

void save_model(const TrainedModel& m, const std::filesystem::path& path) {
  const auto bytes = serialize_model(m);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::FileNotFound, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace algaeid
