#include <cmath>

#include "algaeid/features.hpp"

namespace algaeid {

namespace {

template <std::size_t N, typename F>
void fill_block(FeatureVector& out, std::string_view name, F&& compute) {
  std::array<double, N> values;
  try {
    values = compute();
  } catch (const FeatureError&) {
    throw;
  } catch (const Error& e) {
    throw FeatureError(std::string(name), e);
  }
  std::size_t begin = 0;
  for (const auto& b : kFeatureBlocks) {
    if (b.name == name) begin = b.begin;
  }
  for (std::size_t i = 0; i < N; ++i) {
    if (!std::isfinite(values[i])) {
      throw FeatureError(std::string(name), Error(ErrorCode::NonFiniteFeature, "index " + std::to_string(begin + i)));
    }
    out[begin + i] = values[i];
  }
}

void extract_one(const std::vector<RegionPatch>& patches, std::size_t i, BatchResult& r) {
  try {
    r.features[i] = extract_all(patches[i]);
  } catch (const Error& e) {
    r.errors[i] = e.what();
  }
}

}  // namespace

FeatureVector extract_all(const RegionPatch& patch) {
  FeatureVector v{};
  fill_block<7>(v, "hu", [&] { return hu_moments(patch); });
  fill_block<81>(v, "hog", [&] { return hog_descriptor(patch); });
  fill_block<40>(v, "zernike", [&] { return zernike_moments(patch); });
  fill_block<59>(v, "lbp", [&] { return lbp_histogram(patch); });
  fill_block<28>(v, "haralick", [&] { return haralick_features(patch); });
  return v;
}

BatchResult extract_batch(const std::vector<RegionPatch>& patches) {
  BatchResult r;
  r.features.resize(patches.size());
  r.errors.resize(patches.size());
  const auto n = static_cast<std::ptrdiff_t>(patches.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) extract_one(patches, static_cast<std::size_t>(i), r);
  return r;
}

BatchResult extract_batch_serial(const std::vector<RegionPatch>& patches) {
  BatchResult r;
  r.features.resize(patches.size());
  r.errors.resize(patches.size());
  for (std::size_t i = 0; i < patches.size(); ++i) extract_one(patches, i, r);
  return r;
}

}  // namespace algaeid
