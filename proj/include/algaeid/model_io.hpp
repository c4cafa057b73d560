#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "algaeid/classifier.hpp"

namespace algaeid {

inline constexpr char kModelMagic[4] = {'C', 'N', 'S', 'C'};
inline constexpr std::uint16_t kModelFormatVersion = 1;

/// Byte layout documented in docs/model_format.md; all integers little-endian.
std::vector<std::uint8_t> serialize_model(const TrainedModel& m);
/// Throws BadModelFile on wrong magic, unknown version, truncation or inconsistent sizes.
TrainedModel deserialize_model(const std::vector<std::uint8_t>& bytes);

void save_model(const TrainedModel& m, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace algaeid
