#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "protostream/geometry.hpp"

namespace protostream {

// PACF layout, all little-endian:
//   "PACF" | u32 version=1 | u64 count | u32 dim | u8 labeled
//   per record: [i32 label if labeled] dim x f32
inline constexpr std::uint32_t kFeatureFileVersion = 1;
inline constexpr std::size_t kFeatureHeaderBytes = 21;

struct FeatureSet {
  std::uint32_t dim = 0;
  std::vector<Vec> features;
  std::optional<std::vector<std::int32_t>> labels;

  std::size_t size() const { return features.size(); }
};

std::vector<std::uint8_t> encode_features(const FeatureSet& set);
FeatureSet decode_features(std::span<const std::uint8_t> bytes);

FeatureSet read_feature_file(const std::filesystem::path& path);
void write_feature_file(const std::filesystem::path& path, const FeatureSet& set);

}  // namespace protostream
