#include "protostream/feature_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "protostream/error.hpp"

namespace protostream {

namespace {

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
    if (bytes_.size() - pos_ < sizeof(T)) {
      throw Error(ErrorKind::TruncatedFile, "unexpected end of data at byte " + std::to_string(pos_));
    }
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bits |= static_cast<U>(static_cast<U>(bytes_[pos_ + i]) << (8 * i));
    }
    pos_ += sizeof(T);
    return std::bit_cast<T>(bits);
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_features(const FeatureSet& set) {
  if (set.labels && set.labels->size() != set.features.size()) {
    throw Error(ErrorKind::LengthMismatch, "label count differs from feature count");
  }
  std::vector<std::uint8_t> out;
  const bool labeled = set.labels.has_value();
  out.reserve(kFeatureHeaderBytes + set.size() * (4 * labeled + 4 * std::size_t{set.dim}));
  out.insert(out.end(), {'P', 'A', 'C', 'F'});
  put(out, kFeatureFileVersion);
  put(out, static_cast<std::uint64_t>(set.size()));
  put(out, set.dim);
  put(out, static_cast<std::uint8_t>(labeled ? 1 : 0));
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (set.features[i].size() != set.dim) {
      throw Error(ErrorKind::DimMismatch, "record " + std::to_string(i) + " has length " +
                                              std::to_string(set.features[i].size()));
    }
    if (labeled) put(out, (*set.labels)[i]);
    for (double x : set.features[i]) put(out, static_cast<float>(x));
  }
  return out;
}

FeatureSet decode_features(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw Error(ErrorKind::TruncatedFile, "missing magic");
  if (std::memcmp(bytes.data(), "PACF", 4) != 0) throw Error(ErrorKind::BadMagic, "not a PACF file");
  Reader reader(bytes.subspan(4));
  const auto version = reader.get<std::uint32_t>();
  if (version != kFeatureFileVersion) {
    throw Error(ErrorKind::BadVersion, "unsupported PACF version " + std::to_string(version));
  }
  const auto count = reader.get<std::uint64_t>();
  FeatureSet set;
  set.dim = reader.get<std::uint32_t>();
  const auto flag = reader.get<std::uint8_t>();
  if (flag > 1) throw Error(ErrorKind::BadVersion, "labeled flag must be 0 or 1");
  const bool labeled = flag == 1;

  const std::uint64_t record_bytes = 4ull * labeled + 4ull * set.dim;
  if (record_bytes == 0 && count > 0) throw Error(ErrorKind::DimMismatch, "zero-width records");
  const std::uint64_t have = reader.remaining();
  if (record_bytes > 0 && have / record_bytes < count) {
    throw Error(ErrorKind::TruncatedFile, "header declares " + std::to_string(count) +
                                              " records, data holds " +
                                              std::to_string(have / record_bytes));
  }
  if (have != count * record_bytes) {
    throw Error(ErrorKind::DimMismatch, "trailing bytes after " + std::to_string(count) + " records");
  }

  if (labeled) set.labels.emplace().reserve(count);
  set.features.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    if (labeled) set.labels->push_back(reader.get<std::int32_t>());
    Vec v(set.dim);
    for (double& x : v) x = static_cast<double>(reader.get<float>());
    set.features.push_back(std::move(v));
  }
  return set;
}

FeatureSet read_feature_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_features(bytes);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + " (" + e.what() + ")");
  }
}

void write_feature_file(const std::filesystem::path& path, const FeatureSet& set) {
  const auto bytes = encode_features(set);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "short write to " + path.string());
}

}  // namespace protostream
