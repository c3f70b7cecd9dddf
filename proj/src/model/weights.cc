#include "dvqe/model/weights.h"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace dvqe {

namespace {

constexpr char kMagic[4] = {'D', 'V', 'Q', 'E'};
constexpr std::size_t kPreambleBytes = 4 + 4 + 8;

std::string shape_str(const std::vector<std::int64_t>& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

template <typename T>
T get_le(const std::uint8_t* p) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(p[i]) << (8 * i);
  return v;
}

}  // namespace

std::size_t WeightTensor::numel() const {
  std::size_t n = 1;
  for (auto d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

void WeightContainer::add(const std::string& name, WeightTensor t) {
  if (name.empty()) throw ConfigError("weight tensor name must not be empty");
  for (auto d : t.shape) {
    if (d <= 0) throw ConfigError("weight tensor '" + name + "' has non-positive dimension");
  }
  if (t.numel() != t.data.size()) {
    throw ConfigError("weight tensor '" + name + "': shape " + shape_str(t.shape) +
                      " does not match " + std::to_string(t.data.size()) + " values");
  }
  if (!tensors_.emplace(name, std::move(t)).second) {
    throw ConfigError("duplicate weight tensor '" + name + "'");
  }
}

const WeightTensor& WeightContainer::get(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw DataError("missing weight tensor '" + name + "'");
  return it->second;
}

const WeightTensor& WeightContainer::get(const std::string& name,
                                         const std::vector<std::int64_t>& expected) const {
  const WeightTensor& t = get(name);
  if (t.shape != expected) {
    throw DataError("weight tensor '" + name + "' has shape " + shape_str(t.shape) +
                    ", expected " + shape_str(expected));
  }
  return t;
}

WeightTensor& WeightContainer::mutable_get(const std::string& name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw DataError("missing weight tensor '" + name + "'");
  return it->second;
}

std::size_t WeightContainer::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : tensors_) n += t.data.size();
  return n;
}

std::vector<std::uint8_t> serialize_weights(const WeightContainer& w) {
  nlohmann::json header;
  header["format_version"] = kWeightFormatVersion;
  header["unet_spec"] = w.unet_spec;
  header["dtype"] = "float32";
  header["byte_order"] = "little";
  nlohmann::json entries = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : w.tensors()) {
    const std::uint64_t nbytes = t.data.size() * 4;
    entries.push_back({{"name", name}, {"shape", t.shape}, {"offset", offset}, {"nbytes", nbytes}});
    offset += nbytes;
  }
  header["tensors"] = std::move(entries);
  const std::string text = header.dump();

  std::vector<std::uint8_t> out;
  out.reserve(kPreambleBytes + text.size() + offset);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_le<std::uint32_t>(out, kWeightFormatVersion);
  put_le<std::uint64_t>(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& [name, t] : w.tensors()) {
    for (float v : t.data) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

WeightContainer deserialize_weights(const std::vector<std::uint8_t>& bytes) {
  using K = WeightFileErrorKind;
  if (bytes.size() < kPreambleBytes || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw WeightFileError(K::kBadMagic, "weight file: missing DVQE magic");
  }
  const auto version = get_le<std::uint32_t>(bytes.data() + 4);
  if (version != kWeightFormatVersion) {
    throw WeightFileError(K::kVersion, "weight file: unsupported format version " +
                                           std::to_string(version) + " (expected " +
                                           std::to_string(kWeightFormatVersion) + ")");
  }
  const auto header_len = get_le<std::uint64_t>(bytes.data() + 8);
  if (header_len > bytes.size() - kPreambleBytes) {
    throw WeightFileError(K::kTruncated, "weight file: header length " +
                                             std::to_string(header_len) + " exceeds file size");
  }
  const auto* header_begin = reinterpret_cast<const char*>(bytes.data() + kPreambleBytes);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_begin, header_begin + header_len);
  } catch (const nlohmann::json::exception& e) {
    throw WeightFileError(K::kCorruptHeader, std::string("weight file: corrupt header: ") + e.what());
  }

  WeightContainer w;
  struct Span {
    std::uint64_t begin, end;
    std::string name;
  };
  std::vector<Span> spans;
  const std::size_t payload_begin = kPreambleBytes + header_len;
  const std::uint64_t payload_size = bytes.size() - payload_begin;
  try {
    if (header.at("format_version").get<std::uint32_t>() != version) {
      throw WeightFileError(K::kVersion, "weight file: header version disagrees with preamble");
    }
    w.unet_spec = header.value("unet_spec", nlohmann::json::object());
    for (const auto& e : header.at("tensors")) {
      WeightTensor t;
      const auto name = e.at("name").get<std::string>();
      t.shape = e.at("shape").get<std::vector<std::int64_t>>();
      const auto offset = e.at("offset").get<std::uint64_t>();
      const auto nbytes = e.at("nbytes").get<std::uint64_t>();
      for (auto d : t.shape) {
        if (d <= 0) throw WeightFileError(K::kCorruptHeader, "weight file: tensor '" + name + "' has non-positive dimension");
      }
      if (nbytes != t.numel() * 4) {
        throw WeightFileError(K::kCorruptHeader, "weight file: tensor '" + name + "' byte size " +
                                                     std::to_string(nbytes) + " disagrees with shape " +
                                                     shape_str(t.shape));
      }
      if (offset > payload_size || nbytes > payload_size - offset) {
        throw WeightFileError(K::kTruncated, "weight file: payload truncated inside tensor '" + name + "'");
      }
      spans.push_back({offset, offset + nbytes, name});
      t.data.resize(t.numel());
      const std::uint8_t* p = bytes.data() + payload_begin + offset;
      for (std::size_t i = 0; i < t.data.size(); ++i) {
        t.data[i] = std::bit_cast<float>(get_le<std::uint32_t>(p + 4 * i));
      }
      try {
        w.add(name, std::move(t));
      } catch (const ConfigError& err) {
        throw WeightFileError(K::kCorruptHeader, std::string("weight file: ") + err.what());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw WeightFileError(K::kCorruptHeader, std::string("weight file: corrupt header: ") + e.what());
  }
  std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) { return a.begin < b.begin; });
  for (std::size_t i = 1; i < spans.size(); ++i) {
    if (spans[i].begin < spans[i - 1].end) {
      throw WeightFileError(K::kOffsetOverlap, "weight file: tensors '" + spans[i - 1].name + "' and '" +
                                                   spans[i].name + "' overlap");
    }
  }
  return w;
}

void save_weights(const WeightContainer& w, const std::filesystem::path& path) {
  const auto bytes = serialize_weights(w);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing " + path.string());
}

WeightContainer load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open weight file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_weights(bytes);
}

}  // namespace dvqe
