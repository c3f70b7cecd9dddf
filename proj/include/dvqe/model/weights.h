#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "dvqe/common/error.h"

namespace dvqe {

inline constexpr std::uint32_t kWeightFormatVersion = 1;

struct WeightTensor {
  std::vector<std::int64_t> shape;
  std::vector<float> data;

  std::size_t numel() const;
  bool operator==(const WeightTensor&) const = default;
};

// Named float32 tensors plus the network description they belong to.
class WeightContainer {
 public:
  nlohmann::json unet_spec = nlohmann::json::object();

  void add(const std::string& name, WeightTensor t);
  bool contains(const std::string& name) const { return tensors_.count(name) != 0; }
  const WeightTensor& get(const std::string& name) const;
  // get() plus a shape check; diagnostics name the tensor and both shapes.
  const WeightTensor& get(const std::string& name,
                          const std::vector<std::int64_t>& expected_shape) const;
  WeightTensor& mutable_get(const std::string& name);

  const std::map<std::string, WeightTensor>& tensors() const { return tensors_; }
  std::size_t parameter_count() const;

  bool operator==(const WeightContainer&) const = default;

 private:
  std::map<std::string, WeightTensor> tensors_;
};

enum class WeightFileErrorKind { kBadMagic, kVersion, kCorruptHeader, kOffsetOverlap, kTruncated };

class WeightFileError : public DataError {
 public:
  WeightFileError(WeightFileErrorKind kind, const std::string& what)
      : DataError(what), kind_(kind) {}
  WeightFileErrorKind file_error() const { return kind_; }

 private:
  WeightFileErrorKind kind_;
};

// File layout: "DVQE", u32 version, u64 header length, JSON header, then the
// little-endian float32 payload. Tensors are written in name order.
std::vector<std::uint8_t> serialize_weights(const WeightContainer& w);
WeightContainer deserialize_weights(const std::vector<std::uint8_t>& bytes);

void save_weights(const WeightContainer& w, const std::filesystem::path& path);
WeightContainer load_weights(const std::filesystem::path& path);

}  // namespace dvqe
