#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dvqe/common/tensor.h"
#include "dvqe/model/weights.h"

namespace dvqe {

enum class NormKind { kChannel, kNone };
enum class ActivationKind { kPrelu, kIdentity };

// U-Net layout shared by the Cond and Score networks. Level 0 runs at the
// padded bin count; each further level halves frequency with stride (1, 2).
struct UNetSpec {
  std::vector<std::size_t> channels = {11, 16, 23, 33, 50};
  std::size_t kernel_t = 3;
  std::size_t kernel_f = 5;
  std::size_t stride_f = 2;
  std::size_t input_bins = 260;
  NormKind norm = NormKind::kChannel;
  ActivationKind activation = ActivationKind::kPrelu;
  bool residual = true;
  bool bias = true;

  static UNetSpec base();
  static UNetSpec small();

  std::size_t n_levels() const { return channels.size(); }
  // Frequency size at every encoder level (ceil division per level).
  std::vector<std::size_t> encoder_bins() const;
  void validate() const;
  bool operator==(const UNetSpec&) const = default;
};

void to_json(nlohmann::json& j, const UNetSpec& s);
void from_json(const nlohmann::json& j, UNetSpec& s);

// Cond maps (Y, X) to S_cond; Score maps (c_in S_t, c_noise, C) to the raw
// denoiser output, with C the Cond decoder's last feature map.
enum class NetRole { kCond, kScore };

std::size_t input_channels(const UNetSpec& spec, NetRole role);

struct ParamShape {
  std::string name;
  std::vector<std::int64_t> shape;
};

// Every tensor of one network, names prefixed with "<prefix>.".
std::vector<ParamShape> unet_parameter_shapes(const UNetSpec& spec, NetRole role,
                                              const std::string& prefix);
// Parameter count of one network.
std::size_t unet_parameter_count(const UNetSpec& spec, NetRole role);

struct UNetOutput {
  Tensor3 output;    // 2 channels: real and imaginary parts
  Tensor3 features;  // level-0 decoder features before the output convolution
  std::vector<std::size_t> encoder_bins;
  std::vector<std::size_t> decoder_bins;
};

// Read-only forward engine over one network of a WeightContainer.
class UNet {
 public:
  // Validates every expected tensor (name and shape) and rejects extras
  // carrying the same prefix.
  UNet(const UNetSpec& spec, const WeightContainer& weights, NetRole role,
       const std::string& prefix);

  const UNetSpec& spec() const { return spec_; }
  NetRole role() const { return role_; }

  // Input: [input_channels][frames][input_bins].
  UNetOutput forward(const Tensor3& input) const;

 private:
  struct Conv {
    std::vector<float> weight, bias;
    std::size_t c_out = 0;
  };
  struct Stage {
    Conv conv;
    std::vector<float> norm_gain, norm_bias, act_slope;
  };
  Tensor3 run(const Stage& st, const Tensor3& x, std::size_t stride) const;
  Tensor3 run_conv(const Conv& c, const Tensor3& x, std::size_t stride) const;

  UNetSpec spec_;
  NetRole role_;
  Stage input_;
  std::vector<Stage> res_;   // levels 0 .. L-1 (last is the bottleneck)
  std::vector<Stage> down_;  // transitions 1 .. L-1
  std::vector<Conv> up_;     // decoder levels 1 .. L-1
  std::vector<Stage> fuse_;
  Conv output_;
};

// Deterministic random initialization of both networks ("cond." and "score.").
WeightContainer init_weights(const UNetSpec& spec, std::uint64_t seed);

}  // namespace dvqe
