#include "dvqe/model/unet.h"

#include <cmath>
#include <random>
#include <set>

#include "dvqe/common/error.h"
#include "dvqe/common/rng.h"
#include "dvqe/model/layers.h"

namespace dvqe {

namespace {

constexpr std::size_t kOutputChannels = 2;
constexpr std::size_t kCondInputs = 4;  // Y and X, real and imaginary
constexpr std::size_t kScoreInputs = 3;  // c_in S_t (re, im) and c_noise

const char* to_string(NormKind k) { return k == NormKind::kChannel ? "channel" : "none"; }
const char* to_string(ActivationKind k) {
  return k == ActivationKind::kPrelu ? "prelu" : "identity";
}

}  // namespace

UNetSpec UNetSpec::base() { return UNetSpec{}; }

UNetSpec UNetSpec::small() {
  UNetSpec s;
  s.channels = {11, 15, 21, 29, 40};
  return s;
}

std::vector<std::size_t> UNetSpec::encoder_bins() const {
  std::vector<std::size_t> bins{input_bins};
  for (std::size_t l = 1; l < n_levels(); ++l) {
    bins.push_back((bins.back() + stride_f - 1) / stride_f);
  }
  return bins;
}

void UNetSpec::validate() const {
  if (channels.size() < 1) throw ConfigError("UNetSpec: at least one level required");
  for (std::size_t l = 0; l < channels.size(); ++l) {
    if (channels[l] == 0) throw ConfigError("UNetSpec: zero channel count");
    if (l > 0 && channels[l] <= channels[l - 1]) {
      throw ConfigError("UNetSpec: channels must be strictly increasing");
    }
  }
  if (kernel_t % 2 == 0 || kernel_f % 2 == 0) throw ConfigError("UNetSpec: kernels must be odd");
  if (stride_f < 1) throw ConfigError("UNetSpec: stride must be >= 1");
  if (input_bins == 0) throw ConfigError("UNetSpec: input_bins must be > 0");
  if (input_bins % stride_f != 0) {
    throw ConfigError("UNetSpec: stride " + std::to_string(stride_f) +
                      " does not divide the padded bin count " + std::to_string(input_bins));
  }
}

void to_json(nlohmann::json& j, const UNetSpec& s) {
  j = {{"n_levels", s.n_levels()},
       {"channels", s.channels},
       {"kernel", {s.kernel_t, s.kernel_f}},
       {"stride", {1, s.stride_f}},
       {"input_bins", s.input_bins},
       {"norm", to_string(s.norm)},
       {"activation", to_string(s.activation)},
       {"residual", s.residual},
       {"bias", s.bias},
       {"upsampling", "subpixel"}};
}

void from_json(const nlohmann::json& j, UNetSpec& s) {
  s = UNetSpec{};
  try {
    if (j.contains("channels")) s.channels = j.at("channels").get<std::vector<std::size_t>>();
    if (j.contains("n_levels") && j.at("n_levels").get<std::size_t>() != s.channels.size()) {
      throw ConfigError("UNetSpec: n_levels disagrees with channels");
    }
    if (j.contains("kernel")) {
      s.kernel_t = j.at("kernel").at(0).get<std::size_t>();
      s.kernel_f = j.at("kernel").at(1).get<std::size_t>();
    }
    if (j.contains("stride")) {
      if (j.at("stride").at(0).get<std::size_t>() != 1) {
        throw ConfigError("UNetSpec: time stride must be 1");
      }
      s.stride_f = j.at("stride").at(1).get<std::size_t>();
    }
    s.input_bins = j.value("input_bins", s.input_bins);
    const std::string norm = j.value("norm", std::string("channel"));
    if (norm == "channel") s.norm = NormKind::kChannel;
    else if (norm == "none") s.norm = NormKind::kNone;
    else throw ConfigError("UNetSpec: unknown norm '" + norm + "'");
    const std::string act = j.value("activation", std::string("prelu"));
    if (act == "prelu") s.activation = ActivationKind::kPrelu;
    else if (act == "identity") s.activation = ActivationKind::kIdentity;
    else throw ConfigError("UNetSpec: unknown activation '" + act + "'");
    s.residual = j.value("residual", s.residual);
    s.bias = j.value("bias", s.bias);
    if (j.value("upsampling", std::string("subpixel")) != "subpixel") {
      throw ConfigError("UNetSpec: only subpixel upsampling is supported");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("UNetSpec: ") + e.what());
  }
  s.validate();
}

std::size_t input_channels(const UNetSpec& spec, NetRole role) {
  return role == NetRole::kCond ? kCondInputs : kScoreInputs + spec.channels.front();
}

namespace {

void add_conv(std::vector<ParamShape>& out, const UNetSpec& spec, const std::string& name,
              std::size_t c_out, std::size_t c_in) {
  out.push_back({name + ".conv.weight",
                 {static_cast<std::int64_t>(c_out), static_cast<std::int64_t>(c_in),
                  static_cast<std::int64_t>(spec.kernel_t), static_cast<std::int64_t>(spec.kernel_f)}});
  if (spec.bias) out.push_back({name + ".conv.bias", {static_cast<std::int64_t>(c_out)}});
}

void add_stage(std::vector<ParamShape>& out, const UNetSpec& spec, const std::string& name,
               std::size_t c_out, std::size_t c_in) {
  add_conv(out, spec, name, c_out, c_in);
  const auto c = static_cast<std::int64_t>(c_out);
  if (spec.norm == NormKind::kChannel) {
    out.push_back({name + ".norm.weight", {c}});
    out.push_back({name + ".norm.bias", {c}});
  }
  if (spec.activation == ActivationKind::kPrelu) out.push_back({name + ".act.weight", {c}});
}

}  // namespace

std::vector<ParamShape> unet_parameter_shapes(const UNetSpec& spec, NetRole role,
                                              const std::string& prefix) {
  spec.validate();
  const auto& ch = spec.channels;
  const std::size_t levels = spec.n_levels();
  std::vector<ParamShape> out;
  const std::string p = prefix + ".";
  add_stage(out, spec, p + "input", ch[0], input_channels(spec, role));
  for (std::size_t l = 0; l < levels; ++l) {
    add_stage(out, spec, p + "enc" + std::to_string(l) + ".res", ch[l], ch[l]);
    if (l + 1 < levels) {
      add_stage(out, spec, p + "enc" + std::to_string(l) + ".down", ch[l + 1], ch[l]);
    }
  }
  for (std::size_t l = levels - 1; l >= 1; --l) {
    add_conv(out, spec, p + "dec" + std::to_string(l) + ".up", spec.stride_f * ch[l - 1], ch[l]);
    add_stage(out, spec, p + "dec" + std::to_string(l) + ".fuse", ch[l - 1], 2 * ch[l - 1]);
  }
  add_conv(out, spec, p + "output", kOutputChannels, ch[0]);
  return out;
}

std::size_t unet_parameter_count(const UNetSpec& spec, NetRole role) {
  std::size_t n = 0;
  for (const auto& ps : unet_parameter_shapes(spec, role, "net")) {
    std::size_t m = 1;
    for (auto d : ps.shape) m *= static_cast<std::size_t>(d);
    n += m;
  }
  return n;
}

UNet::UNet(const UNetSpec& spec, const WeightContainer& weights, NetRole role,
           const std::string& prefix)
    : spec_(spec), role_(role) {
  spec_.validate();
  const auto shapes = unet_parameter_shapes(spec_, role, prefix);
  std::set<std::string> expected;
  std::string missing;
  for (const auto& ps : shapes) {
    expected.insert(ps.name);
    if (!weights.contains(ps.name)) missing += (missing.empty() ? "" : ", ") + ps.name;
  }
  if (!missing.empty()) throw DataError("weights are missing tensors: " + missing);
  std::string extra;
  const std::string p = prefix + ".";
  for (const auto& [name, t] : weights.tensors()) {
    if (name.compare(0, p.size(), p) == 0 && !expected.count(name)) {
      extra += (extra.empty() ? "" : ", ") + name;
    }
  }
  if (!extra.empty()) throw DataError("weights contain unexpected tensors: " + extra);

  auto fetch = [&](const std::string& name) -> std::vector<float> {
    for (const auto& ps : shapes) {
      if (ps.name == name) return weights.get(name, ps.shape).data;
    }
    return {};
  };
  auto load_conv = [&](const std::string& name, std::size_t c_out) {
    Conv c;
    c.c_out = c_out;
    c.weight = fetch(name + ".conv.weight");
    if (spec_.bias) c.bias = fetch(name + ".conv.bias");
    return c;
  };
  auto load_stage = [&](const std::string& name, std::size_t c_out) {
    Stage st;
    st.conv = load_conv(name, c_out);
    if (spec_.norm == NormKind::kChannel) {
      st.norm_gain = fetch(name + ".norm.weight");
      st.norm_bias = fetch(name + ".norm.bias");
    }
    if (spec_.activation == ActivationKind::kPrelu) st.act_slope = fetch(name + ".act.weight");
    return st;
  };

  const auto& ch = spec_.channels;
  const std::size_t levels = spec_.n_levels();
  input_ = load_stage(p + "input", ch[0]);
  for (std::size_t l = 0; l < levels; ++l) {
    res_.push_back(load_stage(p + "enc" + std::to_string(l) + ".res", ch[l]));
    if (l + 1 < levels) down_.push_back(load_stage(p + "enc" + std::to_string(l) + ".down", ch[l + 1]));
  }
  up_.resize(levels);
  fuse_.resize(levels);
  for (std::size_t l = 1; l < levels; ++l) {
    up_[l] = load_conv(p + "dec" + std::to_string(l) + ".up", spec_.stride_f * ch[l - 1]);
    fuse_[l] = load_stage(p + "dec" + std::to_string(l) + ".fuse", ch[l - 1]);
  }
  output_ = load_conv(p + "output", kOutputChannels);
}

Tensor3 UNet::run_conv(const Conv& c, const Tensor3& x, std::size_t stride) const {
  return conv2d(x, c.weight, c.bias, c.c_out, spec_.kernel_t, spec_.kernel_f, stride);
}

Tensor3 UNet::run(const Stage& st, const Tensor3& x, std::size_t stride) const {
  Tensor3 y = run_conv(st.conv, x, stride);
  if (spec_.norm == NormKind::kChannel) channel_norm(y, st.norm_gain, st.norm_bias);
  if (spec_.activation == ActivationKind::kPrelu) prelu(y, st.act_slope);
  return y;
}

UNetOutput UNet::forward(const Tensor3& input) const {
  const std::size_t want = input_channels(spec_, role_);
  if (input.channels() != want || input.freq() != spec_.input_bins) {
    throw ConfigError("UNet input " + input.shape_string() + " does not match expected (" +
                      std::to_string(want) + ", T, " + std::to_string(spec_.input_bins) + ")");
  }
  if (input.time() == 0) throw ConfigError("UNet input has no frames");
  const std::size_t levels = spec_.n_levels();
  UNetOutput out;
  std::vector<Tensor3> skips(levels);
  Tensor3 x = run(input_, input, 1);
  for (std::size_t l = 0; l < levels; ++l) {
    Tensor3 r = run(res_[l], x, 1);
    if (spec_.residual) {
      auto rd = r.data();
      auto xd = x.data();
      for (std::size_t i = 0; i < rd.size(); ++i) rd[i] += xd[i];
    }
    out.encoder_bins.push_back(r.freq());
    if (l + 1 < levels) {
      skips[l] = r;
      x = run(down_[l], r, spec_.stride_f);
    } else {
      x = std::move(r);
    }
  }
  for (std::size_t l = levels - 1; l >= 1; --l) {
    Tensor3 up = subpixel_upsample(run_conv(up_[l], x, 1), spec_.stride_f);
    up = fit_freq(up, skips[l - 1].freq());
    x = run(fuse_[l], concat_channels(up, skips[l - 1]), 1);
    out.decoder_bins.push_back(x.freq());
  }
  out.output = run_conv(output_, x, 1);
  out.features = std::move(x);
  return out;
}

WeightContainer init_weights(const UNetSpec& spec, std::uint64_t seed) {
  WeightContainer w;
  w.unet_spec = spec;
  std::uint64_t index = 0;
  for (auto role : {NetRole::kCond, NetRole::kScore}) {
    const std::string prefix = role == NetRole::kCond ? "cond" : "score";
    for (const auto& ps : unet_parameter_shapes(spec, role, prefix)) {
      Rng rng = derive_rng(seed, index++);
      WeightTensor t;
      t.shape = ps.shape;
      t.data.resize(t.numel());
      const auto ends_with = [&](const std::string& suffix) {
        return ps.name.size() >= suffix.size() &&
               ps.name.compare(ps.name.size() - suffix.size(), suffix.size(), suffix) == 0;
      };
      if (ends_with(".conv.weight")) {
        const double fan_in = static_cast<double>(ps.shape[1] * ps.shape[2] * ps.shape[3]);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        const double bound = std::sqrt(3.0 / fan_in);
        for (float& v : t.data) v = static_cast<float>(bound * u(rng));
      } else if (ends_with(".norm.weight")) {
        std::fill(t.data.begin(), t.data.end(), 1.0f);
      } else if (ends_with(".act.weight")) {
        std::fill(t.data.begin(), t.data.end(), 0.25f);
      }
      w.add(ps.name, std::move(t));
    }
  }
  return w;
}

}  // namespace dvqe
