#include <cmath>
#include <cstring>
#include <numeric>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "dvqe/common/error.h"
#include "dvqe/diffusion/precondition.h"
#include "dvqe/model/diffvqe.h"
#include "dvqe/model/layers.h"
#include "dvqe/model/toy_scorer.h"
#include "dvqe/model/unet.h"
#include "dvqe/model/weights.h"
#include "test_support.h"

namespace dvqe {
namespace {

Tensor3 random_tensor(std::size_t c, std::size_t t, std::size_t f, std::uint64_t seed) {
  Tensor3 x(c, t, f);
  Rng rng = derive_rng(seed, 0);
  std::normal_distribution<float> g(0.0f, 1.0f);
  for (float& v : x.data()) v = g(rng);
  return x;
}

std::vector<float> random_vec(std::size_t n, std::uint64_t seed) {
  Rng rng = derive_rng(seed, 1);
  std::normal_distribution<float> g(0.0f, 1.0f);
  std::vector<float> v(n);
  for (float& x : v) x = g(rng);
  return v;
}

// Direct summation over the kernel with implicit zero padding.
Tensor3 naive_conv(const Tensor3& in, const std::vector<float>& w, const std::vector<float>& b,
                   std::size_t c_out, std::size_t kt, std::size_t kf, std::size_t stride) {
  const std::size_t f_out = (in.freq() + stride - 1) / stride;
  Tensor3 out(c_out, in.time(), f_out);
  for (std::size_t o = 0; o < c_out; ++o) {
    for (std::size_t t = 0; t < in.time(); ++t) {
      for (std::size_t f = 0; f < f_out; ++f) {
        double acc = b.empty() ? 0.0 : b[o];
        for (std::size_t i = 0; i < in.channels(); ++i) {
          for (std::size_t a = 0; a < kt; ++a) {
            for (std::size_t c = 0; c < kf; ++c) {
              const long tt = static_cast<long>(t + a) - static_cast<long>(kt / 2);
              const long ff = static_cast<long>(f * stride + c) - static_cast<long>(kf / 2);
              if (tt < 0 || ff < 0 || tt >= static_cast<long>(in.time()) ||
                  ff >= static_cast<long>(in.freq())) {
                continue;
              }
              acc += static_cast<double>(w[((o * in.channels() + i) * kt + a) * kf + c]) *
                     in(i, tt, ff);
            }
          }
        }
        out(o, t, f) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

float max_abs_diff(const Tensor3& a, const Tensor3& b) {
  float m = 0.0f;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

WeightContainer zeroed(WeightContainer w) {
  for (const auto& [name, t] : w.tensors()) {
    auto& m = w.mutable_get(name);
    std::fill(m.data.begin(), m.data.end(), 0.0f);
  }
  return w;
}

TEST(Layers, ConvMatchesDirectSummation) {
  for (std::size_t stride : {1u, 2u}) {
    for (std::size_t f : {9u, 10u}) {
      const auto x = random_tensor(3, 5, f, 10 + f);
      const auto w = random_vec(4 * 3 * 3 * 5, 20 + stride);
      const auto b = random_vec(4, 30);
      const auto got = conv2d(x, w, b, 4, 3, 5, stride);
      const auto want = naive_conv(x, w, b, 4, 3, 5, stride);
      ASSERT_EQ(got.shape_string(), want.shape_string());
      EXPECT_LT(max_abs_diff(got, want), 1e-4f);
      EXPECT_LT(max_abs_diff(conv2d(x, w, {}, 4, 3, 5, stride),
                             naive_conv(x, w, {}, 4, 3, 5, stride)),
                1e-4f);
    }
  }
}

TEST(Layers, ConvIdentityKernel) {
  const auto x = random_tensor(2, 4, 7, 40);
  std::vector<float> w(2 * 2 * 3 * 5, 0.0f);
  for (std::size_t c = 0; c < 2; ++c) w[((c * 2 + c) * 3 + 1) * 5 + 2] = 1.0f;
  EXPECT_EQ(conv2d(x, w, {}, 2, 3, 5, 1), x);
  EXPECT_THROW(conv2d(x, std::vector<float>(5, 0.0f), {}, 2, 3, 5, 1), ConfigError);
}

TEST(Layers, ChannelNormAndPrelu) {
  auto x = random_tensor(2, 6, 8, 50);
  for (float& v : x.data()) v = 3.0f * v + 5.0f;
  channel_norm(x, std::vector<float>{1.0f, 2.0f}, std::vector<float>{0.0f, -1.0f});
  for (std::size_t c = 0; c < 2; ++c) {
    double mean = 0.0, var = 0.0;
    const std::size_t n = 6 * 8;
    for (std::size_t i = 0; i < n; ++i) mean += x.channel(c)[i];
    mean /= n;
    for (std::size_t i = 0; i < n; ++i) var += std::pow(x.channel(c)[i] - mean, 2);
    var /= n;
    EXPECT_NEAR(mean, c == 0 ? 0.0 : -1.0, 1e-5);
    EXPECT_NEAR(std::sqrt(var), c == 0 ? 1.0 : 2.0, 1e-3);
  }
  Tensor3 y(2, 1, 2);
  y(0, 0, 0) = -2.0f;
  y(0, 0, 1) = 3.0f;
  y(1, 0, 0) = -2.0f;
  prelu(y, std::vector<float>{0.25f, 0.0f});
  EXPECT_EQ(y(0, 0, 0), -0.5f);
  EXPECT_EQ(y(0, 0, 1), 3.0f);
  EXPECT_EQ(y(1, 0, 0), 0.0f);
}

TEST(Layers, SubpixelIndexFormula) {
  const auto x = random_tensor(4, 3, 10, 60);
  const auto y = subpixel_upsample(x, 2);
  ASSERT_EQ(y.channels(), 2u);
  ASSERT_EQ(y.freq(), 20u);
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t t = 0; t < 3; ++t) {
      for (std::size_t f = 0; f < 10; ++f) {
        for (std::size_t j = 0; j < 2; ++j) EXPECT_EQ(y(c, t, f * 2 + j), x(c * 2 + j, t, f));
      }
    }
  }
  EXPECT_EQ(subpixel_upsample(x, 1), x);
  EXPECT_THROW(subpixel_upsample(random_tensor(3, 1, 2, 1), 2), ConfigError);
}

TEST(Layers, SubpixelIsABijectionOnSmallShapes) {
  for (std::size_t r = 1; r <= 3; ++r) {
    for (std::size_t c = 1; c <= 3; ++c) {
      for (std::size_t f = 1; f <= 4; ++f) {
        Tensor3 x(c * r, 2, f);
        std::iota(x.data().begin(), x.data().end(), 0.0f);
        const auto y = subpixel_upsample(x, r);
        std::set<float> seen(y.data().begin(), y.data().end());
        EXPECT_EQ(seen.size(), x.size());
        EXPECT_EQ(subpixel_downsample(y, r), x);
      }
    }
  }
}

TEST(Layers, FitFreqCropsAndPads) {
  Tensor3 x(1, 1, 5);
  std::iota(x.data().begin(), x.data().end(), 1.0f);
  const auto crop = fit_freq(x, 2);
  // Three extra bins: one removed at the low end, two at the high end.
  EXPECT_EQ(crop(0, 0, 0), 2.0f);
  EXPECT_EQ(crop(0, 0, 1), 3.0f);
  const auto pad = fit_freq(x, 8);
  EXPECT_EQ(pad(0, 0, 0), 0.0f);
  EXPECT_EQ(pad(0, 0, 1), 1.0f);
  EXPECT_EQ(pad(0, 0, 5), 5.0f);
  EXPECT_EQ(pad(0, 0, 7), 0.0f);
  EXPECT_EQ(fit_freq(x, 5), x);
  const auto both = concat_channels(x, x);
  EXPECT_EQ(both.channels(), 2u);
  EXPECT_THROW(concat_channels(x, Tensor3(1, 2, 5)), ConfigError);
}

TEST(UNet, SpecArithmetic) {
  const auto base = UNetSpec::base();
  EXPECT_EQ(base.encoder_bins(), (std::vector<std::size_t>{260, 130, 65, 33, 17}));
  EXPECT_LT(unet_parameter_count(UNetSpec::small(), NetRole::kScore),
            unet_parameter_count(base, NetRole::kScore));
  EXPECT_LT(unet_parameter_count(UNetSpec::small(), NetRole::kCond),
            unet_parameter_count(base, NetRole::kCond));
  UNetSpec bad = base;
  bad.channels = {11, 16, 16, 33, 50};
  EXPECT_THROW(bad.validate(), ConfigError);
  nlohmann::json j = base;
  EXPECT_EQ(j.get<UNetSpec>(), base);
}

class UNetForward : public ::testing::Test {
 protected:
  void SetUp() override { spec_ = UNetSpec::small(); }
  UNetSpec spec_;
};

TEST_F(UNetForward, ShapeContract) {
  const auto w = init_weights(spec_, 1);
  const UNet net(spec_, w, NetRole::kCond, "cond");
  const auto out = net.forward(random_tensor(4, 7, 260, 70));
  EXPECT_EQ(out.encoder_bins, (std::vector<std::size_t>{260, 130, 65, 33, 17}));
  EXPECT_EQ(out.decoder_bins, (std::vector<std::size_t>{33, 65, 130, 260}));
  EXPECT_EQ(out.output.channels(), 2u);
  EXPECT_EQ(out.output.time(), 7u);
  EXPECT_EQ(out.output.freq(), 260u);
  EXPECT_EQ(out.features.channels(), spec_.channels.front());
  EXPECT_THROW(net.forward(random_tensor(3, 7, 260, 71)), ConfigError);
  EXPECT_THROW(net.forward(random_tensor(4, 7, 256, 71)), ConfigError);
}

TEST_F(UNetForward, ZeroWeightsGiveZeroOutput) {
  const auto w = zeroed(init_weights(spec_, 2));
  const UNet net(spec_, w, NetRole::kScore, "score");
  const auto out = net.forward(random_tensor(input_channels(spec_, NetRole::kScore), 5, 260, 72));
  for (float v : out.output.data()) EXPECT_EQ(v, 0.0f);
}

TEST_F(UNetForward, LinearConfigurationIsHomogeneous) {
  spec_.bias = false;
  spec_.norm = NormKind::kNone;
  spec_.activation = ActivationKind::kIdentity;
  const auto w = init_weights(spec_, 3);
  const UNet net(spec_, w, NetRole::kCond, "cond");
  const auto x = random_tensor(4, 6, 260, 73);
  Tensor3 x2 = x;
  for (float& v : x2.data()) v *= 2.0f;
  const auto y = net.forward(x).output;
  const auto y2 = net.forward(x2).output;
  float scale = 0.0f;
  for (float v : y.data()) scale = std::max(scale, std::abs(v));
  ASSERT_GT(scale, 0.0f);
  for (std::size_t i = 0; i < y.size(); ++i) {
    EXPECT_NEAR(y2.data()[i], 2.0f * y.data()[i], 1e-5f * scale);
  }
}

TEST_F(UNetForward, TimeAxisIsFrameConvolutional) {
  // Without the (time, frequency) normalization each layer has time kernel 3,
  // so a change at frame 0 cannot reach frame 59.
  spec_.norm = NormKind::kNone;
  const auto w = init_weights(spec_, 4);
  const UNet net(spec_, w, NetRole::kCond, "cond");
  auto x = random_tensor(4, 60, 260, 74);
  const auto before = net.forward(x).output;
  x(0, 0, 10) += 1.0f;
  const auto after = net.forward(x).output;
  for (std::size_t k = 0; k < 260; ++k) EXPECT_EQ(before(0, 59, k), after(0, 59, k));
  EXPECT_NE(max_abs_diff(before, after), 0.0f);
}

TEST_F(UNetForward, Deterministic) {
  const auto w = init_weights(spec_, 5);
  EXPECT_EQ(init_weights(spec_, 5), w);
  const UNet a(spec_, w, NetRole::kCond, "cond");
  const UNet b(spec_, w, NetRole::kCond, "cond");
  const auto x = random_tensor(4, 9, 260, 75);
  EXPECT_EQ(a.forward(x).output, b.forward(x).output);
  EXPECT_EQ(a.forward(x).output, a.forward(x).output);
}

TEST_F(UNetForward, WeightMismatchDiagnostics) {
  auto w = init_weights(spec_, 6);
  WeightContainer missing;
  missing.unet_spec = w.unet_spec;
  for (const auto& [name, t] : w.tensors()) {
    if (name != "cond.output.conv.bias") missing.add(name, t);
  }
  try {
    UNet(spec_, missing, NetRole::kCond, "cond");
    FAIL() << "missing tensor accepted";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("cond.output.conv.bias"), std::string::npos);
  }
  auto extra = w;
  extra.add("cond.stray", WeightTensor{{1}, {0.0f}});
  EXPECT_THROW(UNet(spec_, extra, NetRole::kCond, "cond"), DataError);
  EXPECT_NO_THROW(UNet(spec_, extra, NetRole::kScore, "score"));
  auto& t = w.mutable_get("cond.input.conv.bias");
  t.shape = {static_cast<std::int64_t>(t.data.size()), 1};
  try {
    UNet(spec_, w, NetRole::kCond, "cond");
    FAIL() << "wrong shape accepted";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("cond.input.conv.bias"), std::string::npos);
  }
}

std::vector<std::uint8_t> assemble(const nlohmann::json& header, std::size_t payload_bytes,
                                   std::uint32_t version = kWeightFormatVersion) {
  const std::string text = header.dump();
  std::vector<std::uint8_t> out{'D', 'V', 'Q', 'E'};
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(version >> (8 * i)));
  const std::uint64_t len = text.size();
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(len >> (8 * i)));
  out.insert(out.end(), text.begin(), text.end());
  out.resize(out.size() + payload_bytes, 0);
  return out;
}

WeightFileErrorKind error_kind(const std::vector<std::uint8_t>& bytes) {
  try {
    deserialize_weights(bytes);
  } catch (const WeightFileError& e) {
    return e.file_error();
  }
  ADD_FAILURE() << "no error raised";
  return WeightFileErrorKind::kBadMagic;
}

TEST(Weights, RoundTripIsByteIdentical) {
  const auto w = init_weights(UNetSpec::small(), 7);
  const auto bytes = serialize_weights(w);
  const auto back = deserialize_weights(bytes);
  EXPECT_EQ(back, w);
  EXPECT_EQ(serialize_weights(back), bytes);
  const auto path = testing::scratch_dir("weights") / "w.dvqe";
  save_weights(w, path);
  EXPECT_EQ(load_weights(path), w);
  EXPECT_THROW(load_weights(path.parent_path() / "absent.dvqe"), DataError);
}

TEST(Weights, PreambleLayout) {
  WeightContainer w;
  w.add("a", WeightTensor{{2}, {1.0f, -2.5f}});
  const auto bytes = serialize_weights(w);
  EXPECT_EQ(std::memcmp(bytes.data(), "DVQE", 4), 0);
  EXPECT_EQ(bytes[4], 1);
  std::uint64_t len = 0;
  for (int i = 0; i < 8; ++i) len |= static_cast<std::uint64_t>(bytes[8 + i]) << (8 * i);
  ASSERT_EQ(bytes.size(), 16 + len + 8);
  float v;
  std::memcpy(&v, bytes.data() + 16 + len + 4, 4);
  EXPECT_EQ(v, -2.5f);
}

TEST(Weights, DistinctErrorKinds) {
  WeightContainer w;
  w.add("a", WeightTensor{{2, 2}, {1, 2, 3, 4}});
  w.add("b", WeightTensor{{3}, {5, 6, 7}});
  auto bytes = serialize_weights(w);

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_EQ(error_kind(bad_magic), WeightFileErrorKind::kBadMagic);
  auto version = bytes;
  version[4] = 2;
  EXPECT_EQ(error_kind(version), WeightFileErrorKind::kVersion);
  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_EQ(error_kind(truncated), WeightFileErrorKind::kTruncated);
  auto corrupt = bytes;
  corrupt[16] = '#';
  EXPECT_EQ(error_kind(corrupt), WeightFileErrorKind::kCorruptHeader);

  nlohmann::json header = {{"format_version", 1}, {"unet_spec", nlohmann::json::object()}};
  header["tensors"] = {{{"name", "a"}, {"shape", {4}}, {"offset", 0}, {"nbytes", 16}},
                       {{"name", "b"}, {"shape", {3}}, {"offset", 8}, {"nbytes", 12}}};
  EXPECT_EQ(error_kind(assemble(header, 28)), WeightFileErrorKind::kOffsetOverlap);
  header["tensors"][1]["offset"] = 16;
  EXPECT_NO_THROW(deserialize_weights(assemble(header, 28)));
  header["tensors"][1]["nbytes"] = 8;
  EXPECT_EQ(error_kind(assemble(header, 28)), WeightFileErrorKind::kCorruptHeader);
  header["tensors"][1]["nbytes"] = 12;
  header["tensors"][1]["name"] = "a";
  EXPECT_EQ(error_kind(assemble(header, 28)), WeightFileErrorKind::kCorruptHeader);
  header["tensors"][1]["name"] = "b";
  EXPECT_EQ(error_kind(assemble(header, 28, 7)), WeightFileErrorKind::kVersion);
  EXPECT_EQ(error_kind({'D', 'V'}), WeightFileErrorKind::kBadMagic);
}

TEST(Weights, ContainerValidation) {
  WeightContainer w;
  EXPECT_THROW(w.add("", WeightTensor{{1}, {0.0f}}), ConfigError);
  EXPECT_THROW(w.add("x", WeightTensor{{2}, {0.0f}}), ConfigError);
  EXPECT_THROW(w.add("x", WeightTensor{{0}, {}}), ConfigError);
  w.add("x", WeightTensor{{1}, {0.0f}});
  EXPECT_THROW(w.add("x", WeightTensor{{1}, {0.0f}}), ConfigError);
  EXPECT_THROW(w.get("y"), DataError);
  EXPECT_THROW(w.get("x", {2}), DataError);
  EXPECT_EQ(w.parameter_count(), 1u);
}

TEST(DiffVqe, ChannelPacking) {
  const auto y = stft(testing::white_noise(2000, 0.1, 8));
  const auto t = spectrogram_channels({&y});
  ASSERT_EQ(t.channels(), 2u);
  const auto back = channels_to_spectrogram(t, y);
  for (std::size_t l = 0; l < y.frames(); ++l) {
    for (std::size_t k = 0; k < y.bins(); ++k) {
      const cplx want = k < 257 ? cplx(static_cast<float>(y.at(k, l).real()),
                                       static_cast<float>(y.at(k, l).imag()))
                                : cplx(0.0, 0.0);
      EXPECT_EQ(back.at(k, l), want);
    }
  }
}

TEST(DiffVqe, ZeroWeightsReduceToSkipPath) {
  const auto spec = UNetSpec::small();
  const DiffVqeModel model(zeroed(init_weights(spec, 9)));
  const auto y = stft(testing::white_noise(3000, 0.1, 9));
  const auto cond = model.condition(y, y);
  EXPECT_EQ(cond.s_cond.squared_norm(), 0.0);
  const double sigma = 0.2;
  const auto d = Preconditioner(
                     [&](const Spectrogram& s, double c_noise, const Conditioning& c) {
                       return model.raw_score(s, c_noise, c);
                     },
                     kDefaultSigmaData)
                     .denoise(y, sigma, cond.features);
  auto expected = y;
  expected *= edm_scalings(sigma, kDefaultSigmaData).c_skip;
  double err = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) err = std::max(err, std::abs(d.data()[i] - expected.data()[i]));
  EXPECT_LT(err, 1e-15);
}

TEST(DiffVqe, EnhanceIsDeterministicAndLengthPreserving) {
  const DiffVqeModel model(init_weights(UNetSpec::small(), 10));
  const auto mic = testing::white_noise(4000, 0.1, 10);
  const auto far = testing::white_noise(4000, 0.1, 11);
  for (auto mode : {EnhanceMode::kSingle, EnhanceMode::kMulti}) {
    EnhanceOptions opts;
    opts.mode = mode;
    opts.sampler.n_steps = mode == EnhanceMode::kSingle ? 1 : 3;
    Rng a = derive_rng(5, 0), b = derive_rng(5, 0);
    const auto x = enhance_waveform(model, mic, far, opts, a);
    const auto y = enhance_waveform(model, mic, far, opts, b);
    EXPECT_EQ(x.size(), mic.size());
    EXPECT_EQ(x.samples, y.samples);
    for (double v : x.samples) ASSERT_TRUE(std::isfinite(v));
  }
  Rng rng = derive_rng(0, 0);
  EXPECT_THROW(enhance_waveform(model, mic, testing::white_noise(10, 0.1, 1), EnhanceOptions{}, rng),
               DataError);
  EXPECT_THROW(DiffVqeModel(WeightContainer{}), DataError);
}

TEST(ToyScorer, GradientMatchesFiniteDifferences) {
  Rng rng = derive_rng(12, 0);
  const Spectrogram shape(toy_stft_config(), 8, toy_stft_config().samples_for(8));
  const auto s = draw_noise(shape, rng);
  const auto z = draw_noise(shape, rng);
  const double sigma = 0.3;
  auto s_t = s;
  s_t.axpy(sigma, z);
  for (std::uint64_t trial = 0; trial < 3; ++trial) {
    ToyScorer scorer(64, true);
    const auto init = random_vec(256, 100 + trial);
    scorer.set_params(std::vector<double>(init.begin(), init.end()));
    ToyGrad grad;
    toy_sm_loss(scorer, s_t, z, sigma, &grad);
    std::vector<double> analytic;
    for (const auto& g : grad.gain) analytic.push_back(g.real());
    for (const auto& g : grad.gain) analytic.push_back(g.imag());
    for (const auto& g : grad.bias) analytic.push_back(g.real());
    for (const auto& g : grad.bias) analytic.push_back(g.imag());
    const auto p0 = scorer.params();
    for (std::size_t i = 0; i < p0.size(); i += 7) {
      const double h = 1e-5 * std::max(1.0, std::abs(p0[i]));
      auto p = p0;
      p[i] = p0[i] + h;
      scorer.set_params(p);
      const double up = toy_sm_loss(scorer, s_t, z, sigma);
      p[i] = p0[i] - h;
      scorer.set_params(p);
      const double down = toy_sm_loss(scorer, s_t, z, sigma);
      const double fd = (up - down) / (2 * h);
      EXPECT_NEAR(analytic[i], fd, 1e-5 * std::max(1.0, std::abs(fd))) << "param " << i;
    }
    scorer.set_params(p0);
  }
}

TEST(ToyScorer, ScoreAndParamsRoundTrip) {
  ToyScorer scorer(64, false);
  EXPECT_EQ(scorer.params().size(), 128u);
  EXPECT_THROW(scorer.set_params(std::vector<double>(256, 0.0)), ConfigError);
  scorer.gain[3] = {0.0, 2.0};
  const Spectrogram shape(toy_stft_config(), 4, toy_stft_config().samples_for(4));
  Rng rng = derive_rng(13, 0);
  const auto x = draw_noise(shape, rng);
  const auto out = scorer.as_score_fn()(x, 0.1, {});
  EXPECT_EQ(out.at(3, 2), cplx(0.0, 2.0) * x.at(3, 2));
  EXPECT_EQ(out.at(4, 2), cplx(0.0, 0.0));
  EXPECT_THROW(ToyScorer(32).score(x), ConfigError);
}

TEST(ToyTrain, ZeroLearningRateLeavesParameters) {
  ToyTrainConfig cfg;
  cfg.steps = 50;
  cfg.lr = 0.0;
  Rng rng = derive_rng(14, 0);
  ToyScorer init(64, true);
  init.gain[0] = {-3.0, 1.0};
  const auto r = toy_train(init, 0.1, NoiseSchedule{}, cfg, rng);
  EXPECT_EQ(r.scorer.params(), init.params());
  EXPECT_EQ(r.loss_trace.size(), 1u);
}

TEST(ToyTrain, ReachesTheClosedFormOptimum) {
  const NoiseSchedule sched;
  const double sigma_s = 0.1;
  const double sig_t = sigma_at(sched, sched.t_max);
  const double g_star = -1.0 / (sigma_s * sigma_s + sig_t * sig_t);
  ToyTrainConfig cfg;
  Rng rng = derive_rng(15, 0);
  const auto r = toy_train(ToyScorer(64, true), sigma_s, sched, cfg, rng);
  for (std::size_t k = 1; k < 63; ++k) {
    EXPECT_NEAR(r.scorer.gain[k].real() / g_star, 1.0, 0.1) << "bin " << k;
    EXPECT_LT(std::abs(r.scorer.gain[k].imag() / g_star), 0.1) << "bin " << k;
  }
  EXPECT_EQ(r.loss_trace.size(), cfg.steps / cfg.trace_every);
  EXPECT_LT(r.loss_trace.back(), r.loss_trace.front());
}

TEST(ToyTrain, DivergenceIsReported) {
  ToyTrainConfig cfg;
  cfg.steps = 2000;
  cfg.lr = 1e6;
  Rng rng = derive_rng(16, 0);
  try {
    toy_train(ToyScorer(64, true), 0.1, NoiseSchedule{}, cfg, rng);
    FAIL() << "divergence not reported";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("step"), std::string::npos);
  }
}

}  // namespace
}  // namespace dvqe
