#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "dvqe/common/error.h"
#include "dvqe/scene/dataset.h"
#include "dvqe/scene/nonlinearity.h"
#include "dvqe/scene/rir.h"
#include "dvqe/scene/scene.h"
#include "test_support.h"

namespace dvqe {
namespace {

using testing::white_noise;

RoomSpec test_room() {
  RoomSpec r;
  r.dimensions = {6.0, 5.0, 3.0};
  r.rt60_s = 0.4;
  r.source_pos = {1.0, 1.0, 1.5};
  r.mic_pos = {3.0, 2.5, 1.2};
  r.nearend_pos = {4.0, 3.5, 1.6};
  return r;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Rir, AnechoicLimitIsSingleImpulse) {
  RoomSpec r = test_room();
  r.max_reflection_order = 0;
  // 100 samples of propagation: an integer delay needs no interpolation.
  const double dist = 100.0 * kSpeedOfSound / 16000.0;
  const Vec3 src{1.0, 2.0, 1.5};
  const Vec3 mic{1.0 + dist, 2.0, 1.5};
  const auto h = generate_rir(r, src, mic);
  const double expected = 1.0 / (4.0 * std::numbers::pi * dist);
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (i == 100) {
      EXPECT_NEAR(h.samples[i], expected, 1e-12);
    } else {
      EXPECT_NEAR(h.samples[i], 0.0, 1e-12) << "tap " << i;
    }
  }
}

TEST(Rir, DirectPathFollowsInverseDistance) {
  RoomSpec r = test_room();
  r.max_reflection_order = 0;
  const double d1 = 50.0 * kSpeedOfSound / 16000.0;
  const Vec3 src{1.0, 2.0, 1.5};
  const auto h1 = generate_rir(r, src, {1.0 + d1, 2.0, 1.5});
  const auto h2 = generate_rir(r, src, {1.0 + 2.0 * d1, 2.0, 1.5});
  EXPECT_NEAR(h1.samples[50] / h2.samples[100], 2.0, 1e-9);
}

TEST(Rir, SchroederDecayMatchesRequestedRt60) {
  const RoomSpec r = test_room();
  const auto h = generate_rir(r, r.source_pos, r.mic_pos);
  EXPECT_EQ(h.size(), r.rir_length());
  EXPECT_NEAR(schroeder_t60(h), 0.4, 0.08);
}

TEST(Rir, LengthIsBounded) {
  RoomSpec r = test_room();
  EXPECT_EQ(r.rir_length(), 9600u);
  r.rt60_s = 0.9;
  EXPECT_EQ(r.rir_length(), 16000u);
}

TEST(Rir, PairSharesDecayAndIsDeterministic) {
  RoomSpec r = test_room();
  const auto [h1, h2] = generate_rir_pair(r);
  EXPECT_NE(h1.samples, h2.samples);
  const double t1 = schroeder_t60(h1), t2 = schroeder_t60(h2);
  EXPECT_NEAR(t1 / t2, 1.0, 0.1);

  RoomSpec same = r;
  same.nearend_pos = same.source_pos;
  const auto [a, b] = generate_rir_pair(same);
  EXPECT_EQ(a.samples, b.samples);

  RoomSpec reseeded = r;
  reseeded.seed = 1234;
  EXPECT_EQ(generate_rir_pair(reseeded).first.samples, h1.samples);
}

TEST(Rir, RejectsInvalidRooms) {
  RoomSpec r = test_room();
  r.mic_pos = {7.0, 1.0, 1.0};
  EXPECT_THROW(r.validate(), ConfigError);
  r = test_room();
  r.rt60_s = 0.0;
  EXPECT_THROW(r.validate(), ConfigError);
  r = test_room();
  r.dimensions = {-1.0, 5.0, 3.0};
  EXPECT_THROW(r.validate(), ConfigError);
  r = test_room();
  // So long a decay that the walls absorb nothing.
  r.rt60_s = 1e30;
  EXPECT_THROW(r.validate(), ConfigError);
  r = test_room();
  r.source_pos = {3.0, 2.51, 1.2};
  EXPECT_THROW(generate_rir_pair(r), ConfigError);
}

TEST(Nonlinearity, IdentityIsBitExact) {
  const auto x = white_noise(1000, 0.5, 1);
  EXPECT_EQ(apply_nonlinearity(x, NonlinearitySpec::identity()).samples, x.samples);
}

TEST(Nonlinearity, HardClip) {
  const Waveform x(std::vector<double>{1.0, -1.0, 0.5});
  const auto y = apply_nonlinearity(x, NonlinearitySpec::hard_clip(0.8, false));
  EXPECT_DOUBLE_EQ(y.samples[0], 0.8);
  EXPECT_DOUBLE_EQ(y.samples[1], -0.8);
  EXPECT_DOUBLE_EQ(y.samples[2], 0.5);
  // Relative thresholds scale with max|x|.
  const Waveform x2(std::vector<double>{2.0, 1.0});
  const auto y2 = apply_nonlinearity(x2, NonlinearitySpec::hard_clip(0.8, true));
  EXPECT_DOUBLE_EQ(y2.samples[0], 1.6);
  EXPECT_DOUBLE_EQ(y2.samples[1], 1.0);
}

TEST(Nonlinearity, SigmoidGridScan) {
  const double sat = 0.7;
  const auto spec = NonlinearitySpec::sigmoid(sat, 3.0);
  std::vector<double> grid;
  for (int i = -4000; i <= 4000; ++i) grid.push_back(i * 0.005);
  const auto y = apply_nonlinearity(Waveform(grid), spec).samples;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_LE(std::abs(y[i]), sat);
    EXPECT_NEAR(y[i], -y[grid.size() - 1 - i], 1e-15);
    if (i > 0) {
      EXPECT_GE(y[i], y[i - 1]);
    }
  }
  EXPECT_EQ(y[4000], 0.0);
}

TEST(Nonlinearity, SoftClipAndPolynomial) {
  NonlinearitySpec soft;
  NonlinearityStage st;
  st.kind = NonlinearityKind::kSoftClipArctan;
  st.limit = 0.5;
  soft.stages.push_back(st);
  const auto y = apply_nonlinearity(Waveform(std::vector<double>{1e-6, 100.0}), soft);
  EXPECT_NEAR(y.samples[0], 1e-6, 1e-12);
  EXPECT_LT(y.samples[1], 0.5);
  EXPECT_GT(y.samples[1], 0.49);

  // Default: clip at 0.8 max|x|, then 1.5 v - 0.3 v^2.
  const auto d = apply_nonlinearity(Waveform(std::vector<double>{1.0, 0.5}),
                                    NonlinearitySpec::loudspeaker_default());
  EXPECT_NEAR(d.samples[0], 1.5 * 0.8 - 0.3 * 0.64, 1e-12);
  EXPECT_NEAR(d.samples[1], 1.5 * 0.5 - 0.3 * 0.25, 1e-12);
}

TEST(Nonlinearity, ValidationAndJson) {
  EXPECT_THROW(NonlinearitySpec::hard_clip(1.5, true).validate(), ConfigError);
  EXPECT_THROW(NonlinearitySpec::sigmoid(-1.0, 1.0).validate(), ConfigError);
  const auto spec = NonlinearitySpec::loudspeaker_default();
  nlohmann::json j;
  to_json(j, spec);
  NonlinearitySpec back;
  from_json(j, back);
  EXPECT_EQ(back, spec);
  EXPECT_THROW(nonlinearity_kind_from_string("bogus"), ConfigError);
}

struct MixInputs {
  Waveform speech = white_noise(40000, 0.1, 11);
  Waveform farend = white_noise(40000, 0.2, 12);
  Waveform noise = white_noise(40000, 0.05, 13);
};

SceneConfig mix_config(double ser, double snr, Augmentation aug = Augmentation::kNone) {
  SceneConfig c;
  c.room = test_room();
  c.room.rt60_s = 0.25;
  c.ser_db = ser;
  c.snr_db = snr;
  c.duration_s = 2.0;
  c.augmentation = aug;
  c.seed = 5;
  return c;
}

double ratio_db(const Waveform& a, const Waveform& b) {
  return 10.0 * std::log10(mean_square(a.samples) / mean_square(b.samples));
}

TEST(MixScene, AdditivityAndRequestedRatios) {
  const MixInputs in;
  const auto b = mix_scene(in.speech, in.farend, in.noise, mix_config(3.0, 12.0));
  ASSERT_EQ(b.mic.size(), 32000u);
  for (std::size_t i = 0; i < b.mic.size(); ++i) {
    EXPECT_EQ(b.mic.samples[i] - (b.target.samples[i] + b.echo.samples[i] + b.noise.samples[i]),
              0.0);
  }
  EXPECT_NEAR(ratio_db(b.near_reverb, b.echo), 3.0, 1e-9);
  EXPECT_NEAR(ratio_db(b.near_reverb, b.noise), 12.0, 1e-9);
  EXPECT_NEAR(b.achieved_ser_db, 3.0, 1e-9);
  EXPECT_EQ(b.target.samples, b.near_reverb.samples);
}

TEST(MixScene, EchoScaleFollowsPowerRatio) {
  const MixInputs in;
  const auto b0 = mix_scene(in.speech, in.farend, in.noise, mix_config(0.0, 10.0));
  const auto b10 = mix_scene(in.speech, in.farend, in.noise, mix_config(10.0, 10.0));
  const double g = std::pow(10.0, -10.0 / 20.0);
  for (std::size_t i = 0; i < b0.echo.size(); i += 97) {
    EXPECT_NEAR(b10.echo.samples[i], g * b0.echo.samples[i], 1e-15);
  }
  // At 0 dB the echo carries exactly the near-end power.
  EXPECT_NEAR(mean_square(b0.echo.samples) / mean_square(b0.near_reverb.samples), 1.0, 1e-12);
}

TEST(MixScene, Augmentations) {
  const MixInputs in;
  const auto far = mix_scene(in.speech, in.farend, in.noise,
                             mix_config(0.0, 10.0, Augmentation::kDropFarend));
  for (std::size_t i = 0; i < far.mic.size(); ++i) {
    EXPECT_EQ(far.echo.samples[i], 0.0);
    EXPECT_EQ(far.farend.samples[i], 0.0);
    EXPECT_EQ(far.mic.samples[i], far.near_reverb.samples[i] + far.noise.samples[i]);
  }
  const auto near = mix_scene(in.speech, in.farend, in.noise,
                              mix_config(0.0, 10.0, Augmentation::kDropNearend));
  for (double v : near.target.samples) EXPECT_EQ(v, 0.0);
  const auto dry = mix_scene(in.speech, in.farend, in.noise,
                             mix_config(0.0, 10.0, Augmentation::kDryNearend));
  EXPECT_EQ(dry.target.samples, dry.near_dry.samples);
  EXPECT_NEAR(ratio_db(dry.near_dry, dry.echo), 0.0, 1e-9);
}

TEST(MixScene, Errors) {
  const MixInputs in;
  EXPECT_THROW(mix_scene(Waveform::zeros(40000), in.farend, in.noise, mix_config(0, 0)),
               DataError);
  EXPECT_THROW(mix_scene(in.speech, in.farend, Waveform::zeros(40000), mix_config(0, 0)),
               DataError);
  EXPECT_THROW(mix_scene(white_noise(100, 0.1, 1), in.farend, in.noise, mix_config(0, 0)),
               DataError);
  auto bad = mix_config(0, 0);
  bad.duration_s = 0.0;
  EXPECT_THROW(mix_scene(in.speech, in.farend, in.noise, bad), ConfigError);
}

TEST(MixScene, Deterministic) {
  const MixInputs in;
  const auto a = mix_scene(in.speech, in.farend, in.noise, mix_config(1.0, 5.0));
  const auto b = mix_scene(in.speech, in.farend, in.noise, mix_config(1.0, 5.0));
  EXPECT_EQ(a.mic.samples, b.mic.samples);
}

TEST(Dataset, AugmentationCountsFloorRule) {
  const auto c16 = augmentation_counts(16);
  EXPECT_EQ(c16.drop_nearend, 1u);
  EXPECT_EQ(c16.drop_farend, 1u);
  EXPECT_EQ(c16.dry_nearend, 1u);
  EXPECT_EQ(c16.none, 13u);
  const auto c400 = augmentation_counts(400);
  EXPECT_EQ(c400.drop_nearend, 25u);
  EXPECT_EQ(c400.drop_farend, 25u);
  EXPECT_EQ(c400.dry_nearend, 40u);
  EXPECT_EQ(c400.none, 310u);
  const auto c0 = augmentation_counts(0);
  EXPECT_EQ(c0.none + c0.drop_farend + c0.drop_nearend + c0.dry_nearend, 0u);
}

TEST(Dataset, AssignedTagsMatchCounts) {
  for (std::size_t n : {16u, 37u, 160u}) {
    const auto tags = assign_augmentations(n, 9);
    const auto c = augmentation_counts(n);
    ASSERT_EQ(tags.size(), n);
    EXPECT_EQ(std::count(tags.begin(), tags.end(), Augmentation::kDropNearend),
              static_cast<long>(c.drop_nearend));
    EXPECT_EQ(std::count(tags.begin(), tags.end(), Augmentation::kDropFarend),
              static_cast<long>(c.drop_farend));
    EXPECT_EQ(std::count(tags.begin(), tags.end(), Augmentation::kDryNearend),
              static_cast<long>(c.dry_nearend));
    EXPECT_EQ(tags, assign_augmentations(n, 9));
  }
}

TEST(Dataset, SampledConfigsRespectRanges) {
  DatasetConfig cfg;
  for (std::size_t i = 0; i < 50; ++i) {
    const auto sc = sample_scene_config(cfg, 3, i, Augmentation::kNone);
    EXPECT_GE(sc.ser_db, -10.0);
    EXPECT_LE(sc.ser_db, 10.0);
    EXPECT_GE(sc.snr_db, 0.0);
    EXPECT_LE(sc.snr_db, 30.0);
    EXPECT_GE(sc.room.rt60_s, 0.2);
    EXPECT_LE(sc.room.rt60_s, 0.7);
    EXPECT_NO_THROW(sc.room.validate());
  }
}

TEST(Dataset, SyntheticSourcesAreDeterministic) {
  Rng a = derive_rng(1, 2), b = derive_rng(1, 2);
  EXPECT_EQ(synthetic_speech(1.0, a).samples, synthetic_speech(1.0, b).samples);
  Rng c = derive_rng(1, 3);
  const auto n = synthetic_noise(1.0, c);
  EXPECT_EQ(n.size(), 16000u);
  EXPECT_GT(mean_square(n.samples), 0.0);
}

TEST(Dataset, GenerateIsByteIdenticalAndRoundTrips) {
  DatasetConfig cfg;
  cfg.duration_s = 1.0;
  cfg.max_reflection_order = 2;
  cfg.synthetic_pool_size = 3;
  const auto d1 = testing::scratch_dir("ds1");
  const auto d2 = testing::scratch_dir("ds2");
  const auto m1 = generate_dataset(4, cfg, d1, 21);
  generate_dataset(4, cfg, d2, 21);
  ASSERT_EQ(m1.entries.size(), 4u);
  EXPECT_EQ(read_file(d1 / "manifest.jsonl"), read_file(d2 / "manifest.jsonl"));
  for (const auto& name : scene_component_names()) {
    const auto rel = m1.entries[2].paths.at(name);
    EXPECT_EQ(read_file(d1 / rel), read_file(d2 / rel)) << name;
  }

  const auto back = read_manifest(d1 / "manifest.jsonl");
  ASSERT_EQ(back.entries.size(), 4u);
  EXPECT_EQ(back.entries[1], m1.entries[1]);
  const auto scene = load_scene(back, back.entries[0]);
  for (std::size_t i = 0; i < scene.mic.size(); ++i) {
    // Components are stored as float32; the sum holds to float rounding.
    EXPECT_NEAR(scene.mic.samples[i],
                scene.target.samples[i] + scene.echo.samples[i] + scene.noise.samples[i], 1e-6);
  }
}

TEST(Dataset, ZeroScenesGiveEmptyManifest) {
  const auto dir = testing::scratch_dir("ds0");
  const auto m = generate_dataset(0, DatasetConfig{}, dir, 1);
  EXPECT_TRUE(m.entries.empty());
  EXPECT_TRUE(std::filesystem::exists(dir / "manifest.jsonl"));
  EXPECT_TRUE(read_manifest(dir / "manifest.jsonl").entries.empty());
}

TEST(Dataset, ConfigJsonRoundTrip) {
  DatasetConfig cfg;
  cfg.duration_s = 7.5;
  cfg.ranges.snr_db = {5.0, 6.0};
  nlohmann::json j;
  to_json(j, cfg);
  DatasetConfig back;
  from_json(j, back);
  EXPECT_EQ(back.duration_s, 7.5);
  EXPECT_EQ(back.ranges.snr_db, cfg.ranges.snr_db);
}

}  // namespace
}  // namespace dvqe
