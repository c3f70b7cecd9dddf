#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "dvqe/common/rng.h"
#include "dvqe/scene/scene.h"

namespace dvqe {

// Sampling ranges for random scenes. Defaults are configuration placeholders.
struct DatasetRanges {
  std::array<double, 2> ser_db{-10.0, 10.0};
  std::array<double, 2> snr_db{0.0, 30.0};
  std::array<double, 2> rt60_s{0.2, 0.7};
  Vec3 room_min_m{3.0, 3.0, 2.4};
  Vec3 room_max_m{8.0, 6.0, 3.5};
  double wall_margin_m = 0.5;
  // Probability that a scene uses the default loudspeaker nonlinearity
  // rather than the identity.
  double nonlinear_prob = 0.5;
};

struct DatasetConfig {
  DatasetRanges ranges;
  double duration_s = 30.0;
  int max_reflection_order = -1;
  // Empty directories select the built-in synthetic source generators.
  std::filesystem::path speech_dir;
  std::filesystem::path noise_dir;
  std::size_t synthetic_pool_size = 8;
  std::size_t jobs = 1;
};

void to_json(nlohmann::json& j, const DatasetConfig& c);
void from_json(const nlohmann::json& j, DatasetConfig& c);

// Audio material scenes are cut from.
struct SourcePools {
  std::vector<Waveform> speech;
  std::vector<Waveform> noise;
};

// Speech-like test signal: voiced harmonic syllables with formant shaping,
// unvoiced bursts and pauses. Deterministic given the RNG state.
Waveform synthetic_speech(double duration_s, Rng& rng, int rate = kDefaultSampleRate);
// Mixture of white, low-passed and hum components with slow level drift.
Waveform synthetic_noise(double duration_s, Rng& rng, int rate = kDefaultSampleRate);

// Loads every *.wav under the configured directories (sorted by name,
// resampled to 16 kHz, tiled up to duration), or synthesizes pools when the
// directories are unset.
SourcePools load_pools(const DatasetConfig& cfg, std::uint64_t seed);

// Number of scenes tagged with each augmentation for a dataset of n scenes:
// floor(0.0625 n) drop_nearend, floor(0.0625 n) drop_farend,
// floor(0.10 n) dry_nearend, the remainder none.
struct AugmentationCounts {
  std::size_t drop_nearend = 0;
  std::size_t drop_farend = 0;
  std::size_t dry_nearend = 0;
  std::size_t none = 0;
};
AugmentationCounts augmentation_counts(std::size_t n_scenes);

// Deterministic augmentation tag per scene index.
std::vector<Augmentation> assign_augmentations(std::size_t n_scenes, std::uint64_t seed);

// Random scene recipe for index `index` of a dataset seeded with `seed`.
SceneConfig sample_scene_config(const DatasetConfig& cfg, std::uint64_t seed,
                                std::size_t index, Augmentation aug);

// Scene `index` of a dataset seeded with `seed`, drawn from `pools`.
SceneBundle synthesize_scene(const DatasetConfig& cfg, const SourcePools& pools,
                             std::uint64_t seed, std::size_t index, Augmentation aug);
// In-memory equivalent of generate_dataset() without writing files.
std::vector<SceneBundle> synthesize_scenes(std::size_t n_scenes, const DatasetConfig& cfg,
                                           std::uint64_t seed,
                                           const SourcePools* pools = nullptr);

struct ManifestEntry {
  std::string id;
  // mic, farend, near_dry, near_reverb, echo, noise, target -> path relative
  // to the manifest directory.
  std::map<std::string, std::string> paths;
  double ser_db = 0.0;
  double snr_db = 0.0;
  double achieved_ser_db = 0.0;
  double achieved_snr_db = 0.0;
  double rt60_s = 0.0;
  Vec3 room_dims_m{};
  NonlinearitySpec nonlinearity;
  Augmentation augmentation = Augmentation::kNone;
  std::uint64_t seed = 0;

  bool operator==(const ManifestEntry&) const = default;
};

void to_json(nlohmann::json& j, const ManifestEntry& e);
void from_json(const nlohmann::json& j, ManifestEntry& e);

struct Manifest {
  std::filesystem::path path;  // manifest.jsonl location
  std::vector<ManifestEntry> entries;

  std::filesystem::path resolve(const std::string& rel) const {
    return path.parent_path() / rel;
  }
};

inline const std::vector<std::string>& scene_component_names() {
  static const std::vector<std::string> names{
      "mic", "farend", "near_dry", "near_reverb", "echo", "noise", "target"};
  return names;
}

// Synthesizes n_scenes scenes into out_dir (one subdirectory of float32 WAVs
// per scene), writes out_dir/manifest.jsonl plus out_dir/dataset.json with the
// generation config. Byte-identical output for identical (config, seed).
Manifest generate_dataset(std::size_t n_scenes, const DatasetConfig& cfg,
                          const std::filesystem::path& out_dir, std::uint64_t seed,
                          const SourcePools* pools = nullptr);

Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const Manifest& m);

// Reads the WAVs of one manifest entry back into a bundle.
SceneBundle load_scene(const Manifest& m, const ManifestEntry& e);

}  // namespace dvqe
