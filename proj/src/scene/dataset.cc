#include "dvqe/scene/dataset.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "dvqe/common/error.h"
#include "dvqe/common/parallel.h"
#include "dvqe/signal/wav_io.h"

namespace dvqe {

using nlohmann::json;

void to_json(json& j, const DatasetConfig& c) {
  const auto& r = c.ranges;
  j = json{{"duration_s", c.duration_s},
           {"max_reflection_order", c.max_reflection_order},
           {"speech_dir", c.speech_dir.string()},
           {"noise_dir", c.noise_dir.string()},
           {"synthetic_pool_size", c.synthetic_pool_size},
           {"ranges",
            {{"ser_db", r.ser_db},
             {"snr_db", r.snr_db},
             {"rt60_s", r.rt60_s},
             {"room_min_m", r.room_min_m},
             {"room_max_m", r.room_max_m},
             {"wall_margin_m", r.wall_margin_m},
             {"nonlinear_prob", r.nonlinear_prob}}}};
}

void from_json(const json& j, DatasetConfig& c) {
  c.duration_s = j.value("duration_s", c.duration_s);
  c.max_reflection_order = j.value("max_reflection_order", c.max_reflection_order);
  c.speech_dir = j.value("speech_dir", c.speech_dir.string());
  c.noise_dir = j.value("noise_dir", c.noise_dir.string());
  c.synthetic_pool_size = j.value("synthetic_pool_size", c.synthetic_pool_size);
  if (j.contains("ranges")) {
    const auto& r = j.at("ranges");
    auto& o = c.ranges;
    o.ser_db = r.value("ser_db", o.ser_db);
    o.snr_db = r.value("snr_db", o.snr_db);
    o.rt60_s = r.value("rt60_s", o.rt60_s);
    o.room_min_m = r.value("room_min_m", o.room_min_m);
    o.room_max_m = r.value("room_max_m", o.room_max_m);
    o.wall_margin_m = r.value("wall_margin_m", o.wall_margin_m);
    o.nonlinear_prob = r.value("nonlinear_prob", o.nonlinear_prob);
  }
  if (!(c.duration_s > 0.0)) throw ConfigError("dataset: duration_s must be > 0");
  for (int i = 0; i < 3; ++i) {
    if (c.ranges.room_min_m[i] > c.ranges.room_max_m[i] ||
        c.ranges.room_min_m[i] <= 2.0 * c.ranges.wall_margin_m) {
      throw ConfigError("dataset: room range too small for the wall margin");
    }
  }
}

namespace {

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

void normalize_rms(std::vector<double>& v, double target) {
  double ms = 0.0;
  for (double e : v) ms += e * e;
  ms /= static_cast<double>(std::max<std::size_t>(v.size(), 1));
  if (ms <= 0.0) return;
  const double g = target / std::sqrt(ms);
  for (double& e : v) e *= g;
}

}  // namespace

Waveform synthetic_speech(double duration_s, Rng& rng, int rate) {
  const auto n = static_cast<std::size_t>(std::llround(duration_s * rate));
  std::vector<double> out(n, 0.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double base_f0 = uniform(rng, 90.0, 230.0);
  std::size_t pos = static_cast<std::size_t>(uniform(rng, 0.0, 0.2) * rate);
  while (pos < n) {
    const bool voiced = uniform(rng, 0.0, 1.0) < 0.8;
    const auto len = static_cast<std::size_t>(uniform(rng, 0.12, 0.35) * rate);
    const double f0 = base_f0 * uniform(rng, 0.85, 1.2);
    const double f1 = uniform(rng, 300.0, 850.0);
    const double f2 = uniform(rng, 900.0, 2500.0);
    const double level = uniform(rng, 0.5, 1.0);
    double phase = 0.0;
    double lp = 0.0;
    for (std::size_t i = 0; i < len && pos + i < n; ++i) {
      const double t = static_cast<double>(i) / len;
      const double env = std::sin(std::numbers::pi * t);
      double v = 0.0;
      if (voiced) {
        const double f = f0 * (1.0 + 0.05 * std::sin(2.0 * std::numbers::pi * 3.0 * i / rate));
        phase += 2.0 * std::numbers::pi * f / rate;
        for (int h = 1; h * f0 < 4000.0; ++h) {
          const double fh = h * f0;
          const double formant = std::exp(-0.5 * std::pow((fh - f1) / 150.0, 2)) +
                                 0.6 * std::exp(-0.5 * std::pow((fh - f2) / 250.0, 2)) +
                                 0.05;
          v += formant / h * std::sin(h * phase);
        }
      } else {
        // High-passed noise burst for fricatives.
        const double w = gauss(rng);
        lp = 0.7 * lp + 0.3 * w;
        v = 0.6 * (w - lp);
      }
      out[pos + i] += level * env * env * v;
    }
    pos += len + static_cast<std::size_t>(uniform(rng, 0.03, 0.3) * rate);
  }
  normalize_rms(out, 0.05);
  return Waveform(std::move(out), rate);
}

Waveform synthetic_noise(double duration_s, Rng& rng, int rate) {
  const auto n = static_cast<std::size_t>(std::llround(duration_s * rate));
  std::vector<double> out(n, 0.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double w_white = uniform(rng, 0.1, 1.0);
  const double w_low = uniform(rng, 0.0, 1.0);
  const double w_hum = uniform(rng, 0.0, 0.3);
  const double pole = uniform(rng, 0.9, 0.995);
  const double hum_f = uniform(rng, 50.0, 120.0);
  const double drift_f = uniform(rng, 0.05, 0.3);
  double low = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = gauss(rng);
    low = pole * low + (1.0 - pole) * gauss(rng);
    const double t = static_cast<double>(i) / rate;
    const double drift = 1.0 + 0.3 * std::sin(2.0 * std::numbers::pi * drift_f * t);
    out[i] = drift * (w_white * w + w_low * low / std::sqrt(1.0 - pole) * 0.3 +
                      w_hum * std::sin(2.0 * std::numbers::pi * hum_f * t));
  }
  normalize_rms(out, 0.05);
  return Waveform(std::move(out), rate);
}

namespace {

std::vector<Waveform> load_dir(const std::filesystem::path& dir, double min_s) {
  if (!std::filesystem::is_directory(dir)) {
    throw DataError("source directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".wav") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Waveform> out;
  const auto min_n = static_cast<std::size_t>(std::ceil(min_s * kDefaultSampleRate));
  for (const auto& f : files) {
    Waveform w = read_wav(f);
    if (w.empty()) continue;
    const std::size_t base = w.size();
    while (w.size() < min_n) {
      w.samples.insert(w.samples.end(), w.samples.begin(),
                       w.samples.begin() + static_cast<long>(base));
    }
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace

SourcePools load_pools(const DatasetConfig& cfg, std::uint64_t seed) {
  SourcePools pools;
  const double clip_s = cfg.duration_s + 1.0;
  if (!cfg.speech_dir.empty()) {
    pools.speech = load_dir(cfg.speech_dir, clip_s);
  } else {
    for (std::size_t i = 0; i < cfg.synthetic_pool_size; ++i) {
      Rng rng = derive_rng(seed ^ 0x5350454543480000ULL, i);
      pools.speech.push_back(synthetic_speech(clip_s, rng));
    }
  }
  if (!cfg.noise_dir.empty()) {
    pools.noise = load_dir(cfg.noise_dir, clip_s);
  } else {
    for (std::size_t i = 0; i < cfg.synthetic_pool_size; ++i) {
      Rng rng = derive_rng(seed ^ 0x4E4F495345000000ULL, i);
      pools.noise.push_back(synthetic_noise(clip_s, rng));
    }
  }
  return pools;
}

AugmentationCounts augmentation_counts(std::size_t n) {
  AugmentationCounts c;
  c.drop_nearend = n / 16;  // floor(0.0625 n)
  c.drop_farend = n / 16;
  c.dry_nearend = n / 10;   // floor(0.10 n)
  c.none = n - c.drop_nearend - c.drop_farend - c.dry_nearend;
  return c;
}

std::vector<Augmentation> assign_augmentations(std::size_t n, std::uint64_t seed) {
  const auto c = augmentation_counts(n);
  std::vector<Augmentation> tags;
  tags.reserve(n);
  tags.insert(tags.end(), c.drop_nearend, Augmentation::kDropNearend);
  tags.insert(tags.end(), c.drop_farend, Augmentation::kDropFarend);
  tags.insert(tags.end(), c.dry_nearend, Augmentation::kDryNearend);
  tags.insert(tags.end(), c.none, Augmentation::kNone);
  // Fisher-Yates with explicit index draws, independent of std::shuffle.
  Rng rng = derive_rng(seed, 0xA06A06A0ULL);
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(tags[i - 1], tags[pick(rng)]);
  }
  return tags;
}

SceneConfig sample_scene_config(const DatasetConfig& cfg, std::uint64_t seed,
                                std::size_t index, Augmentation aug) {
  Rng rng = derive_rng(seed, index);
  const auto& r = cfg.ranges;
  SceneConfig sc;
  sc.duration_s = cfg.duration_s;
  sc.augmentation = aug;
  sc.ser_db = uniform(rng, r.ser_db[0], r.ser_db[1]);
  sc.snr_db = uniform(rng, r.snr_db[0], r.snr_db[1]);
  RoomSpec& room = sc.room;
  room.rt60_s = uniform(rng, r.rt60_s[0], r.rt60_s[1]);
  room.max_reflection_order = cfg.max_reflection_order;
  for (int i = 0; i < 3; ++i) room.dimensions[i] = uniform(rng, r.room_min_m[i], r.room_max_m[i]);
  auto place = [&] {
    Vec3 p;
    for (int i = 0; i < 3; ++i) {
      p[i] = uniform(rng, r.wall_margin_m, room.dimensions[i] - r.wall_margin_m);
    }
    return p;
  };
  room.mic_pos = place();
  do {
    room.source_pos = place();
  } while (distance(room.source_pos, room.mic_pos) < 0.3);
  do {
    room.nearend_pos = place();
  } while (distance(room.nearend_pos, room.mic_pos) < 0.3);
  sc.nonlinearity = uniform(rng, 0.0, 1.0) < r.nonlinear_prob
                        ? NonlinearitySpec::loudspeaker_default()
                        : NonlinearitySpec::identity();
  sc.seed = rng();
  room.seed = sc.seed;
  return sc;
}

void to_json(json& j, const ManifestEntry& e) {
  json nl;
  to_json(nl, e.nonlinearity);
  j = json{{"id", e.id},
           {"paths", e.paths},
           {"ser_db", e.ser_db},
           {"snr_db", e.snr_db},
           {"achieved_ser_db", e.achieved_ser_db},
           {"achieved_snr_db", e.achieved_snr_db},
           {"rt60_s", e.rt60_s},
           {"room_dims_m", e.room_dims_m},
           {"nonlinearity", nl},
           {"augmentation", to_string(e.augmentation)},
           {"seed", e.seed}};
}

void from_json(const json& j, ManifestEntry& e) {
  e.id = j.at("id").get<std::string>();
  e.paths = j.at("paths").get<std::map<std::string, std::string>>();
  e.ser_db = j.at("ser_db").get<double>();
  e.snr_db = j.at("snr_db").get<double>();
  e.achieved_ser_db = j.value("achieved_ser_db", e.ser_db);
  e.achieved_snr_db = j.value("achieved_snr_db", e.snr_db);
  e.rt60_s = j.at("rt60_s").get<double>();
  e.room_dims_m = j.at("room_dims_m").get<Vec3>();
  from_json(j.at("nonlinearity"), e.nonlinearity);
  e.augmentation = augmentation_from_string(j.at("augmentation").get<std::string>());
  e.seed = j.at("seed").get<std::uint64_t>();
}

void write_manifest(const Manifest& m) {
  std::ofstream out(m.path, std::ios::trunc);
  if (!out) throw DataError("cannot write manifest " + m.path.string());
  for (const auto& e : m.entries) {
    json j;
    to_json(j, e);
    out << j.dump() << '\n';
  }
  if (!out) throw DataError("failed writing manifest " + m.path.string());
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  Manifest m;
  m.path = path;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      ManifestEntry e;
      from_json(json::parse(line), e);
      m.entries.push_back(std::move(e));
    } catch (const json::exception& ex) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return m;
}

SceneBundle synthesize_scene(const DatasetConfig& cfg, const SourcePools& pools,
                             std::uint64_t seed, std::size_t index, Augmentation aug) {
  if (pools.speech.empty() || pools.noise.empty()) {
    throw DataError("synthesize_scene: empty speech or noise pool");
  }
  const SceneConfig sc = sample_scene_config(cfg, seed, index, aug);
  Rng pick = derive_rng(sc.seed, 1);
  std::uniform_int_distribution<std::size_t> sp(0, pools.speech.size() - 1);
  std::uniform_int_distribution<std::size_t> np(0, pools.noise.size() - 1);
  const std::size_t near_idx = sp(pick);
  std::size_t far_idx = sp(pick);
  if (pools.speech.size() > 1) {
    while (far_idx == near_idx) far_idx = sp(pick);
  }
  const std::size_t noise_idx = np(pick);
  return mix_scene(pools.speech[near_idx], pools.speech[far_idx], pools.noise[noise_idx], sc);
}

std::vector<SceneBundle> synthesize_scenes(std::size_t n_scenes, const DatasetConfig& cfg,
                                           std::uint64_t seed, const SourcePools* pools_in) {
  SourcePools owned;
  if (n_scenes > 0 && pools_in == nullptr) owned = load_pools(cfg, seed);
  const SourcePools& pools = pools_in ? *pools_in : owned;
  const auto tags = assign_augmentations(n_scenes, seed);
  std::vector<SceneBundle> out(n_scenes);
  parallel_for(n_scenes, cfg.jobs, [&](std::size_t i) {
    out[i] = synthesize_scene(cfg, pools, seed, i, tags[i]);
  });
  return out;
}

Manifest generate_dataset(std::size_t n_scenes, const DatasetConfig& cfg,
                          const std::filesystem::path& out_dir, std::uint64_t seed,
                          const SourcePools* pools_in) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) {
    throw DataError("cannot create output directory " + out_dir.string());
  }
  Manifest m;
  m.path = out_dir / "manifest.jsonl";
  m.entries.resize(n_scenes);

  SourcePools owned;
  if (n_scenes > 0 && pools_in == nullptr) owned = load_pools(cfg, seed);
  const SourcePools& pools = pools_in ? *pools_in : owned;
  if (n_scenes > 0 && (pools.speech.empty() || pools.noise.empty())) {
    throw DataError("generate_dataset: empty speech or noise pool");
  }
  const auto tags = assign_augmentations(n_scenes, seed);

  parallel_for(n_scenes, cfg.jobs, [&](std::size_t i) {
    const SceneBundle b = synthesize_scene(cfg, pools, seed, i, tags[i]);
    const SceneConfig& sc = b.config;

    char id[32];
    std::snprintf(id, sizeof(id), "scene_%05zu", i);
    ManifestEntry e;
    e.id = id;
    std::filesystem::create_directories(out_dir / e.id);
    const std::map<std::string, const Waveform*> parts{
        {"mic", &b.mic},         {"farend", &b.farend},
        {"near_dry", &b.near_dry}, {"near_reverb", &b.near_reverb},
        {"echo", &b.echo},       {"noise", &b.noise},
        {"target", &b.target}};
    for (const auto& [name, w] : parts) {
      const std::string rel = e.id + "/" + name + ".wav";
      write_wav(out_dir / rel, *w, WavFormat::kFloat32);
      e.paths[name] = rel;
    }
    e.ser_db = sc.ser_db;
    e.snr_db = sc.snr_db;
    e.achieved_ser_db = b.achieved_ser_db;
    e.achieved_snr_db = b.achieved_snr_db;
    e.rt60_s = sc.room.rt60_s;
    e.room_dims_m = sc.room.dimensions;
    e.nonlinearity = sc.nonlinearity;
    e.augmentation = sc.augmentation;
    e.seed = sc.seed;
    m.entries[i] = std::move(e);
  });
  write_manifest(m);

  json meta;
  to_json(meta["config"], cfg);
  meta["n_scenes"] = n_scenes;
  meta["seed"] = seed;
  std::ofstream(out_dir / "dataset.json", std::ios::trunc) << meta.dump(2) << '\n';
  return m;
}

SceneBundle load_scene(const Manifest& m, const ManifestEntry& e) {
  auto get = [&](const std::string& name) {
    auto it = e.paths.find(name);
    if (it == e.paths.end()) {
      throw DataError("scene " + e.id + ": missing component '" + name + "'");
    }
    return read_wav(m.resolve(it->second));
  };
  SceneBundle b;
  b.mic = get("mic");
  b.farend = get("farend");
  b.echo = get("echo");
  b.near_reverb = get("near_reverb");
  b.near_dry = get("near_dry");
  b.noise = get("noise");
  b.target = get("target");
  b.achieved_ser_db = e.achieved_ser_db;
  b.achieved_snr_db = e.achieved_snr_db;
  b.config.ser_db = e.ser_db;
  b.config.snr_db = e.snr_db;
  b.config.augmentation = e.augmentation;
  b.config.nonlinearity = e.nonlinearity;
  b.config.room.dimensions = e.room_dims_m;
  b.config.room.rt60_s = e.rt60_s;
  b.config.seed = e.seed;
  b.config.duration_s = b.mic.duration_s();
  return b;
}

}  // namespace dvqe
