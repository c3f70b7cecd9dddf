#include <cmath>

#include <gtest/gtest.h>

#include "dvqe/aec/gcc_phat.h"
#include "dvqe/metrics/estoi.h"
#include "dvqe/signal/stft.h"
#include "dvqe/signal/wav_io.h"
#include "test_support.h"

namespace dvqe {
namespace {

using nlohmann::json;

Waveform fixture_wav(const std::string& name) {
  return read_wav(testing::fixture_dir() / "wav" / name);
}

class Fixtures : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { doc_ = new json(testing::load_reference_fixture()); }
  static void TearDownTestSuite() {
    delete doc_;
    doc_ = nullptr;
  }
  static json* doc_;
};

json* Fixtures::doc_ = nullptr;

TEST_F(Fixtures, SchemaVersion) {
  EXPECT_EQ((*doc_)["schema_version"], 1);
  EXPECT_EQ((*doc_)["stft"]["frame_length"], 512);
  EXPECT_EQ((*doc_)["stft"]["hop"], 128);
}

void expect_frames_match(const json& ref_frames, const Spectrogram& spec, std::size_t first) {
  for (std::size_t i = 0; i < ref_frames.size(); ++i) {
    const auto& row = ref_frames[i];
    ASSERT_EQ(row.size(), 257u);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < 257; ++k) {
      const cplx ref(row[k][0].get<double>(), row[k][1].get<double>());
      num += std::norm(spec.at(k, first + i) - ref);
      den += std::norm(ref);
    }
    EXPECT_LE(std::sqrt(num / std::max(den, 1e-300)), 1e-5) << "frame " << first + i;
  }
}

TEST_F(Fixtures, StftMatchesReference) {
  for (const auto& [name, entry] : (*doc_)["stft"]["files"].items()) {
    SCOPED_TRACE(name);
    const auto w = fixture_wav(entry["file"]);
    ASSERT_EQ(w.size(), entry["num_samples"].get<std::size_t>());
    const auto spec = stft(w);
    ASSERT_EQ(spec.frames(), entry["frames"].get<std::size_t>());
    expect_frames_match(entry["first_frames"], spec, 0);
    expect_frames_match(entry["last_frames"], spec, spec.frames() - 3);
    const auto& energy = entry["frame_energy"];
    for (std::size_t l = 0; l < spec.frames(); ++l) {
      double e = 0.0;
      for (std::size_t k = 0; k < 257; ++k) e += std::norm(spec.at(k, l));
      const double ref = energy[l].get<double>();
      EXPECT_NEAR(e, ref, 1e-5 * std::max(ref, 1e-12)) << "frame " << l;
    }
  }
}

TEST_F(Fixtures, EstoiMatchesReference) {
  for (const auto& entry : (*doc_)["estoi"]) {
    const auto clean = fixture_wav(entry["clean"]);
    const auto degraded = fixture_wav(entry["degraded"]);
    EXPECT_NEAR(estoi(clean, degraded), entry["value"].get<double>(), 1e-6)
        << entry["clean"] << " vs " << entry["degraded"];
  }
}

TEST_F(Fixtures, GccPhatMatchesReference) {
  for (const auto& entry : (*doc_)["gcc_phat"]) {
    const auto mic = fixture_wav(entry["mic"]);
    const auto ref = fixture_wav(entry["ref"]);
    EXPECT_EQ(gcc_phat_delay(mic, ref, entry["max_lag"].get<std::size_t>()),
              entry["lag"].get<long>())
        << entry["mic"];
  }
}

}  // namespace
}  // namespace dvqe
