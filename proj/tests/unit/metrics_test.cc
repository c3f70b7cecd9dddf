#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "dvqe/aec/adaptive_filter.h"
#include "dvqe/common/error.h"
#include "dvqe/metrics/estoi.h"
#include "dvqe/metrics/evaluate.h"
#include "dvqe/metrics/rank.h"
#include "dvqe/metrics/table.h"
#include "dvqe/scene/dataset.h"
#include "test_support.h"

namespace dvqe {
namespace {

using testing::white_noise;

Waveform speech(double seconds, std::uint64_t seed) {
  Rng rng = derive_rng(seed, 0);
  return synthetic_speech(seconds, rng);
}

Waveform add(const Waveform& a, const Waveform& b, double gain = 1.0) {
  Waveform out = a;
  for (std::size_t i = 0; i < a.size(); ++i) out.samples[i] += gain * b.samples[i];
  return out;
}

double power(const Waveform& w) {
  double p = 0.0;
  for (double v : w.samples) p += v * v;
  return p / static_cast<double>(w.size());
}

// Noise scaled to `snr_db` below the power of `ref`.
Waveform noise_at(const Waveform& ref, double snr_db, std::uint64_t seed) {
  Waveform n = white_noise(ref.size(), 1.0, seed);
  const double g = std::sqrt(power(ref) / power(n) * std::pow(10.0, -snr_db / 10.0));
  for (double& v : n.samples) v *= g;
  return n;
}

TEST(Estoi, IdentityAndIndependentNoise) {
  const auto x = speech(4.0, 1);
  EXPECT_NEAR(estoi(x, x), 1.0, 1e-12);
  EXPECT_LT(std::abs(estoi(x, white_noise(x.size(), 0.1, 2))), 0.2);
}

TEST(Estoi, MonotoneInSnr) {
  const auto x = speech(4.0, 3);
  const auto n = noise_at(x, 0.0, 4);
  auto at = [&](double snr) { return estoi(x, add(x, n, std::pow(10.0, -snr / 20.0))); };
  const double hi = at(20.0), mid = at(0.0), lo = at(-10.0);
  EXPECT_GE(hi, mid);
  EXPECT_GE(mid, lo);
  EXPECT_LE(hi, 1.0);
  EXPECT_GE(lo, -1.0);
}

TEST(Estoi, JointScalingInvariance) {
  const auto x = speech(4.0, 5);
  const auto y = add(x, noise_at(x, 5.0, 6));
  Waveform x3 = x, y3 = y;
  for (double& v : x3.samples) v *= 3.0;
  for (double& v : y3.samples) v *= 3.0;
  EXPECT_NEAR(estoi(x3, y3), estoi(x, y), 1e-9);
}

TEST(Estoi, RejectsShortOrMismatchedInput) {
  const auto x = speech(4.0, 7);
  EXPECT_THROW(estoi(x, white_noise(x.size() - 1, 0.1, 1)), DataError);
  const auto tiny = speech(0.3, 8);
  EXPECT_THROW(estoi(tiny, tiny), DataError);
}

TEST(Estoi, ThirdOctaveMatrixMatchesEdgeRule) {
  const int fs = 10000, nfft = 512, bands = 15;
  const double min_freq = 150.0;
  const auto obm = estoi_detail::third_octave_matrix(fs, nfft, bands, min_freq);
  ASSERT_EQ(obm.size(), 15u);
  const std::size_t n_bins = nfft / 2 + 1;
  auto nearest = [&](double f) {
    std::size_t best = 0;
    double err = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double e = std::abs(k * static_cast<double>(fs) / nfft - f);
      if (e < err) {
        err = e;
        best = k;
      }
    }
    return best;
  };
  for (int b = 0; b < bands; ++b) {
    ASSERT_EQ(obm[b].size(), n_bins);
    const std::size_t lo = nearest(min_freq * std::pow(2.0, (2.0 * b - 1.0) / 6.0));
    const std::size_t hi = nearest(min_freq * std::pow(2.0, (2.0 * b + 1.0) / 6.0));
    for (std::size_t k = 0; k < n_bins; ++k) {
      EXPECT_EQ(obm[b][k], (k >= lo && k < hi) ? 1.0 : 0.0) << "band " << b << " bin " << k;
    }
  }
}

TEST(Estoi, SilentFramesAreRemoved) {
  const auto a = white_noise(2560, 1.0, 9);
  std::vector<double> x(a.samples), y(a.samples);
  x.insert(x.begin() + 1280, 2560, 0.0);
  y.insert(y.begin() + 1280, 2560, 0.5);
  const auto [xs, ys] = estoi_detail::remove_silent_frames(x, y, 40.0, 256, 128);
  EXPECT_EQ(xs.size(), ys.size());
  EXPECT_LT(xs.size(), x.size() - 2000);
  const auto [xa, ya] = estoi_detail::remove_silent_frames(a.samples, a.samples, 40.0, 256, 128);
  EXPECT_GE(xa.size(), a.size() - 256);
}

// Echo over the whole scene, near-end speech in the second half only.
SceneBundle linear_echo_scene(std::uint64_t seed) {
  const std::size_t n = 64000;
  SceneBundle b;
  b.farend = white_noise(n, 0.1, seed);
  const auto h = white_noise(32, 0.3, seed + 1).samples;
  b.echo = Waveform::zeros(n);
  b.echo.samples = convolve(b.farend.samples, h, n);
  const auto s = speech(2.0, seed + 2);
  b.target = Waveform::zeros(n);
  for (std::size_t i = 0; i < s.size() && n / 2 + i < n; ++i) b.target.samples[n / 2 + i] = s.samples[i];
  b.noise = Waveform::zeros(n);
  b.near_dry = b.target;
  b.near_reverb = b.target;
  b.mic = add(b.target, b.echo);
  return b;
}

TEST(Evaluate, TargetPassThrough) {
  const auto b = linear_echo_scene(10);
  const auto row = evaluate_scene(b, b.target, "s", "oracle");
  EXPECT_EQ(row.condition, TalkCondition::kDoubleTalk);
  EXPECT_NEAR(*row.estoi, 1.0, 1e-12);
  EXPECT_EQ(*row.output_snr_db, std::numeric_limits<double>::infinity());
  EXPECT_EQ(*row.residual_echo_db, -std::numeric_limits<double>::infinity());
  // Speech pauses more than 40 dB down count as echo-only, so the target
  // leaves a small finite output there.
  EXPECT_GT(*row.erle_db, 40.0);
}

TEST(Evaluate, UnprocessedMatchesDirectComputation) {
  const auto b = linear_echo_scene(11);
  const auto row = evaluate_scene(b, b.mic);
  EXPECT_NEAR(*row.estoi, estoi(b.target, b.mic), 1e-12);
  double pt = 0.0, pe = 0.0;
  for (std::size_t i = 0; i < b.mic.size(); ++i) {
    pt += b.target.samples[i] * b.target.samples[i];
    pe += b.echo.samples[i] * b.echo.samples[i];
  }
  EXPECT_NEAR(*row.output_snr_db, 10.0 * std::log10(pt / pe), 1e-9);
  EXPECT_EQ(*row.erle_db, 0.0);
  const auto mask = echo_only_mask(b);
  double pm = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) {
      pm += b.echo.samples[i] * b.echo.samples[i];
      ++count;
    }
  }
  ASSERT_GT(count, 0u);
  EXPECT_NEAR(*row.residual_echo_db, 10.0 * std::log10(pm / count), 1e-9);
}

TEST(Evaluate, EchoOnlyMaskFollowsActivity) {
  const auto b = linear_echo_scene(12);
  const auto mask = echo_only_mask(b);
  EXPECT_TRUE(mask[1000]);
  EXPECT_TRUE(mask[31000]);
  std::size_t loudest = 0;
  for (std::size_t i = 0; i < b.target.size(); ++i) {
    if (std::abs(b.target.samples[i]) > std::abs(b.target.samples[loudest])) loudest = i;
  }
  EXPECT_FALSE(mask[loudest]);
}

TEST(Evaluate, NlmsBeatsUnprocessedErle) {
  const auto b = linear_echo_scene(13);
  const auto out = nlms_cancel(b.mic, b.farend, 64, 0.5);
  const auto nlms = evaluate_scene(b, out.residual);
  const auto raw = evaluate_scene(b, b.mic);
  EXPECT_GT(*nlms.erle_db, *raw.erle_db + 10.0);
}

TEST(Evaluate, ConditionsAndErrors) {
  auto b = linear_echo_scene(14);
  auto no_near = b;
  no_near.target = Waveform::zeros(b.mic.size());
  EXPECT_EQ(talk_condition(no_near), TalkCondition::kFarendSingleTalk);
  const auto row = evaluate_scene(no_near, no_near.echo);
  EXPECT_FALSE(row.estoi.has_value());
  EXPECT_FALSE(row.output_snr_db.has_value());
  auto no_far = b;
  no_far.echo = Waveform::zeros(b.mic.size());
  EXPECT_EQ(talk_condition(no_far), TalkCondition::kNearendSingleTalk);
  EXPECT_FALSE(evaluate_scene(no_far, no_far.mic).erle_db.has_value());
  EXPECT_THROW(evaluate_scene(b, white_noise(10, 0.1, 1)), DataError);
  auto missing = b;
  missing.target = Waveform{};
  EXPECT_THROW(evaluate_scene(missing, b.mic), DataError);
}

TEST(Rank, BlindTestTableAverages) {
  // Orderings read off the six metric columns of the blind-test table.
  const std::vector<MethodScores> methods{
      {"DeepVQE", {{"dt_echo", 4.64}, {"dt_other", 3.84}, {"stfe_echo", 4.37},
                   {"stne_other", 3.93}, {"stne_sig", 3.31}, {"stne_bak", 4.03}}},
      {"DiffVQE-S", {{"dt_echo", 4.61}, {"dt_other", 4.07}, {"stfe_echo", 4.41},
                     {"stne_other", 4.25}, {"stne_sig", 3.42}, {"stne_bak", 4.05}}},
      {"DiffVQE", {{"dt_echo", 4.62}, {"dt_other", 4.10}, {"stfe_echo", 4.43},
                   {"stne_other", 4.26}, {"stne_sig", 3.43}, {"stne_bak", 4.07}}}};
  const auto r = rank_methods(methods);
  EXPECT_NEAR(r.average.at("DeepVQE"), 2.67, 0.005);
  EXPECT_NEAR(r.average.at("DiffVQE-S"), 2.17, 0.005);
  EXPECT_NEAR(r.average.at("DiffVQE"), 1.17, 0.005);
  EXPECT_NEAR(r.average.at("DeepVQE"), 16.0 / 6.0, 1e-12);
}

TEST(Rank, DominanceSplitAndTies) {
  const std::vector<MethodScores> dom{{"a", {{"x", 2.0}, {"y", 5.0}}},
                                      {"b", {{"x", 1.0}, {"y", 4.0}}}};
  EXPECT_EQ(rank_methods(dom).average.at("a"), 1.0);
  EXPECT_EQ(rank_methods(dom).average.at("b"), 2.0);
  const std::vector<MethodScores> split{{"a", {{"x", 2.0}, {"y", 4.0}}},
                                        {"b", {{"x", 1.0}, {"y", 5.0}}}};
  EXPECT_EQ(rank_methods(split).average.at("a"), 1.5);
  EXPECT_EQ(rank_methods(split).average.at("b"), 1.5);
  EXPECT_EQ(rank_methods(dom, {"x"}).per_metric.at("a").at("x"), 2.0);
  EXPECT_EQ(rank_values({3.0, 1.0, 3.0, 2.0}, true), (std::vector<double>{1.5, 4.0, 1.5, 3.0}));
  EXPECT_EQ(rank_values({3.0, 1.0, 3.0, 2.0}, false), (std::vector<double>{3.5, 1.0, 3.5, 2.0}));
}

TEST(Rank, RankSumsAndBounds) {
  Rng rng = derive_rng(15, 0);
  std::uniform_int_distribution<int> v(0, 3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<MethodScores> methods(5);
    for (int m = 0; m < 5; ++m) {
      methods[m].method = "m" + std::to_string(m);
      for (int k = 0; k < 4; ++k) methods[m].metrics["k" + std::to_string(k)] = v(rng);
    }
    const auto r = rank_methods(methods);
    for (const auto& metric : r.metrics) {
      double sum = 0.0;
      for (const auto& m : methods) sum += r.per_metric.at(m.method).at(metric);
      EXPECT_EQ(sum, 15.0);
    }
    for (const auto& [m, avg] : r.average) {
      EXPECT_GE(avg, 1.0);
      EXPECT_LE(avg, 5.0);
    }
  }
}

TEST(Rank, Errors) {
  EXPECT_THROW(rank_methods({{"a", {{"x", 1.0}}}}), ConfigError);
  EXPECT_THROW(rank_methods({{"a", {{"x", 1.0}}}, {"b", {{"y", 1.0}}}}), ConfigError);
  EXPECT_THROW(rank_methods({{"a", {{"x", 1.0}}}, {"a", {{"x", 2.0}}}}), ConfigError);
  EXPECT_THROW(rank_methods({{"a", {{"x", std::nan("")}}}, {"b", {{"x", 1.0}}}}), ConfigError);
}

MetricRow make_row(const std::string& scene, const std::string& method, double estoi_v,
                   double res, TalkCondition c = TalkCondition::kDoubleTalk) {
  MetricRow r;
  r.scene_id = scene;
  r.method = method;
  r.condition = c;
  r.estoi = estoi_v;
  r.output_snr_db = estoi_v * 10.0;
  r.erle_db = 5.0;
  r.residual_echo_db = res;
  return r;
}

TEST(Table, MergeExternal) {
  std::vector<MetricRow> rows{make_row("s1", "a", 0.5, -30), make_row("s1", "b", 0.6, -20),
                              make_row("s2", "a", 0.7, -30)};
  merge_external(rows, nlohmann::json::parse(R"([
    {"scene_id": "s1", "metric_name": "pesq", "value": 2.5},
    {"scene_id": "s2", "metric_name": "pesq", "value": 3.0, "method": "a"}])"));
  EXPECT_EQ(*rows[0].get("pesq"), 2.5);
  EXPECT_EQ(*rows[1].get("pesq"), 2.5);
  EXPECT_EQ(*rows[2].get("pesq"), 3.0);
  EXPECT_EQ(metric_columns(rows).back(), "pesq");
  EXPECT_THROW(merge_external(rows, nlohmann::json::parse(
                                        R"([{"scene_id": "s9", "metric_name": "x", "value": 1}])")),
               DataError);
  EXPECT_THROW(merge_external(rows, nlohmann::json::parse(
                                        R"([{"scene_id": "s1", "metric_name": "estoi", "value": 1}])")),
               DataError);
  EXPECT_THROW(merge_external(rows, nlohmann::json::parse(R"([{"scene_id": "s1"}])")), DataError);
  EXPECT_THROW(merge_external(rows, nlohmann::json::object()), DataError);
}

TEST(Table, SummaryIgnoresNonFiniteValues) {
  std::vector<MetricRow> rows{make_row("s1", "a", 0.5, -30),
                              make_row("s2", "a", 0.7, -std::numeric_limits<double>::infinity(),
                                       TalkCondition::kFarendSingleTalk)};
  const auto s = summarize(rows);
  EXPECT_NEAR(s.at("a").at("all").at("estoi").mean, 0.6, 1e-15);
  EXPECT_EQ(s.at("a").at("all").at("residual_echo_db").count, 1u);
  EXPECT_EQ(s.at("a").at("all").at("residual_echo_db").mean, -30.0);
  EXPECT_EQ(s.at("a").at("DT").at("estoi").mean, 0.5);
  EXPECT_EQ(s.at("a").at("STFE").at("estoi").mean, 0.7);
  const auto csv = summary_to_csv(s);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "method,condition,estoi,output_snr_db,erle_db,residual_echo_db");
}

TEST(Table, RankRowsUsesMetricDirection) {
  std::vector<MetricRow> rows{make_row("s1", "a", 0.5, -30), make_row("s1", "b", 0.6, -20)};
  rows[1].erle_db = 5.0;
  const auto r = rank_rows(rows);
  EXPECT_EQ(r.per_metric.at("a").at("residual_echo_db"), 1.0);
  EXPECT_EQ(r.per_metric.at("b").at("estoi"), 1.0);
  EXPECT_EQ(r.per_metric.at("a").at("erle_db"), 1.5);
  rows.push_back(make_row("s2", "a", 0.5, -30));
  EXPECT_THROW(rank_rows(rows), ConfigError);
}

TEST(Table, MetricsMissingForSomeMethodAreNotRanked) {
  std::vector<MetricRow> rows{make_row("s1", "a", 0.5, -30), make_row("s1", "b", 0.6, -20)};
  rows[0].residual_echo_db = -std::numeric_limits<double>::infinity();
  const auto scores = method_scores(rows);
  EXPECT_EQ(scores[0].metrics.count("residual_echo_db"), 0u);
  EXPECT_EQ(scores[0].metrics.count("estoi"), 1u);
}

TEST(Table, CsvAndJson) {
  std::vector<MetricRow> rows{make_row("s1", "a", 0.5, -std::numeric_limits<double>::infinity())};
  rows[0].erle_db.reset();
  const auto csv = rows_to_csv(rows);
  EXPECT_EQ(csv, "scene_id,method,condition,estoi,output_snr_db,erle_db,residual_echo_db\n"
                 "s1,a,DT,0.5,5,,-inf\n");
  const auto j = report_json(rows, summarize(rows), nullptr);
  EXPECT_EQ(j["rows"][0]["residual_echo_db"], "-inf");
  EXPECT_TRUE(j["rows"][0]["erle_db"].is_null());
  EXPECT_FALSE(j.contains("ranks"));
  EXPECT_EQ(format_metric(0.1), "0.1");
  EXPECT_EQ(format_metric(std::nan("")), "nan");
}

}  // namespace
}  // namespace dvqe
