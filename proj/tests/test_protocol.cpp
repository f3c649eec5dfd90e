#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <type_traits>

#include <gtest/gtest.h>

#include "sqrs/experiments.hpp"
#include "sqrs/protocol.hpp"

namespace {

using sqrs::ChannelParams;
using sqrs::PreparedStateLabel;

constexpr double kPi = std::numbers::pi;

double binomial_sigma(double p, double n) { return std::sqrt(p * (1.0 - p) / n); }

TEST(RunSensing, SingleLabelAtQuarterTurnLandsInFirstCell) {
  sqrs::SensingOptions opts;
  opts.only_label = PreparedStateLabel::X0;
  const auto run = sqrs::run_sensing(ChannelParams::noiseless(), kPi / 2, 20'000, 1, opts);
  EXPECT_GT(run.counts.m(), 0U);
  EXPECT_EQ(run.counts.n[0], run.counts.m());
}

TEST(RunSensing, ZeroPhaseLeavesCellsSixAndSevenEmpty) {
  const auto run = sqrs::run_sensing(ChannelParams::noiseless(), 0.0, 100'000, 2);
  EXPECT_GT(run.counts.m(), 40'000U);
  EXPECT_EQ(run.counts.n[5], 0U);
  EXPECT_EQ(run.counts.n[6], 0U);
}

TEST(RunSensing, CountConservation) {
  for (const auto& params : {ChannelParams::noiseless(), ChannelParams::paper_noise()}) {
    const std::uint64_t pulses = 3'000'000;
    const auto run = sqrs::run_sensing(params, 1.3, pulses, 3);
    EXPECT_EQ(run.counts.m(), run.sensing_clicks);
    EXPECT_EQ(run.sensing_clicks + run.check_clicks + run.lost, pulses);
    EXPECT_EQ(run.eve_view.records.size(), run.sensing_clicks + run.check_clicks);
    std::uint64_t sensing = 0;
    for (std::size_t i = 0; i < run.eve_view.records.size(); ++i) {
      const auto& r = run.eve_view.records[i];
      EXPECT_TRUE((sqrs::DetectionEvent{r.slot, r.detector, r.path}.valid()));
      EXPECT_LT(r.slot, pulses);
      if (i > 0) EXPECT_LT(run.eve_view.records[i - 1].slot, r.slot);
      sensing += r.path == sqrs::Path::Sensing;
    }
    EXPECT_EQ(sensing, run.sensing_clicks);
  }
}

TEST(RunSensing, PaperScaleEventRate) {
  const auto params = ChannelParams::paper_noise();
  const auto pulses = sqrs::pulses_for_sensing_events(params, 2.1e4);
  const auto run = sqrs::run_sensing(params, 2.0, pulses, 4);
  EXPECT_NEAR(static_cast<double>(run.counts.m()), 2.1e4, 3.0 * std::sqrt(2.1e4));
}

TEST(RunSensing, RejectsZeroPulses) {
  EXPECT_THROW(sqrs::run_sensing(ChannelParams::noiseless(), 0.0, 0, 1), sqrs::Error);
  EXPECT_THROW(sqrs::run_calibration(ChannelParams::noiseless(), 0, 1), sqrs::Error);
  EXPECT_THROW(sqrs::run_check_path(ChannelParams::noiseless(), 0, 1), sqrs::Error);
}

TEST(RunSensing, UniformSource) {
  sqrs::SensingOptions opts;
  opts.record_alice_log = true;
  const auto run = sqrs::run_sensing(ChannelParams::noiseless(), 0.7, 100'000, 5, opts);
  ASSERT_EQ(run.alice_log.size(), 100'000U);
  std::array<double, 4> freq{};
  for (const auto& r : run.alice_log) freq[sqrs::label_index(r.label)] += 1.0;
  for (double f : freq) EXPECT_NEAR(f / 1e5, 0.25, 3.0 * binomial_sigma(0.25, 1e5));
}

TEST(RunSensing, FrequenciesFollowTable1OnNinePhases) {
  const auto phases = sqrs::nine_phase_grid();
  for (std::size_t k = 0; k < phases.size(); ++k) {
    const auto run = sqrs::run_sensing(ChannelParams::noiseless(), phases[k], 40'000, 100 + k);
    for (std::size_t i = 0; i < 8; ++i) {
      const auto label = sqrs::label_of_index(i);
      const double total = static_cast<double>(run.counts.label_total(label));
      const double want = sqrs::table1_probability(label, sqrs::outcome_of_index(i), phases[k]);
      EXPECT_NEAR(static_cast<double>(run.counts.n[i]) / total, want, 3.0 * binomial_sigma(want, total) + 1e-12)
          << "phase " << k << " cell " << i + 1;
    }
  }
}

TEST(RunSensing, PaperNoiseBackgroundAtPi) {
  const auto params = ChannelParams::paper_noise();
  const auto run = sqrs::run_sensing(params, kPi, sqrs::pulses_for_sensing_events(params, 2.1e4), 6);
  const auto& n = run.counts.n;
  const double f5 = static_cast<double>(n[4]) / static_cast<double>(run.counts.label_total(PreparedStateLabel::Y0));
  const double f8 = static_cast<double>(n[7]) / static_cast<double>(run.counts.label_total(PreparedStateLabel::Y1));
  EXPECT_NEAR(f5, 0.0732, 0.02);
  EXPECT_NEAR(f8, 0.067, 0.02);
}

TEST(RunSensing, DeterministicGivenSeed) {
  const auto params = ChannelParams::paper_noise();
  const auto a = sqrs::run_sensing(params, 2.2, 5'000'000, 8);
  const auto b = sqrs::run_sensing(params, 2.2, 5'000'000, 8);
  const auto c = sqrs::run_sensing(params, 2.2, 5'000'000, 9);
  EXPECT_EQ(a.counts, b.counts);
  ASSERT_EQ(a.eve_view.records.size(), b.eve_view.records.size());
  for (std::size_t i = 0; i < a.eve_view.records.size(); ++i) {
    EXPECT_EQ(a.eve_view.records[i].slot, b.eve_view.records[i].slot);
    EXPECT_EQ(a.eve_view.records[i].detector, b.eve_view.records[i].detector);
  }
  EXPECT_NE(a.counts, c.counts);
}

TEST(OutcomeCounts, AddAndMerge) {
  sqrs::OutcomeCounts a;
  a.add(PreparedStateLabel::Y1, 1, 3);
  a.add(PreparedStateLabel::X0, 0);
  sqrs::OutcomeCounts b;
  b.add(PreparedStateLabel::Y1, 0, 2);
  a += b;
  EXPECT_EQ(a.n[7], 3U);
  EXPECT_EQ(a.n[6], 2U);
  EXPECT_EQ(a.m(), 6U);
  EXPECT_EQ(a.label_total(PreparedStateLabel::Y1), 5U);
}

TEST(Calibration, NoiselessTableIsZero) {
  const auto table = sqrs::run_calibration(ChannelParams::noiseless(), 5'000, 10);
  for (double p : table.p_bg) EXPECT_EQ(p, 0.0);
}

TEST(Calibration, AliceUsesTheMatchedBasis) {
  const auto run = sqrs::run_calibration_detailed(ChannelParams::noiseless(), 2'000, 11, true);
  ASSERT_FALSE(run.alice_log.empty());
  for (const auto& r : run.alice_log) {
    ASSERT_TRUE(r.theta);
    const auto k = static_cast<int>(std::lround(*r.theta / (kPi / 2)));
    EXPECT_EQ(sqrs::basis_of(r.label), k % 2 == 0 ? sqrs::Basis::SigmaY : sqrs::Basis::SigmaX);
  }
}

TEST(Calibration, KnownFlipIsRecovered) {
  ChannelParams p;
  p.misalignment_prob = 0.05;
  const auto table = sqrs::run_calibration(p, 100'000, 12);
  // Each cell sees ~50000 events.
  for (double bg : table.p_bg) EXPECT_NEAR(bg, 0.05, 3.0 * binomial_sigma(0.05, 5e4));
}

TEST(Calibration, PaperNoiseTableNearMeasuredValues) {
  const auto params = ChannelParams::paper_noise();
  const auto pulses = sqrs::pulses_for_sensing_events(params, 2.1e4);
  const auto table = sqrs::run_calibration(params, pulses / 4, 13);
  const auto reference = sqrs::CalibrationTable::reference();
  for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(table.p_bg[i], reference.p_bg[i], 0.02) << "cell " << i + 1;
}

TEST(Calibration, TooFewPulsesIsInsufficientStatistics) {
  try {
    sqrs::run_calibration(ChannelParams::paper_noise(), 100, 14);
    FAIL() << "expected an error";
  } catch (const sqrs::Error& e) {
    EXPECT_EQ(e.code(), sqrs::ErrorCode::InsufficientStatistics);
  }
}

// Doubling the calibration pulses halves the variance of every background
// estimate; variances are pooled over the eight cells.
TEST(Calibration, VarianceHalvesWhenPulsesDouble) {
  ChannelParams p;
  p.misalignment_prob = 0.1;
  auto pooled_variance = [&](std::uint64_t pulses, std::uint64_t seed_base) {
    const int runs = 300;
    std::array<double, 8> sum{};
    std::array<double, 8> sum_sq{};
    for (int r = 0; r < runs; ++r) {
      const auto t = sqrs::run_calibration(p, pulses, seed_base + static_cast<std::uint64_t>(r));
      for (std::size_t i = 0; i < 8; ++i) {
        sum[i] += t.p_bg[i];
        sum_sq[i] += t.p_bg[i] * t.p_bg[i];
      }
    }
    double v = 0.0;
    for (std::size_t i = 0; i < 8; ++i) v += (sum_sq[i] - sum[i] * sum[i] / runs) / (runs - 1);
    return v / 8.0;
  };
  const double ratio = pooled_variance(500, 1000) / pooled_variance(1000, 5000);
  EXPECT_GT(ratio, 1.7);
  EXPECT_LT(ratio, 2.3);
}

TEST(Qber, NoiselessIsZero) {
  const auto r = sqrs::run_check_path(ChannelParams::noiseless(), 100'000, 20);
  EXPECT_GT(r.sifted_count, 40'000U);
  EXPECT_EQ(r.error_count, 0U);
  EXPECT_EQ(r.qber(), 0.0);
}

TEST(Qber, PaperNoiseBelowThreshold) {
  const auto r = sqrs::run_check_path(ChannelParams::paper_noise(), 20'000'000, 21);
  EXPECT_GT(r.sifted_count, 10'000U);
  EXPECT_LT(r.qber(), 0.06);
}

// Four states x two Eve bases x her outcome: a wrong-basis guess (1/2)
// randomizes the sifted bit (1/2), so the error rate is 1/4.
TEST(Qber, InterceptResendGivesQuarter) {
  const auto r = sqrs::run_check_path(ChannelParams::noiseless(), 250'000, 22, sqrs::InterceptResend{});
  EXPECT_GE(r.sifted_count, 100'000U);
  EXPECT_NEAR(r.qber(), 0.25, 0.02);
  EXPECT_NEAR(r.qber(), 0.25, 3.0 * binomial_sigma(0.25, static_cast<double>(r.sifted_count)));
}

TEST(Qber, EmptyReportIsAnError) {
  EXPECT_THROW(sqrs::QberReport{}.qber(), sqrs::Error);
}

TEST(InterceptResend, MatchingBasisLeavesStateAlone) {
  sqrs::Rng rng(30);
  const sqrs::InterceptResend eve{sqrs::EveBasisStrategy::AlwaysY};
  for (auto label : {PreparedStateLabel::Y0, PreparedStateLabel::Y1}) {
    for (int i = 0; i < 1000; ++i) {
      EXPECT_TRUE(sqrs::same_ray(eve.intercept(sqrs::prepare(label), rng), sqrs::prepare(label)));
    }
  }
}

TEST(InterceptResend, WrongBasisRandomizesBob) {
  sqrs::Rng rng(31);
  const sqrs::InterceptResend eve{sqrs::EveBasisStrategy::AlwaysX};
  const int n = 100'000;
  double ones = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto forwarded = eve.intercept(sqrs::prepare(PreparedStateLabel::Y0), rng);
    ones += rng.uniform() < sqrs::born_probability(forwarded, {sqrs::Basis::SigmaY, 1});
  }
  EXPECT_NEAR(ones / n, 0.5, 3.0 * binomial_sigma(0.5, n));
}

TEST(InterceptResend, ZeroFractionIsNoAttack) {
  sqrs::Rng rng(32);
  const sqrs::InterceptResend eve{sqrs::EveBasisStrategy::AlwaysX, 0.0};
  for (int i = 0; i < 100; ++i) {
    EXPECT_TRUE(sqrs::same_ray(eve.intercept(sqrs::prepare(PreparedStateLabel::Y0), rng),
                               sqrs::prepare(PreparedStateLabel::Y0)));
  }
}

TEST(EveRatio, Examples) {
  EXPECT_THROW(sqrs::eve_ratio(sqrs::EveView{}), sqrs::Error);
  try {
    sqrs::eve_ratio(sqrs::EveView{{{0, 3, sqrs::Path::Check}}});
  } catch (const sqrs::Error& e) {
    EXPECT_EQ(e.code(), sqrs::ErrorCode::UndefinedRatio);
  }
  sqrs::EveView all_first;
  for (std::uint64_t s = 0; s < 10; ++s) all_first.records.push_back({s, 1, sqrs::Path::Sensing});
  all_first.records.push_back({10, 4, sqrs::Path::Check});
  EXPECT_EQ(sqrs::eve_ratio(all_first), 1.0);
  EXPECT_THROW(sqrs::eve_ratio(sqrs::OutcomeCounts{}), sqrs::Error);
}

TEST(EveRatio, IdealProtocolGivesHalfAtAnyPhase) {
  for (double phi : {0.0, 0.4, kPi / 2, 2.5, kPi, 5.515, 6.013}) {
    const auto run = sqrs::run_sensing(ChannelParams::noiseless(), phi, 100'000, 40);
    const double ratio = sqrs::eve_ratio(run.eve_view);
    EXPECT_EQ(ratio, sqrs::eve_ratio(run.counts));
    EXPECT_NEAR(ratio, 0.5, 3.0 * binomial_sigma(0.5, static_cast<double>(run.counts.m()))) << "phi " << phi;
  }
}

// The Eve-visible record has exactly slot, detector and path.
static_assert(std::is_aggregate_v<sqrs::EveRecord>);
constexpr bool eve_record_has_three_fields() {
  auto [slot, detector, path] = sqrs::EveRecord{};
  return sizeof(slot) + sizeof(detector) + sizeof(path) > 0;
}
static_assert(eve_record_has_three_fields());

// Plug-in mutual information in nats; under independence 2 N I is
// chi-squared with (rows-1)(cols-1) degrees of freedom.
double plugin_mutual_information(const std::map<std::pair<int, int>, double>& joint, double n) {
  std::map<int, double> a;
  std::map<int, double> b;
  for (const auto& [key, c] : joint) {
    a[key.first] += c;
    b[key.second] += c;
  }
  double mi = 0.0;
  for (const auto& [key, c] : joint) mi += c / n * std::log(c * n / (a[key.first] * b[key.second]));
  return mi;
}

constexpr double kChiSq3At999 = 16.27;  // 99.9% point, 3 degrees of freedom

TEST(InformationPartition, AnnouncedDetectorCarriesNoLabelInformationWithoutPhi) {
  // Pooled over the nine-phase grid the sigma_y click is independent of the
  // prepared state; only knowledge of phi links the two.
  std::map<std::pair<int, int>, double> joint;
  double n = 0.0;
  sqrs::SensingOptions opts;
  opts.record_alice_log = true;
  const auto phases = sqrs::nine_phase_grid();
  for (std::size_t k = 0; k < phases.size(); ++k) {
    const auto run = sqrs::run_sensing(ChannelParams::noiseless(), phases[k], 40'000, 50 + k, opts);
    for (const auto& r : run.alice_log) {
      if (r.path != sqrs::Path::Sensing) continue;
      joint[{r.detector, static_cast<int>(sqrs::label_index(r.label))}] += 1.0;
      n += 1.0;
    }
  }
  EXPECT_LT(2.0 * n * plugin_mutual_information(joint, n), kChiSq3At999);
}

TEST(InformationPartition, PathIsIndependentOfLabel) {
  std::map<std::pair<int, int>, double> joint;
  sqrs::SensingOptions opts;
  opts.record_alice_log = true;
  const auto run = sqrs::run_sensing(ChannelParams::paper_noise(), 1.0, 200'000'000, 60, opts);
  for (const auto& r : run.alice_log) joint[{static_cast<int>(r.path), static_cast<int>(sqrs::label_index(r.label))}] += 1.0;
  const auto n = static_cast<double>(run.alice_log.size());
  ASSERT_GT(n, 1e5);
  EXPECT_LT(2.0 * n * plugin_mutual_information(joint, n), kChiSq3At999);
}

}  // namespace
