#pragma once

// Alice/Bob/Eve rounds of the remote-sensing protocol over the channel model.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "sqrs/channel.hpp"
#include "sqrs/error.hpp"
#include "sqrs/qubit.hpp"
#include "sqrs/rng.hpp"

namespace sqrs {

/// Event counters n_1..n_8 of the sensing path, stored zero-based
/// (n[0] is n_1; see outcome_index).
struct OutcomeCounts {
  std::array<std::uint64_t, 8> n{};

  std::uint64_t m() const noexcept {
    std::uint64_t total = 0;
    for (auto v : n) total += v;
    return total;
  }

  std::uint64_t label_total(PreparedStateLabel label) const noexcept {
    const auto i = 2 * label_index(label);
    return n[i] + n[i + 1];
  }

  void add(PreparedStateLabel label, int outcome, std::uint64_t count = 1) noexcept {
    n[outcome_index(label, outcome)] += count;
  }

  OutcomeCounts& operator+=(const OutcomeCounts& other) noexcept {
    for (std::size_t i = 0; i < n.size(); ++i) n[i] += other.n[i];
    return *this;
  }

  bool operator==(const OutcomeCounts&) const = default;
};

/// Background probabilities p_i^theta, each measured at the phase where the
/// ideal p_i vanishes.
struct CalibrationTable {
  static constexpr double kPi = std::numbers::pi;
  static constexpr std::array<double, 8> kPhase = {3 * kPi / 2, kPi / 2, kPi / 2, 3 * kPi / 2,
                                                   kPi,         0.0,     0.0,     kPi};

  std::array<double, 8> p_bg{};

  /// Values measured over 50 km with ~2.1e4 calibration pulses.
  static CalibrationTable reference() {
    return {{0.0229, 0.0447, 0.0394, 0.0161, 0.0732, 0.0164, 0.0118, 0.067}};
  }

  void validate() const {
    for (double p : p_bg) {
      if (!(p >= 0.0 && p < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "background probability must lie in [0, 1)");
      }
    }
  }
};

/// What Bob announces over the classical channel for one click.
struct EveRecord {
  std::uint64_t slot = 0;
  int detector = 1;
  Path path = Path::Sensing;
};

/// Everything visible on the classical channel. Deliberately has no field
/// that names Alice's prepared state or basis.
struct EveView {
  std::vector<EveRecord> records;
};

/// Alice's private log: her label joined with Bob's announcement.
struct AliceRecord {
  std::uint64_t slot = 0;
  PreparedStateLabel label = PreparedStateLabel::X0;
  std::optional<double> theta;  // set for calibration pulses
  int detector = 1;
  Path path = Path::Sensing;
};

struct QberReport {
  std::uint64_t sifted_count = 0;
  std::uint64_t error_count = 0;

  double qber() const {
    if (sifted_count == 0) throw Error(ErrorCode::InsufficientData, "no sifted events");
    return static_cast<double>(error_count) / static_cast<double>(sifted_count);
  }
};

enum class EveBasisStrategy { Uniform, AlwaysX, AlwaysY };

/// Intercept-resend attack: Eve measures the transiting qubit in a chosen
/// basis and forwards the eigenstate she observed.
struct InterceptResend {
  EveBasisStrategy strategy = EveBasisStrategy::Uniform;
  double fraction = 1.0;  // share of pulses attacked

  QubitState intercept(const QubitState& state, Rng& rng) const {
    if (fraction < 1.0 && !rng.bernoulli(fraction)) return state;
    Basis basis = Basis::SigmaX;
    switch (strategy) {
      case EveBasisStrategy::Uniform: basis = rng.index(2) == 0 ? Basis::SigmaX : Basis::SigmaY; break;
      case EveBasisStrategy::AlwaysX: basis = Basis::SigmaX; break;
      case EveBasisStrategy::AlwaysY: basis = Basis::SigmaY; break;
    }
    const double p0 = born_probability(state, {basis, 0});
    const int outcome = rng.uniform() < p0 ? 0 : 1;
    return prepare(eigenstate_label(basis, outcome));
  }
};

struct SensingOptions {
  std::optional<InterceptResend> attack;
  std::optional<PreparedStateLabel> only_label;  // Alice sends this state every time
  bool record_alice_log = false;
};

struct SensingRun {
  OutcomeCounts counts;
  EveView eve_view;
  std::vector<AliceRecord> alice_log;
  std::uint64_t sensing_clicks = 0;
  std::uint64_t check_clicks = 0;
  std::uint64_t lost = 0;
};

namespace detail {

// Invokes on_active(slot) for every slot in [0, num_pulses) that produces a
// click, skipping the empty ones geometrically.
template <class OnActive>
void for_each_active_slot(double p_active, std::uint64_t num_pulses, Rng& rng, OnActive&& on_active) {
  std::uint64_t slot = 0;
  while (slot < num_pulses) {
    const std::uint64_t skip = rng.geometric(p_active);
    if (skip >= num_pulses - slot) break;
    slot += skip;
    on_active(slot);
    ++slot;
  }
}

// Passive 50/50 basis choice in front of detectors 3-6.
inline std::array<double, 4> check_probs(const QubitState& state) {
  const double px = born_probability(state, {Basis::SigmaX, 0});
  const double py = born_probability(state, {Basis::SigmaY, 0});
  return {0.5 * px, 0.5 * (1.0 - px), 0.5 * py, 0.5 * (1.0 - py)};
}

inline void require_pulses(std::uint64_t num_pulses) {
  if (num_pulses == 0) throw Error(ErrorCode::InvalidArgument, "num_pulses must be > 0");
}

}  // namespace detail

/// Emitted pulses needed for an expected `target_events` sensing-path clicks.
inline std::uint64_t pulses_for_sensing_events(const ChannelParams& params, double target_events) {
  const double rate = params.path1_split * activity_probability(params, kSensingDetectors);
  if (!(rate > 0.0)) throw Error(ErrorCode::InvalidArgument, "sensing path never clicks");
  return static_cast<std::uint64_t>(std::ceil(target_events / rate));
}

/// Runs `num_pulses` protocol rounds with Bob's sensor set to `phi`.
///
/// Each slot: Alice draws one of the four states, the optional attacker acts
/// on it, the beam splitter routes it to the sensing path (phase gate then
/// sigma_y) or to the check analyser. Sensing clicks are binned by
/// (label, outcome); every click is announced in the EveView.
inline SensingRun run_sensing(const ChannelParams& params, double phi, std::uint64_t num_pulses,
                              std::uint64_t seed, const SensingOptions& options = {}) {
  params.validate();
  detail::require_pulses(num_pulses);

  const double w_sensing = params.path1_split * activity_probability(params, kSensingDetectors);
  const double w_check = (1.0 - params.path1_split) * activity_probability(params, kCheckDetectors);
  const double p_active = w_sensing + w_check;

  SensingRun run;
  Rng rng(derive_seed(seed, 1));
  detail::for_each_active_slot(p_active, num_pulses, rng, [&](std::uint64_t slot) {
    const bool sensing = rng.uniform() * p_active < w_sensing;
    const PreparedStateLabel label = options.only_label ? *options.only_label : kAllLabels[rng.index(4)];
    QubitState state = prepare(label);
    if (options.attack) state = options.attack->intercept(state, rng);

    int detector = 0;
    if (sensing) {
      const auto probs = encoded_sigma_y_probs(params, state, phi);
      const auto outcome = static_cast<int>(sample_active_detection(probs, params, rng));
      run.counts.add(label, outcome);
      detector = outcome + 1;
      ++run.sensing_clicks;
    } else {
      const auto probs = detail::check_probs(state);
      detector = static_cast<int>(sample_active_detection(probs, params, rng)) + 3;
      ++run.check_clicks;
    }
    const Path path = sensing ? Path::Sensing : Path::Check;
    run.eve_view.records.push_back({slot, detector, path});
    if (options.record_alice_log) run.alice_log.push_back({slot, label, std::nullopt, detector, path});
  });
  run.lost = num_pulses - run.sensing_clicks - run.check_clicks;
  return run;
}

/// Raw calibration statistics: counts[theta index][label][outcome], theta
/// index k encoding k*pi/2.
struct CalibrationRun {
  std::array<std::array<std::array<std::uint64_t, 2>, 4>, 4> counts{};
  std::vector<AliceRecord> alice_log;
  CalibrationTable table;
};

constexpr std::size_t calibration_phase_index(std::size_t outcome_cell) noexcept {
  constexpr std::array<std::size_t, 8> kIndex = {3, 1, 1, 3, 2, 0, 0, 2};
  return kIndex[outcome_cell];
}

/// Background calibration. For each pulse a phase theta in {0, pi/2, pi,
/// 3pi/2} is drawn uniformly and announced to Bob in advance; Alice prepares
/// one of the two states of the basis whose ideal probabilities vanish at
/// that theta (sigma_y states for 0 and pi, sigma_x states otherwise).
/// `pulses_per_phase` emitted pulses are spent per theta on average.
inline CalibrationRun run_calibration_detailed(const ChannelParams& params, std::uint64_t pulses_per_phase,
                                               std::uint64_t seed, bool record_alice_log = false) {
  params.validate();
  detail::require_pulses(pulses_per_phase);

  const double p_active = params.path1_split * activity_probability(params, kSensingDetectors);
  CalibrationRun run;
  Rng rng(derive_seed(seed, 2));
  detail::for_each_active_slot(p_active, 4 * pulses_per_phase, rng, [&](std::uint64_t slot) {
    const std::size_t k = rng.index(4);
    const double theta = static_cast<double>(k) * std::numbers::pi / 2.0;
    const Basis basis = (k % 2 == 0) ? Basis::SigmaY : Basis::SigmaX;
    const PreparedStateLabel label = eigenstate_label(basis, static_cast<int>(rng.index(2)));

    const auto probs = encoded_sigma_y_probs(params, prepare(label), theta);
    const auto outcome = sample_active_detection(probs, params, rng);
    ++run.counts[k][label_index(label)][outcome];
    if (record_alice_log) {
      run.alice_log.push_back({slot, label, theta, static_cast<int>(outcome) + 1, Path::Sensing});
    }
  });

  for (std::size_t i = 0; i < 8; ++i) {
    const auto& cell = run.counts[calibration_phase_index(i)][label_index(label_of_index(i))];
    const std::uint64_t total = cell[0] + cell[1];
    if (total == 0) {
      throw Error(ErrorCode::InsufficientStatistics,
                  "no calibration events for outcome cell " + std::to_string(i + 1));
    }
    run.table.p_bg[i] = static_cast<double>(cell[outcome_of_index(i)]) / static_cast<double>(total);
  }
  return run;
}

inline CalibrationTable run_calibration(const ChannelParams& params, std::uint64_t pulses_per_phase,
                                        std::uint64_t seed) {
  return run_calibration_detailed(params, pulses_per_phase, seed).table;
}

/// BB84-style check of `num_pulses` pulses routed to the check analyser.
/// Events whose measured basis matches Alice's are sifted; an error is a
/// sifted outcome that differs from the prepared eigenstate.
inline QberReport run_check_path(const ChannelParams& params, std::uint64_t num_pulses, std::uint64_t seed,
                                 const std::optional<InterceptResend>& attack = std::nullopt) {
  params.validate();
  detail::require_pulses(num_pulses);

  QberReport report;
  Rng rng(derive_seed(seed, 3));
  detail::for_each_active_slot(activity_probability(params, kCheckDetectors), num_pulses, rng,
                               [&](std::uint64_t) {
    const PreparedStateLabel label = kAllLabels[rng.index(4)];
    QubitState state = prepare(label);
    if (attack) state = attack->intercept(state, rng);
    const auto detector = sample_active_detection(detail::check_probs(state), params, rng);
    const Basis measured = detector < 2 ? Basis::SigmaX : Basis::SigmaY;
    if (measured != basis_of(label)) return;
    ++report.sifted_count;
    if (static_cast<int>(detector % 2) != eigen_outcome(label)) ++report.error_count;
  });
  return report;
}

/// Fraction of sensing-path clicks on detector 1: the only phase-bearing
/// statistic an eavesdropper on the classical channel can form.
inline double eve_ratio(const EveView& view) {
  std::uint64_t total = 0;
  std::uint64_t first = 0;
  for (const auto& r : view.records) {
    if (r.path != Path::Sensing) continue;
    ++total;
    if (r.detector == 1) ++first;
  }
  if (total == 0) throw Error(ErrorCode::UndefinedRatio, "no sensing-path clicks in view");
  return static_cast<double>(first) / static_cast<double>(total);
}

/// Same statistic formed by Alice from her counts: (n1+n3+n5+n7)/m.
inline double eve_ratio(const OutcomeCounts& counts) {
  const auto m = counts.m();
  if (m == 0) throw Error(ErrorCode::UndefinedRatio, "no sensing-path clicks");
  return static_cast<double>(counts.n[0] + counts.n[2] + counts.n[4] + counts.n[6]) / static_cast<double>(m);
}

}  // namespace sqrs
