#pragma once

// Loss, detection and noise between Alice's source and Bob's detectors.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sqrs/error.hpp"
#include "sqrs/qubit.hpp"
#include "sqrs/rng.hpp"

namespace sqrs {

enum class Path { Sensing, Check };

constexpr std::string_view to_string(Path path) noexcept {
  return path == Path::Sensing ? "sensing" : "check";
}

/// Detectors 1-2 sit behind the sigma_y analyser of the sensing path (1 is
/// outcome 0). Detectors 3-6 form the check-path analyser: 3/4 are the
/// sigma_x outcomes 0/1, 5/6 the sigma_y outcomes 0/1.
inline constexpr int kSensingDetectors = 2;
inline constexpr int kCheckDetectors = 4;

struct ChannelParams {
  double fiber_length_km = 0.0;
  double attenuation_db_per_km = 0.2;
  double detector_efficiency = 1.0;
  double dark_count_prob = 0.0;     // per detector per gate
  double misalignment_prob = 0.0;   // outcome flip within a detector pair, both paths
  double path1_split = 0.5;         // probability a pulse is routed to the sensing path
  double mean_photon_number = 50.0;

  /// Share of sensing-path photons that pass Bob's phase modulator outside
  /// its drive window and pick up the idle phase instead of the encoded one.
  double idle_fraction = 0.0;
  double idle_phase = 0.0;  // radians

  /// Lossless, noise-free channel: every pulse clicks exactly one detector.
  static ChannelParams noiseless() { return {}; }

  /// 50 km of standard fiber with the 4.5% detectors of the reference setup.
  static ChannelParams paper_50km() {
    ChannelParams p;
    p.fiber_length_km = 50.0;
    p.attenuation_db_per_km = 0.2;
    p.detector_efficiency = 0.045;
    p.mean_photon_number = 0.5;
    return p;
  }

  /// paper_50km plus the noise floor of the reference setup. Dark counts,
  /// misalignment and the idle-phase leak are simulation-tuned so the eight
  /// calibration backgrounds land near the measured ones (0.0254, 0.0487,
  /// 0.0487, 0.0254, 0.0639, 0.0102, 0.0102, 0.0639) and the check-path QBER
  /// stays well under 6%.
  static ChannelParams paper_noise() {
    ChannelParams p = paper_50km();
    p.dark_count_prob = 1e-6;
    p.misalignment_prob = 0.0073;
    p.idle_fraction = 0.0595;
    p.idle_phase = -0.41;
    return p;
  }

  void validate() const {
    auto check_prob = [](double v, const char* name) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, std::string(name) + " must lie in [0, 1]");
      }
    };
    check_prob(detector_efficiency, "detector_efficiency");
    check_prob(dark_count_prob, "dark_count_prob");
    check_prob(misalignment_prob, "misalignment_prob");
    check_prob(path1_split, "path1_split");
    check_prob(idle_fraction, "idle_fraction");
    if (!std::isfinite(idle_phase)) throw Error(ErrorCode::InvalidArgument, "idle_phase must be finite");
    if (!(fiber_length_km >= 0.0)) throw Error(ErrorCode::InvalidArgument, "fiber_length_km must be >= 0");
    if (!(attenuation_db_per_km >= 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "attenuation_db_per_km must be >= 0");
    }
    if (!(mean_photon_number > 0.0) || !std::isfinite(mean_photon_number)) {
      throw Error(ErrorCode::InvalidArgument, "mean_photon_number must be > 0");
    }
  }

  bool operator==(const ChannelParams&) const = default;
};

inline std::optional<ChannelParams> channel_preset(std::string_view name) {
  if (name == "noiseless") return ChannelParams::noiseless();
  if (name == "paper-50km") return ChannelParams::paper_50km();
  if (name == "paper-noise") return ChannelParams::paper_noise();
  return std::nullopt;
}

struct DetectionEvent {
  std::uint64_t time_slot = 0;
  int detector_id = 1;  // 1..6
  Path path = Path::Sensing;

  bool valid() const noexcept {
    return path == Path::Sensing ? (detector_id >= 1 && detector_id <= 2)
                                 : (detector_id >= 3 && detector_id <= 6);
  }
};

/// Fiber transmittance 10^(-alpha L / 10).
inline double transmittance(const ChannelParams& params) {
  return std::pow(10.0, -params.attenuation_db_per_km * params.fiber_length_km / 10.0);
}

/// Probability that a pulse produces a signal click: 1 - exp(-mu T eta).
/// Dark counts are not included.
inline double survival_probability(const ChannelParams& params) {
  return -std::expm1(-params.mean_photon_number * transmittance(params) * params.detector_efficiency);
}

/// Ideal sigma_y outcome probabilities of `state` after Bob's phase gate set
/// to `phi`, with the idle-phase share mixed in.
inline std::array<double, 2> encoded_sigma_y_probs(const ChannelParams& params, const QubitState& state,
                                                   double phi) {
  auto probs_at = [&](double phase) { return born_probability(apply_phase(state, phase), {Basis::SigmaY, 0}); };
  double p0 = probs_at(phi);
  if (params.idle_fraction > 0.0) {
    p0 = (1.0 - params.idle_fraction) * p0 + params.idle_fraction * probs_at(params.idle_phase);
  }
  return {p0, 1.0 - p0};
}

/// Two independent flips compose to a single flip with probability a+b-2ab.
constexpr double compose_flips(double a, double b) noexcept { return a + b - 2.0 * a * b; }

/// Probability that at least one of `n_detectors` clicks on a given pulse.
inline double activity_probability(const ChannelParams& params, int n_detectors) {
  const double s = survival_probability(params);
  return 1.0 - (1.0 - s) * std::pow(1.0 - params.dark_count_prob, n_detectors);
}

inline void validate_click_probs(std::span<const double> probs) {
  if (probs.size() != kSensingDetectors && probs.size() != kCheckDetectors) {
    throw Error(ErrorCode::InvalidProbabilities, "click probabilities must cover 2 or 4 detectors");
  }
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorCode::InvalidProbabilities, "click probability outside [0, 1]");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidProbabilities, "click probabilities must sum to 1");
  }
}

namespace detail {

inline std::size_t pick_detector(std::span<const double> probs, double u) noexcept {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return probs.size() - 1;
}

inline std::size_t resolve_clicks(const std::array<bool, kCheckDetectors>& fired, std::size_t n, Rng& rng) {
  std::array<std::size_t, kCheckDetectors> firing{};
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (fired[i]) firing[count++] = i;
  }
  return count == 1 ? firing[0] : firing[rng.index(count)];
}

// Photon arrival followed by independent dark counts on every detector.
inline std::size_t photon_click(std::span<const double> probs, const ChannelParams& params, Rng& rng,
                                double flip, std::array<bool, kCheckDetectors>& fired) {
  std::size_t d = pick_detector(probs, rng.uniform());
  if (flip > 0.0 && rng.bernoulli(flip)) d ^= 1U;
  fired[d] = true;
  if (params.dark_count_prob > 0.0) {
    for (std::size_t j = 0; j < probs.size(); ++j) {
      if (rng.bernoulli(params.dark_count_prob)) fired[j] = true;
    }
  }
  return resolve_clicks(fired, probs.size(), rng);
}

}  // namespace detail

/// One gate of the detector bank behind a path.
///
/// `ideal_click_probs` gives the Born-rule probability of each detector in
/// the path (2 or 4 entries). A photon arrives with survival_probability and
/// lands on a detector drawn from those probabilities, flipped to its pair
/// partner with the combined misalignment/`extra_flip` probability; every
/// detector independently dark-fires. Multiple clicks are resolved uniformly.
/// Returns the zero-based detector within the path, or nothing if no click.
inline std::optional<std::size_t> sample_detection(std::span<const double> ideal_click_probs,
                                                   const ChannelParams& params, Rng& rng,
                                                   double extra_flip = 0.0) {
  validate_click_probs(ideal_click_probs);
  const double flip = compose_flips(params.misalignment_prob, extra_flip);
  std::array<bool, kCheckDetectors> fired{};
  if (rng.bernoulli(survival_probability(params))) {
    return detail::photon_click(ideal_click_probs, params, rng, flip, fired);
  }
  bool any = false;
  for (std::size_t j = 0; j < ideal_click_probs.size(); ++j) {
    if (params.dark_count_prob > 0.0 && rng.bernoulli(params.dark_count_prob)) fired[j] = any = true;
  }
  if (!any) return std::nullopt;
  return detail::resolve_clicks(fired, ideal_click_probs.size(), rng);
}

/// sample_detection conditioned on at least one click. Same distribution as
/// rejecting empty gates, without the cost; the protocol engine uses it
/// together with geometric skipping of empty slots.
inline std::size_t sample_active_detection(std::span<const double> ideal_click_probs,
                                           const ChannelParams& params, Rng& rng,
                                           double extra_flip = 0.0) {
  validate_click_probs(ideal_click_probs);
  const auto n = ideal_click_probs.size();
  const double s = survival_probability(params);
  const double d = params.dark_count_prob;
  const double no_dark = std::pow(1.0 - d, static_cast<double>(n));
  const double p_active = 1.0 - (1.0 - s) * no_dark;
  if (!(p_active > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "channel can never produce a click");
  }
  const double flip = compose_flips(params.misalignment_prob, extra_flip);
  std::array<bool, kCheckDetectors> fired{};
  if (rng.uniform() * p_active < s) {
    return detail::photon_click(ideal_click_probs, params, rng, flip, fired);
  }
  // Dark counts only, at least one: the first firing detector j has weight
  // (1-d)^j d; the ones after it fire independently.
  const double u = rng.uniform() * (1.0 - no_dark);
  double acc = 0.0;
  double survive = 1.0;
  std::size_t first = n - 1;
  for (std::size_t j = 0; j < n; ++j) {
    acc += survive * d;
    if (u < acc) {
      first = j;
      break;
    }
    survive *= 1.0 - d;
  }
  fired[first] = true;
  for (std::size_t j = first + 1; j < n; ++j) {
    if (rng.bernoulli(d)) fired[j] = true;
  }
  return detail::resolve_clicks(fired, n, rng);
}

/// Exact distribution of the reported detector, by enumeration over photon
/// destinations and dark-count subsets. Entry n (one past the detectors)
/// is the no-click probability.
inline std::vector<double> click_distribution(std::span<const double> ideal_click_probs,
                                              const ChannelParams& params, double extra_flip = 0.0) {
  validate_click_probs(ideal_click_probs);
  const std::size_t n = ideal_click_probs.size();
  const double s = survival_probability(params);
  const double d = params.dark_count_prob;
  const double flip = compose_flips(params.misalignment_prob, extra_flip);

  std::vector<double> arrival(n + 1, 0.0);  // arrival[n]: no photon
  arrival[n] = 1.0 - s;
  for (std::size_t i = 0; i < n; ++i) {
    arrival[i] += s * ideal_click_probs[i] * (1.0 - flip);
    arrival[i ^ 1U] += s * ideal_click_probs[i] * flip;
  }

  std::vector<double> out(n + 1, 0.0);
  for (std::size_t a = 0; a <= n; ++a) {
    if (arrival[a] == 0.0) continue;
    for (unsigned mask = 0; mask < (1U << n); ++mask) {
      double w = arrival[a];
      for (std::size_t j = 0; j < n; ++j) w *= (mask >> j) & 1U ? d : 1.0 - d;
      if (w == 0.0) continue;
      unsigned set = mask;
      if (a < n) set |= 1U << a;
      const int count = std::popcount(set);
      if (count == 0) {
        out[n] += w;
        continue;
      }
      for (std::size_t j = 0; j < n; ++j) {
        if ((set >> j) & 1U) out[j] += w / count;
      }
    }
  }
  return out;
}

}  // namespace sqrs
