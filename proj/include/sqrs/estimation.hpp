#pragma once

// Maximum-likelihood phase estimation from sensing-path counts, with the
// background pre-calibration correction.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <vector>

#include "sqrs/csv.hpp"
#include "sqrs/error.hpp"
#include "sqrs/protocol.hpp"
#include "sqrs/qubit.hpp"

namespace sqrs {

/// Per-cell exponents of the likelihood, integer counts or effective counts.
using CellWeights = std::array<double, 8>;

inline CellWeights to_weights(const OutcomeCounts& counts) noexcept {
  CellWeights w{};
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<double>(counts.n[i]);
  return w;
}

inline constexpr double kLogFloor = 1e-12;

/// log L(phi) = (n1+n4) log(1+sin) + (n2+n3) log(1-sin)
///            + (n5+n8) log(1+cos) + (n6+n7) log(1-cos),
/// each argument clamped below at kLogFloor.
inline double log_likelihood(const CellWeights& w, double phi) noexcept {
  const double s = std::sin(phi);
  const double c = std::cos(phi);
  auto term = [](double weight, double arg) {
    return weight == 0.0 ? 0.0 : weight * std::log(std::max(arg, kLogFloor));
  };
  return term(w[0] + w[3], 1.0 + s) + term(w[1] + w[2], 1.0 - s) + term(w[4] + w[7], 1.0 + c) +
         term(w[5] + w[6], 1.0 - c);
}

inline double log_likelihood(const OutcomeCounts& counts, double phi) noexcept {
  return log_likelihood(to_weights(counts), phi);
}

struct LikelihoodCurve {
  std::vector<double> grid;        // uniform over [0, 2pi)
  std::vector<double> log_values;  // shifted so the maximum is 0
};

struct PhaseEstimate {
  double phi_hat = 0.0;  // [0, 2pi)
  LikelihoodCurve curve;
  int num_maxima = 0;
};

/// Maxima thresholds are in nats per event (log L divided by the total
/// count), so num_maxima does not change when all counts are scaled.
struct EstimatorOptions {
  std::size_t grid_size = 2048;
  double tolerance = 1e-6;  // golden-section bracket width, radians
  double min_prominence = 1e-4;
  // Local maxima further than this below the global one are ignored; their
  // likelihood ratio is below e^(-0.05 m).
  double max_drop = 0.05;
};

inline LikelihoodCurve likelihood_curve(const CellWeights& w, std::size_t grid_size) {
  if (grid_size < 3) throw Error(ErrorCode::InvalidArgument, "likelihood grid needs at least 3 points");
  LikelihoodCurve curve;
  curve.grid.resize(grid_size);
  curve.log_values.resize(grid_size);
  for (std::size_t i = 0; i < grid_size; ++i) {
    curve.grid[i] = kTwoPi * static_cast<double>(i) / static_cast<double>(grid_size);
    curve.log_values[i] = log_likelihood(w, curve.grid[i]);
  }
  const double top = *std::max_element(curve.log_values.begin(), curve.log_values.end());
  for (double& v : curve.log_values) v -= top;
  return curve;
}

/// Local maxima of a periodic sequence whose topographic prominence is at
/// least `min_prominence` and whose height is within `max_drop` of the
/// global maximum. A plateau counts once.
inline int count_maxima(const std::vector<double>& values, double min_prominence,
                        double max_drop = std::numeric_limits<double>::infinity()) {
  const std::size_t n = values.size();
  if (n < 3) return n == 0 ? 0 : 1;
  const auto sn = static_cast<std::ptrdiff_t>(n);
  auto at = [&](std::ptrdiff_t i) { return values[static_cast<std::size_t>(((i % sn) + sn) % sn)]; };

  const double lowest = *std::min_element(values.begin(), values.end());
  const double highest = *std::max_element(values.begin(), values.end());
  if (highest == lowest) return 1;

  int count = 0;
  for (std::ptrdiff_t i = 0; i < sn; ++i) {
    const double v = at(i);
    if (!(v > at(i - 1)) || highest - v > max_drop) continue;
    // Walk over a plateau to its right edge.
    std::ptrdiff_t j = i;
    while (j - i < sn && at(j + 1) == v) ++j;
    if (!(v > at(j + 1))) continue;

    // Prominence: the peak minus the higher of the two lowest points reached
    // before climbing above the peak on either side.
    double left_min = v;
    bool left_higher = false;
    for (std::ptrdiff_t k = i - 1; k > i - sn; --k) {
      if (at(k) > v) {
        left_higher = true;
        break;
      }
      left_min = std::min(left_min, at(k));
    }
    double right_min = v;
    bool right_higher = false;
    for (std::ptrdiff_t k = j + 1; k < j + sn; ++k) {
      if (at(k) > v) {
        right_higher = true;
        break;
      }
      right_min = std::min(right_min, at(k));
    }
    // On a circle both walks reach the same higher point, if there is one.
    const double prominence = (left_higher && right_higher) ? v - std::max(left_min, right_min) : v - lowest;
    if (prominence >= min_prominence) ++count;
  }
  return count;
}

/// Golden-section search for a maximum of `f` on [a, b].
template <class F>
double golden_section_maximize(F&& f, double a, double b, double tolerance) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tolerance) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

/// Grid search over [0, 2pi) followed by golden-section refinement around the
/// best grid point. Ties on the grid go to the smallest phase.
inline PhaseEstimate estimate_phase(const CellWeights& w, const EstimatorOptions& options = {}) {
  double total = 0.0;
  for (double v : w) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "negative or non-finite count");
    total += v;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::InsufficientData, "no sensing-path events to estimate from");

  PhaseEstimate est;
  est.curve = likelihood_curve(w, options.grid_size);
  // Values closer than accumulated rounding count as ties, so mirror-image
  // maxima resolve to the smaller phase.
  const double tie = 64.0 * std::numeric_limits<double>::epsilon() * total;
  std::size_t best = 0;
  for (std::size_t i = 1; i < est.curve.log_values.size(); ++i) {
    if (est.curve.log_values[i] > est.curve.log_values[best] + tie) best = i;
  }
  const double step = kTwoPi / static_cast<double>(options.grid_size);
  const double center = est.curve.grid[best];
  const double refined = golden_section_maximize([&](double phi) { return log_likelihood(w, phi); },
                                                 center - step, center + step, options.tolerance);
  // Refinement must not lose to the grid point it started from.
  est.phi_hat = log_likelihood(w, refined) >= log_likelihood(w, center) ? wrap_phase(refined) : center;
  est.num_maxima =
      count_maxima(est.curve.log_values, options.min_prominence * total, options.max_drop * total);
  return est;
}

inline PhaseEstimate estimate_phase(const OutcomeCounts& counts, const EstimatorOptions& options = {}) {
  if (counts.m() == 0) throw Error(ErrorCode::InsufficientData, "no sensing-path events to estimate from");
  return estimate_phase(to_weights(counts), options);
}

struct CorrectedFrequencies {
  std::array<double, 8> f{};
  CellWeights effective_counts{};
};

/// Subtracts the calibrated background from each cell's empirical frequency
/// (clamped at zero), renormalizes each state's outcome pair and converts
/// back to effective counts.
inline CorrectedFrequencies apply_calibration(const OutcomeCounts& counts, const CalibrationTable& table) {
  table.validate();
  CorrectedFrequencies out;
  for (PreparedStateLabel label : kAllLabels) {
    const auto total = static_cast<double>(counts.label_total(label));
    const std::size_t i0 = outcome_index(label, 0);
    const std::size_t i1 = outcome_index(label, 1);
    if (total == 0.0) {
      throw Error(ErrorCode::InsufficientData, std::string("no events for prepared state ") +
                                                   std::string(to_string(label)));
    }
    const double f0 = std::max(static_cast<double>(counts.n[i0]) / total - table.p_bg[i0], 0.0);
    const double f1 = std::max(static_cast<double>(counts.n[i1]) / total - table.p_bg[i1], 0.0);
    const double sum = f0 + f1;
    if (!(sum > 0.0)) {
      throw Error(ErrorCode::DegenerateRow, std::string("corrected frequencies vanish for state ") +
                                                std::string(to_string(label)));
    }
    out.f[i0] = f0 / sum;
    out.f[i1] = f1 / sum;
    out.effective_counts[i0] = out.f[i0] * total;
    out.effective_counts[i1] = out.f[i1] * total;
  }
  return out;
}

inline PhaseEstimate estimate_phase_corrected(const OutcomeCounts& counts, const CalibrationTable& table,
                                              const EstimatorOptions& options = {}) {
  return estimate_phase(apply_calibration(counts, table).effective_counts, options);
}

/// Two-column CSV: phi,normalized_log_likelihood.
inline void write_curve_csv(std::ostream& out, const LikelihoodCurve& curve) {
  out << "phi,normalized_log_likelihood\n";
  for (std::size_t i = 0; i < curve.grid.size(); ++i) {
    out << format_double(curve.grid[i]) << ',' << format_double(curve.log_values[i]) << '\n';
  }
}

}  // namespace sqrs
