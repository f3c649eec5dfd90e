#pragma once

// Classical Fisher information of the binary sensing outcomes and the
// Cramer-Rao precision bound.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <string>

#include "sqrs/csv.hpp"
#include "sqrs/error.hpp"
#include "sqrs/qubit.hpp"

namespace sqrs {

/// Probabilities this close to 0 or 1 are treated as the singular endpoints.
inline constexpr double kSingularEpsilon = 1e-12;

/// d/dphi of table1_probability.
inline double table1_derivative(PreparedStateLabel label, int sigma_y_outcome, double phi) {
  if (sigma_y_outcome != 0 && sigma_y_outcome != 1) {
    throw Error(ErrorCode::InvalidArgument, "measurement outcome must be 0 or 1");
  }
  const double dtrig = basis_of(label) == Basis::SigmaX ? std::cos(phi) : -std::sin(phi);
  const int sign = (eigen_outcome(label) == sigma_y_outcome) ? 1 : -1;
  return 0.5 * sign * dtrig;
}

/// Fisher information of a Bernoulli outcome with probability p and slope dp:
/// dp^2 / (p (1 - p)).
inline double bernoulli_cfi(double p, double dp) {
  if (!(p > kSingularEpsilon && p < 1.0 - kSingularEpsilon)) {
    throw Error(ErrorCode::Singularity, "Fisher information undefined at p = 0 or 1");
  }
  return dp * dp / (p * (1.0 - p));
}

/// Per-measurement CFI of the state `label` about phi. Both outcomes of a
/// row carry the same information.
inline double cfi_analytic(PreparedStateLabel label, int sigma_y_outcome, double phi) {
  return bernoulli_cfi(table1_probability(label, sigma_y_outcome, phi),
                       table1_derivative(label, sigma_y_outcome, phi));
}

inline double cfi_analytic(PreparedStateLabel label, double phi) { return cfi_analytic(label, 0, phi); }

/// Sum of cfi_analytic over the four prepared states.
inline double alice_total_cfi(double phi) {
  double total = 0.0;
  for (PreparedStateLabel label : kAllLabels) total += cfi_analytic(label, phi);
  return total;
}

/// Left neighbour, centre and right neighbour of a measured probability curve.
struct ProbabilityTriplet {
  std::array<double, 3> phi{};
  std::array<double, 3> p{};

  void validate() const {
    if (!(phi[0] < phi[1] && phi[1] < phi[2])) {
      throw Error(ErrorCode::InvalidTriplet, "triplet phases must be strictly increasing");
    }
    for (double v : p) {
      if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::InvalidTriplet, "triplet probability outside [0, 1]");
    }
  }
};

/// CFI with the slope fitted through the two neighbours.
inline double cfi_empirical(const ProbabilityTriplet& t) {
  if (!(t.phi[2] - t.phi[0] != 0.0)) throw Error(ErrorCode::InvalidTriplet, "zero phase span");
  t.validate();
  const double slope = (t.p[2] - t.p[0]) / (t.phi[2] - t.phi[0]);
  return bernoulli_cfi(t.p[1], slope);
}

/// Cramer-Rao bound 1/sqrt(n cfi).
inline double crb(double cfi, std::uint64_t n) {
  if (!(cfi > 0.0)) throw Error(ErrorCode::NoInformation, "Cramer-Rao bound needs positive Fisher information");
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "Cramer-Rao bound needs n > 0");
  return 1.0 / std::sqrt(static_cast<double>(n) * cfi);
}

struct FisherResult {
  double cfi = 0.0;
  std::uint64_t n_measurements = 0;
  double crb = std::numeric_limits<double>::infinity();  // infinite when cfi == 0
};

inline FisherResult make_fisher_result(double cfi, std::uint64_t n) {
  if (!(cfi >= 0.0)) throw Error(ErrorCode::InvalidArgument, "negative Fisher information");
  FisherResult r{cfi, n, std::numeric_limits<double>::infinity()};
  if (cfi > 0.0 && n > 0) r.crb = crb(cfi, n);
  return r;
}

struct PhasePoint {
  double phi = 0.0;
  double value = 0.0;
};

/// Eavesdropper CFI from the detector-1 ratio curve around `center_index`.
inline FisherResult eve_cfi_from_ratio(std::span<const PhasePoint> curve, std::size_t center_index,
                                       std::uint64_t n_measurements) {
  if (curve.size() < 3) throw Error(ErrorCode::InvalidTriplet, "ratio curve needs at least 3 points");
  if (center_index == 0 || center_index + 1 >= curve.size()) {
    throw Error(ErrorCode::InvalidTriplet, "centre point needs a neighbour on each side");
  }
  ProbabilityTriplet t;
  for (std::size_t k = 0; k < 3; ++k) {
    t.phi[k] = curve[center_index - 1 + k].phi;
    t.p[k] = curve[center_index - 1 + k].value;
  }
  return make_fisher_result(cfi_empirical(t), n_measurements);
}

struct FisherRow {
  std::string state_label;  // X0, X1, Y0, Y1 or Eve
  double phi = 0.0;
  FisherResult result;
};

inline void write_fisher_csv(std::ostream& out, std::span<const FisherRow> rows) {
  out << "state_label,phi,cfi,crb\n";
  for (const auto& row : rows) {
    out << row.state_label << ',' << format_double(row.phi) << ',' << format_double(row.result.cfi) << ','
        << format_double(row.result.crb) << '\n';
  }
}

}  // namespace sqrs
