#pragma once

// Single-qubit polarization states in the {|H>, |V>} basis.

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <string_view>

#include "sqrs/error.hpp"

namespace sqrs {

using complex = std::complex<double>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Reduce an angle to [0, 2pi).
inline double wrap_phase(double phi) noexcept {
  double r = std::fmod(phi, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

/// Distance between two angles on the circle, in [0, pi].
inline double circular_distance(double a, double b) noexcept {
  const double d = wrap_phase(a - b);
  return d > std::numbers::pi ? kTwoPi - d : d;
}

/// The four states Alice can send: eigenstates of sigma_x and sigma_y.
enum class PreparedStateLabel { X0, X1, Y0, Y1 };

inline constexpr std::array<PreparedStateLabel, 4> kAllLabels = {
    PreparedStateLabel::X0, PreparedStateLabel::X1, PreparedStateLabel::Y0, PreparedStateLabel::Y1};

constexpr std::size_t label_index(PreparedStateLabel label) noexcept {
  return static_cast<std::size_t>(label);
}

constexpr std::string_view to_string(PreparedStateLabel label) noexcept {
  switch (label) {
    case PreparedStateLabel::X0: return "X0";
    case PreparedStateLabel::X1: return "X1";
    case PreparedStateLabel::Y0: return "Y0";
    case PreparedStateLabel::Y1: return "Y1";
  }
  return "?";
}

enum class Basis { SigmaX, SigmaY };

constexpr Basis basis_of(PreparedStateLabel label) noexcept {
  return (label == PreparedStateLabel::X0 || label == PreparedStateLabel::X1) ? Basis::SigmaX
                                                                              : Basis::SigmaY;
}

/// Eigenstate label for `outcome` of `basis`; outcome 0 is the +1 eigenvector.
constexpr PreparedStateLabel eigenstate_label(Basis basis, int outcome) noexcept {
  if (basis == Basis::SigmaX) return outcome == 0 ? PreparedStateLabel::X0 : PreparedStateLabel::X1;
  return outcome == 0 ? PreparedStateLabel::Y0 : PreparedStateLabel::Y1;
}

/// Outcome of measuring a label's own eigenstate in its own basis.
constexpr int eigen_outcome(PreparedStateLabel label) noexcept {
  return (label == PreparedStateLabel::X0 || label == PreparedStateLabel::Y0) ? 0 : 1;
}

struct MeasurementBasis {
  Basis basis = Basis::SigmaY;
  int outcome = 0;  // 0 or 1
};

/// Pure polarization qubit amp_h|H> + amp_v|V>, always normalized.
class QubitState {
 public:
  /// Normalizes the given amplitudes; a zero vector is rejected.
  QubitState(complex amp_h, complex amp_v) {
    const double norm = std::sqrt(std::norm(amp_h) + std::norm(amp_v));
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw Error(ErrorCode::InvalidArgument, "qubit state with zero or non-finite norm");
    }
    amp_h_ = amp_h / norm;
    amp_v_ = amp_v / norm;
  }

  complex amp_h() const noexcept { return amp_h_; }
  complex amp_v() const noexcept { return amp_v_; }

  double norm_squared() const noexcept { return std::norm(amp_h_) + std::norm(amp_v_); }

 private:
  complex amp_h_;
  complex amp_v_;
};

/// <a|b>
inline complex inner_product(const QubitState& a, const QubitState& b) noexcept {
  return std::conj(a.amp_h()) * b.amp_h() + std::conj(a.amp_v()) * b.amp_v();
}

/// True when the states differ at most by a global phase.
inline bool same_ray(const QubitState& a, const QubitState& b, double tol = 1e-12) noexcept {
  return std::abs(std::abs(inner_product(a, b)) - 1.0) <= tol;
}

inline QubitState prepare(PreparedStateLabel label) {
  const double r = std::numbers::sqrt2 / 2.0;
  switch (label) {
    case PreparedStateLabel::X0: return {complex{r, 0.0}, complex{r, 0.0}};
    case PreparedStateLabel::X1: return {complex{r, 0.0}, complex{-r, 0.0}};
    case PreparedStateLabel::Y0: return {complex{r, 0.0}, complex{0.0, r}};
    case PreparedStateLabel::Y1: return {complex{r, 0.0}, complex{0.0, -r}};
  }
  throw Error(ErrorCode::InvalidArgument, "unknown prepared-state label");
}

/// Phase gate: multiplies the V amplitude by e^{i phi}.
inline QubitState apply_phase(const QubitState& state, double phi) {
  return {state.amp_h(), std::polar(1.0, wrap_phase(phi)) * state.amp_v()};
}

/// |<out|psi>|^2 for the eigenvector selected by `meas`.
inline double born_probability(const QubitState& state, MeasurementBasis meas) {
  if (meas.outcome != 0 && meas.outcome != 1) {
    throw Error(ErrorCode::InvalidArgument, "measurement outcome must be 0 or 1");
  }
  const QubitState out = prepare(eigenstate_label(meas.basis, meas.outcome));
  const double p = std::norm(inner_product(out, state));
  return p > 1.0 ? 1.0 : p;
}

/// Closed-form probability that a phase-encoded `label` state yields
/// `sigma_y_outcome`:
///
///            outcome 0          outcome 1
///   X0   p1 = (1+sin)/2     p2 = (1-sin)/2
///   X1   p3 = (1-sin)/2     p4 = (1+sin)/2
///   Y0   p5 = (1+cos)/2     p6 = (1-cos)/2
///   Y1   p7 = (1-cos)/2     p8 = (1+cos)/2
inline double table1_probability(PreparedStateLabel label, int sigma_y_outcome, double phi) {
  if (sigma_y_outcome != 0 && sigma_y_outcome != 1) {
    throw Error(ErrorCode::InvalidArgument, "measurement outcome must be 0 or 1");
  }
  const double trig = basis_of(label) == Basis::SigmaX ? std::sin(phi) : std::cos(phi);
  const int sign = (eigen_outcome(label) == sigma_y_outcome) ? 1 : -1;
  return 0.5 * (1.0 + sign * trig);
}

/// Zero-based position of the (label, outcome) cell: 0 holds n_1, 7 holds n_8.
constexpr std::size_t outcome_index(PreparedStateLabel label, int sigma_y_outcome) noexcept {
  return 2 * label_index(label) + static_cast<std::size_t>(sigma_y_outcome);
}

constexpr PreparedStateLabel label_of_index(std::size_t index) noexcept {
  return kAllLabels[index / 2];
}

constexpr int outcome_of_index(std::size_t index) noexcept { return static_cast<int>(index % 2); }

}  // namespace sqrs
