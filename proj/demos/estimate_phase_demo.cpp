// Estimate a remote phase over the 50 km noisy channel, with and without
// background correction.

#include <iostream>

#include "sqrs/sqrs.hpp"

int main() {
  using namespace sqrs;

  const ChannelParams channel = ChannelParams::paper_noise();
  const double phi = 2.0;
  const auto pulses = pulses_for_sensing_events(channel, 2.1e4);

  const auto run = run_sensing(channel, phi, pulses, /*seed=*/42);
  const auto table = run_calibration(channel, pulses / 4, /*seed=*/43);
  const auto plain = estimate_phase(run.counts);
  const auto corrected = estimate_phase_corrected(run.counts, table);

  std::cout << "true phase        " << phi << '\n'
            << "sensing events    " << run.counts.m() << '\n'
            << "estimate (raw)    " << plain.phi_hat << '\n'
            << "estimate (calib.) " << corrected.phi_hat << '\n'
            << "Cramer-Rao bound  " << 1.0 / std::sqrt(sensing_information(run.counts, phi)) << '\n'
            << "Eve's ratio       " << eve_ratio(run.eve_view) << '\n';
}
