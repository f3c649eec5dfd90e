#pragma once

// Experiment configuration and the simulate / reproduce / qber commands.
// Every run derives its random stream from the config seed, so a fixed
// config produces byte-identical files.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sqrs/channel.hpp"
#include "sqrs/csv.hpp"
#include "sqrs/error.hpp"
#include "sqrs/estimation.hpp"
#include "sqrs/fisher.hpp"
#include "sqrs/protocol.hpp"

namespace sqrs {

/// The two phases singled out for the Fisher-information comparison.
inline constexpr double kPhi8 = 5.515;
inline constexpr double kPhi9 = 6.013;

inline constexpr double kQberThreshold = 0.06;
inline constexpr double kPaperScaleEvents = 2.1e4;

/// Nine phases 2*pi*k/9, k = 0..8.
inline std::vector<double> nine_phase_grid() {
  std::vector<double> phases(9);
  for (std::size_t k = 0; k < phases.size(); ++k) phases[k] = kTwoPi * static_cast<double>(k) / 9.0;
  return phases;
}

enum class CalibrationSource { Reference, Simulated };

struct ExperimentConfig {
  ChannelParams channel = ChannelParams::paper_noise();
  std::vector<double> phases = nine_phase_grid();
  std::uint64_t pulses_per_phase = 0;
  std::uint64_t calibration_pulses = 0;  // total emitted calibration pulses
  std::uint64_t seed = 1;
  std::string output_dir = "sqrs-out";

  CalibrationSource calibration_source = CalibrationSource::Reference;
  std::vector<double> fisher_phases = {kPhi8, kPhi9};
  double fisher_spacing = kTwoPi / 9.0;  // neighbour offset for slope fits
  bool attack = false;                   // intercept-resend on every pulse

  void validate() const {
    channel.validate();
    if (phases.empty()) throw Error(ErrorCode::Config, "phases must not be empty");
    if (pulses_per_phase == 0) throw Error(ErrorCode::Config, "pulses_per_phase must be > 0");
    if (calibration_pulses < 4) throw Error(ErrorCode::Config, "calibration_pulses must be >= 4");
    if (output_dir.empty()) throw Error(ErrorCode::Config, "output_dir must not be empty");
    if (!(fisher_spacing > 0.0)) throw Error(ErrorCode::Config, "fisher_spacing must be > 0");
  }

  bool operator==(const ExperimentConfig&) const = default;
};

/// Paper-noise channel sized for ~2.1e4 sensing events per phase and ~2.1e4
/// calibration events.
inline ExperimentConfig default_config() {
  ExperimentConfig c;
  c.pulses_per_phase = pulses_for_sensing_events(c.channel, kPaperScaleEvents);
  c.calibration_pulses = pulses_for_sensing_events(c.channel, kPaperScaleEvents);
  return c;
}

inline nlohmann::json to_json(const ChannelParams& p) {
  return {{"fiber_length_km", p.fiber_length_km},
          {"attenuation_db_per_km", p.attenuation_db_per_km},
          {"detector_efficiency", p.detector_efficiency},
          {"dark_count_prob", p.dark_count_prob},
          {"misalignment_prob", p.misalignment_prob},
          {"path1_split", p.path1_split},
          {"mean_photon_number", p.mean_photon_number},
          {"idle_fraction", p.idle_fraction},
          {"idle_phase", p.idle_phase}};
}

/// Reads a channel block. A "preset" key selects the starting point; any
/// other key overrides that field.
inline ChannelParams channel_from_json(const nlohmann::json& j) {
  ChannelParams p;
  if (j.contains("preset")) {
    const auto name = j.at("preset").get<std::string>();
    const auto preset = channel_preset(name);
    if (!preset) throw Error(ErrorCode::Config, "unknown channel preset '" + name + "'");
    p = *preset;
  }
  auto read = [&](const char* key, double& field) {
    if (j.contains(key)) field = j.at(key).get<double>();
  };
  read("fiber_length_km", p.fiber_length_km);
  read("attenuation_db_per_km", p.attenuation_db_per_km);
  read("detector_efficiency", p.detector_efficiency);
  read("dark_count_prob", p.dark_count_prob);
  read("misalignment_prob", p.misalignment_prob);
  read("path1_split", p.path1_split);
  read("mean_photon_number", p.mean_photon_number);
  read("idle_fraction", p.idle_fraction);
  read("idle_phase", p.idle_phase);
  return p;
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
  return {{"channel", to_json(c.channel)},
          {"phases", c.phases},
          {"pulses_per_phase", c.pulses_per_phase},
          {"calibration_pulses", c.calibration_pulses},
          {"seed", c.seed},
          {"output_dir", c.output_dir},
          {"calibration_source", c.calibration_source == CalibrationSource::Reference ? "reference" : "simulated"},
          {"fisher_phases", c.fisher_phases},
          {"fisher_spacing", c.fisher_spacing},
          {"attack", c.attack}};
}

/// Missing keys keep their default_config() values.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  try {
    ExperimentConfig c = default_config();
    if (j.contains("channel")) {
      c.channel = channel_from_json(j.at("channel"));
      if (!j.contains("pulses_per_phase")) c.pulses_per_phase = pulses_for_sensing_events(c.channel, kPaperScaleEvents);
      if (!j.contains("calibration_pulses")) {
        c.calibration_pulses = pulses_for_sensing_events(c.channel, kPaperScaleEvents);
      }
    }
    if (j.contains("phases")) c.phases = j.at("phases").get<std::vector<double>>();
    if (j.contains("pulses_per_phase")) c.pulses_per_phase = j.at("pulses_per_phase").get<std::uint64_t>();
    if (j.contains("calibration_pulses")) c.calibration_pulses = j.at("calibration_pulses").get<std::uint64_t>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("calibration_source")) {
      const auto s = j.at("calibration_source").get<std::string>();
      if (s == "reference") {
        c.calibration_source = CalibrationSource::Reference;
      } else if (s == "simulated") {
        c.calibration_source = CalibrationSource::Simulated;
      } else {
        throw Error(ErrorCode::Config, "calibration_source must be 'reference' or 'simulated'");
      }
    }
    if (j.contains("fisher_phases")) c.fisher_phases = j.at("fisher_phases").get<std::vector<double>>();
    if (j.contains("fisher_spacing")) c.fisher_spacing = j.at("fisher_spacing").get<double>();
    if (j.contains("attack")) c.attack = j.at("attack").get<bool>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Config, std::string("malformed config: ") + e.what());
  }
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Config, std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::error_code ec;
  std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (ec || !out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  return out;
}

inline void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

// Stream ids keep the per-command runs independent of each other.
enum Stream : std::uint64_t {
  kSimulate = 100,
  kFig2 = 200,
  kFig4 = 300,
  kFig5 = 400,
  kFig6 = 500,
  kCalibration = 600,
  kQber = 700,
};

inline std::uint64_t run_seed(const ExperimentConfig& c, Stream stream, std::uint64_t index) {
  return derive_seed(c.seed, static_cast<std::uint64_t>(stream) * 100003ULL + index);
}

inline SensingOptions sensing_options(const ExperimentConfig& c, bool record_alice = false) {
  SensingOptions o;
  if (c.attack) o.attack = InterceptResend{};
  o.record_alice_log = record_alice;
  return o;
}

inline CalibrationTable calibration_for(const ExperimentConfig& c) {
  if (c.calibration_source == CalibrationSource::Reference) return CalibrationTable::reference();
  return run_calibration(c.channel, c.calibration_pulses / 4, run_seed(c, kCalibration, 0));
}

inline nlohmann::json counts_json(const OutcomeCounts& counts) {
  return {{"n", counts.n}, {"m", counts.m()}};
}

}  // namespace detail

struct SimulateSummary {
  std::vector<std::filesystem::path> counts_files;
  std::filesystem::path eve_log;
  std::filesystem::path alice_log;
};

/// One counts file per phase plus the Eve-visible and Alice-visible event
/// logs. Slots of phase k are offset by k * pulses_per_phase.
inline SimulateSummary simulate(const ExperimentConfig& config) {
  config.validate();
  const std::filesystem::path dir = config.output_dir;
  SimulateSummary summary;
  summary.eve_log = dir / "eve_view.jsonl";
  summary.alice_log = dir / "alice_log.jsonl";
  auto eve = detail::open_output(summary.eve_log);
  auto alice = detail::open_output(summary.alice_log);

  for (std::size_t k = 0; k < config.phases.size(); ++k) {
    const double phi = config.phases[k];
    const auto run = run_sensing(config.channel, phi, config.pulses_per_phase,
                                 detail::run_seed(config, detail::kSimulate, k), detail::sensing_options(config, true));
    const std::uint64_t offset = static_cast<std::uint64_t>(k) * config.pulses_per_phase;

    const auto path = dir / ("counts_phase_" + std::to_string(k + 1) + ".json");
    auto out = detail::open_output(path);
    nlohmann::json j = {{"phase_index", k + 1},
                        {"phi", phi},
                        {"counts", detail::counts_json(run.counts)},
                        {"sensing_clicks", run.sensing_clicks},
                        {"check_clicks", run.check_clicks},
                        {"lost", run.lost},
                        {"pulses", config.pulses_per_phase}};
    out << j.dump(2) << '\n';
    detail::finish(out, path);
    summary.counts_files.push_back(path);

    for (const auto& r : run.eve_view.records) {
      eve << "{\"slot\":" << r.slot + offset << ",\"detector\":" << r.detector << ",\"path\":\""
          << to_string(r.path) << "\"}\n";
    }
    for (const auto& r : run.alice_log) {
      alice << "{\"slot\":" << r.slot + offset << ",\"label\":\"" << to_string(r.label) << "\"";
      if (r.theta) alice << ",\"theta\":" << format_double(*r.theta);
      alice << ",\"detector\":" << r.detector << "}\n";
    }
  }
  detail::finish(eve, summary.eve_log);
  detail::finish(alice, summary.alice_log);
  return summary;
}

enum class Figure { Fig2, Fig4, Fig5, Fig6 };

inline Figure parse_figure(std::string_view name) {
  if (name == "fig2") return Figure::Fig2;
  if (name == "fig4") return Figure::Fig4;
  if (name == "fig5") return Figure::Fig5;
  if (name == "fig6") return Figure::Fig6;
  throw Error(ErrorCode::UnknownFigure, "unknown figure '" + std::string(name) + "'");
}

constexpr std::string_view to_string(Figure f) noexcept {
  switch (f) {
    case Figure::Fig2: return "fig2";
    case Figure::Fig4: return "fig4";
    case Figure::Fig5: return "fig5";
    case Figure::Fig6: return "fig6";
  }
  return "?";
}

struct FigureOutput {
  std::filesystem::path csv;
  nlohmann::json summary;  // headline numbers, printed by the CLI
};

/// Information in a sensing dataset about phi: sum over states of
/// (events of that state) * CFI. Where a state's probability is exactly 0
/// or 1 the CFI is taken just beside the singular point.
inline double sensing_information(const OutcomeCounts& counts, double phi) {
  double info = 0.0;
  for (PreparedStateLabel label : kAllLabels) {
    double f = 0.0;
    try {
      f = cfi_analytic(label, phi);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Singularity) throw;
      f = cfi_analytic(label, phi + 1e-4);
    }
    info += static_cast<double>(counts.label_total(label)) * f;
  }
  return info;
}

namespace detail {

inline FigureOutput reproduce_fig2(const ExperimentConfig& c) {
  const double phi = std::numbers::pi;
  const auto run = run_sensing(c.channel, phi, c.pulses_per_phase, run_seed(c, kFig2, 0), sensing_options(c));
  const auto table = calibration_for(c);
  const auto plain = estimate_phase(run.counts);
  const auto corrected = estimate_phase_corrected(run.counts, table);

  FigureOutput out;
  out.csv = std::filesystem::path(c.output_dir) / "fig2.csv";
  auto f = open_output(out.csv);
  f << "phi,log_likelihood_uncorrected,log_likelihood_corrected\n";
  for (std::size_t i = 0; i < plain.curve.grid.size(); ++i) {
    f << format_double(plain.curve.grid[i]) << ',' << format_double(plain.curve.log_values[i]) << ','
      << format_double(corrected.curve.log_values[i]) << '\n';
  }
  finish(f, out.csv);
  out.summary = {{"figure", "fig2"},
                 {"phi", phi},
                 {"events", run.counts.m()},
                 {"num_maxima_uncorrected", plain.num_maxima},
                 {"num_maxima_corrected", corrected.num_maxima},
                 {"phi_hat_uncorrected", plain.phi_hat},
                 {"phi_hat_corrected", corrected.phi_hat}};
  return out;
}

inline FigureOutput reproduce_fig4(const ExperimentConfig& c) {
  FigureOutput out;
  out.csv = std::filesystem::path(c.output_dir) / "fig4.csv";
  auto f = open_output(out.csv);
  f << "phi,p_spd1_x0,p_spd1_x1,p_spd1_y0,p_spd1_y1,eve_ratio,sensing_events\n";
  nlohmann::json ratios = nlohmann::json::array();
  for (std::size_t k = 0; k < c.phases.size(); ++k) {
    const auto run = run_sensing(c.channel, c.phases[k], c.pulses_per_phase, run_seed(c, kFig4, k), sensing_options(c));
    f << format_double(c.phases[k]);
    for (PreparedStateLabel label : kAllLabels) {
      const auto total = run.counts.label_total(label);
      const double p = total == 0 ? std::numeric_limits<double>::quiet_NaN()
                                  : static_cast<double>(run.counts.n[outcome_index(label, 0)]) / static_cast<double>(total);
      f << ',' << format_double(p);
    }
    const double ratio = eve_ratio(run.eve_view);
    ratios.push_back(ratio);
    f << ',' << format_double(ratio) << ',' << run.counts.m() << '\n';
  }
  finish(f, out.csv);
  out.summary = {{"figure", "fig4"}, {"eve_ratio", ratios}};
  return out;
}

inline FigureOutput reproduce_fig5(const ExperimentConfig& c) {
  std::vector<FisherRow> rows;
  nlohmann::json summary = nlohmann::json::array();
  for (std::size_t k = 0; k < c.fisher_phases.size(); ++k) {
    const double center = c.fisher_phases[k];
    std::array<SensingRun, 3> runs;
    for (std::size_t j = 0; j < 3; ++j) {
      const double phi = center + (static_cast<double>(j) - 1.0) * c.fisher_spacing;
      runs[j] = run_sensing(c.channel, phi, c.pulses_per_phase, run_seed(c, kFig5, 3 * k + j), sensing_options(c));
    }
    double alice_total = 0.0;
    for (PreparedStateLabel label : kAllLabels) {
      ProbabilityTriplet t;
      for (std::size_t j = 0; j < 3; ++j) {
        t.phi[j] = center + (static_cast<double>(j) - 1.0) * c.fisher_spacing;
        const auto total = runs[j].counts.label_total(label);
        if (total == 0) throw Error(ErrorCode::InsufficientData, "no events for a prepared state");
        t.p[j] = static_cast<double>(runs[j].counts.n[outcome_index(label, 0)]) / static_cast<double>(total);
      }
      const auto result = make_fisher_result(cfi_empirical(t), runs[1].counts.label_total(label));
      alice_total += result.cfi;
      rows.push_back({std::string(to_string(label)), center, result});
    }
    std::array<PhasePoint, 3> ratio_curve;
    for (std::size_t j = 0; j < 3; ++j) {
      ratio_curve[j] = {center + (static_cast<double>(j) - 1.0) * c.fisher_spacing, eve_ratio(runs[j].eve_view)};
    }
    const auto eve = eve_cfi_from_ratio(ratio_curve, 1, runs[1].counts.m());
    rows.push_back({"Eve", center, eve});
    summary.push_back({{"phi", center}, {"alice_total_cfi", alice_total}, {"eve_cfi", eve.cfi}});
  }
  FigureOutput out;
  out.csv = std::filesystem::path(c.output_dir) / "fig5.csv";
  auto f = open_output(out.csv);
  write_fisher_csv(f, rows);
  finish(f, out.csv);
  out.summary = {{"figure", "fig5"}, {"phases", summary}};
  return out;
}

inline FigureOutput reproduce_fig6(const ExperimentConfig& c) {
  const auto table = calibration_for(c);
  FigureOutput out;
  out.csv = std::filesystem::path(c.output_dir) / "fig6.csv";
  auto f = open_output(out.csv);
  f << "phi,phi_hat,abs_error,crb\n";
  for (std::size_t k = 0; k < c.phases.size(); ++k) {
    const double phi = c.phases[k];
    const auto run = run_sensing(c.channel, phi, c.pulses_per_phase, run_seed(c, kFig6, k), sensing_options(c));
    const auto est = estimate_phase_corrected(run.counts, table);
    const double bound = 1.0 / std::sqrt(sensing_information(run.counts, phi));
    f << format_double(phi) << ',' << format_double(est.phi_hat) << ','
      << format_double(circular_distance(est.phi_hat, phi)) << ',' << format_double(bound) << '\n';
  }
  finish(f, out.csv);
  out.summary = {{"figure", "fig6"}, {"rows", c.phases.size()}};
  return out;
}

}  // namespace detail

inline FigureOutput reproduce(Figure figure, const ExperimentConfig& config) {
  config.validate();
  switch (figure) {
    case Figure::Fig2: return detail::reproduce_fig2(config);
    case Figure::Fig4: return detail::reproduce_fig4(config);
    case Figure::Fig5: return detail::reproduce_fig5(config);
    case Figure::Fig6: return detail::reproduce_fig6(config);
  }
  throw Error(ErrorCode::UnknownFigure, "unknown figure");
}

struct QberSummary {
  QberReport clean;
  QberReport attacked;

  static bool passes(const QberReport& r) { return r.qber() < kQberThreshold; }
};

/// Check-path QBER with and without a full intercept-resend attack, each
/// over `pulses_per_phase` check-path pulses.
inline QberSummary qber(const ExperimentConfig& config) {
  config.validate();
  QberSummary s;
  s.clean = run_check_path(config.channel, config.pulses_per_phase, detail::run_seed(config, detail::kQber, 0));
  s.attacked = run_check_path(config.channel, config.pulses_per_phase, detail::run_seed(config, detail::kQber, 1),
                              InterceptResend{});
  return s;
}

}  // namespace sqrs
