// sqrs: command-line front end for the remote-sensing simulator.
//
//   sqrs simulate  [--config F] [--seed S] [--phases a,b,..] [--pulses N] [--out DIR] [--attack]
//   sqrs reproduce --figure fig2|fig4|fig5|fig6 [same options]
//   sqrs qber      [same options]
//   sqrs config    [--out FILE]          write the default config
//
// Results go to stdout as JSON lines. Failures print one JSON line
// {"error": <code>, "message": ...} to stderr and exit nonzero.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sqrs/sqrs.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::vector<double> phases;
  std::optional<std::uint64_t> pulses;
  std::optional<std::string> out;
  bool attack = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "JSON experiment config");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--phases", o.phases, "comma-separated phases in radians")->delimiter(',');
  cmd->add_option("--pulses", o.pulses, "emitted pulses per phase");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_flag("--attack", o.attack, "intercept-resend on every pulse");
}

sqrs::ExperimentConfig resolve(const Overrides& o) {
  sqrs::ExperimentConfig c = o.config_path.empty() ? sqrs::default_config() : sqrs::load_config(o.config_path);
  if (o.seed) c.seed = *o.seed;
  if (!o.phases.empty()) c.phases = o.phases;
  if (o.pulses) c.pulses_per_phase = *o.pulses;
  if (o.out) c.output_dir = *o.out;
  if (o.attack) c.attack = true;
  c.validate();
  return c;
}

int fail(std::string_view code, const std::string& message) {
  std::cerr << nlohmann::json{{"error", code}, {"message", message}}.dump() << '\n';
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entanglement-free secure quantum remote sensing simulator"};
  app.require_subcommand(1);

  Overrides opts;
  std::string figure;
  std::string config_out;

  auto* simulate = app.add_subcommand("simulate", "simulate every phase and write counts and event logs");
  add_common(simulate, opts);
  auto* reproduce = app.add_subcommand("reproduce", "write the data behind one figure as CSV");
  add_common(reproduce, opts);
  reproduce->add_option("--figure", figure, "fig2, fig4, fig5 or fig6")->required();
  auto* qber = app.add_subcommand("qber", "check-path QBER with and without intercept-resend");
  add_common(qber, opts);
  auto* config = app.add_subcommand("config", "print or write the default config");
  config->add_option("--out", config_out, "file to write");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what());
  }

  try {
    if (config->parsed()) {
      const auto text = sqrs::to_json(sqrs::default_config()).dump(2) + "\n";
      if (config_out.empty()) {
        std::cout << text;
      } else {
        std::ofstream f(config_out, std::ios::binary | std::ios::trunc);
        if (!(f << text)) throw sqrs::Error(sqrs::ErrorCode::Io, "cannot write " + config_out);
      }
      return 0;
    }

    const auto cfg = resolve(opts);
    if (simulate->parsed()) {
      const auto s = sqrs::simulate(cfg);
      nlohmann::json files = nlohmann::json::array();
      for (const auto& p : s.counts_files) files.push_back(p.string());
      std::cout << nlohmann::json{{"command", "simulate"},
                                  {"counts_files", files},
                                  {"eve_log", s.eve_log.string()},
                                  {"alice_log", s.alice_log.string()}}
                       .dump()
                << '\n';
    } else if (reproduce->parsed()) {
      const auto out = sqrs::reproduce(sqrs::parse_figure(figure), cfg);
      auto summary = out.summary;
      summary["csv"] = out.csv.string();
      std::cout << summary.dump() << '\n';
    } else if (qber->parsed()) {
      const auto s = sqrs::qber(cfg);
      auto line = [](std::string_view name, const sqrs::QberReport& r) {
        return nlohmann::json{{"run", name},
                              {"sifted", r.sifted_count},
                              {"errors", r.error_count},
                              {"qber", r.qber()},
                              {"threshold", sqrs::kQberThreshold},
                              {"verdict", sqrs::QberSummary::passes(r) ? "PASS" : "FAIL"}};
      };
      std::cout << line("no_attack", s.clean).dump() << '\n' << line("intercept_resend", s.attacked).dump() << '\n';
    }
  } catch (const sqrs::Error& e) {
    return fail(sqrs::to_string(e.code()), e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
  return 0;
}
