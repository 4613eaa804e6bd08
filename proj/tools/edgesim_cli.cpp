// Command-line front end: run campaigns, sweep experiment axes, render
// reports, and validate mobility trace files.
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "edgesim/campaign.hpp"
#include "edgesim/config.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

int run_cmd(const std::string& config_path, long seed_override, long trials_override,
            const std::string& out_override) {
  edgesim::ExperimentConfig cfg = edgesim::load_config(config_path);
  if (seed_override >= 0) cfg.base_seed = static_cast<std::uint64_t>(seed_override);
  if (trials_override >= 1) cfg.trials = trials_override;
  if (!out_override.empty()) cfg.out_dir = out_override;
  cfg.validate();
  const edgesim::CampaignSummary s = edgesim::run_campaign(cfg);
  std::cout << "policy=" << s.policy << " trials=" << s.trials
            << " mean_completion_s=" << edgesim::fmt6(s.mean_completion_s)
            << " mean_total_mAh=" << edgesim::fmt6(s.mean_total_mAh)
            << " deadline_met_rate=" << edgesim::fmt6(s.deadline_met_rate) << "\n";
  std::cout << "wrote " << cfg.out_dir << "/trials.csv and " << cfg.out_dir
            << "/summary.csv\n";
  return 0;
}

int sweep_cmd(const std::string& config_path, const std::string& axis_name,
              const std::string& values_csv, const std::string& out_override) {
  edgesim::ExperimentConfig cfg = edgesim::load_config(config_path);
  if (!out_override.empty()) cfg.out_dir = out_override;
  const edgesim::SweepAxis axis = edgesim::parse_axis(axis_name);
  std::vector<double> values;
  std::stringstream ss(values_csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    try {
      values.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw edgesim::ConfigError("sweep value '" + tok + "' is not a number");
    }
  }
  const auto summaries = edgesim::sweep(cfg, axis, values, cfg.out_dir);
  std::cout << "wrote " << cfg.out_dir << "/sweep.csv (" << summaries.size()
            << " point(s))\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"edgesim: deterministic offloading simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir, axis, values, report_dir, trace_path;
  long seed = -1, trials = -1;

  CLI::App* run = app.add_subcommand("run", "run a campaign from a config file");
  run->add_option("--config", config_path, "config file (JSON)")->required();
  run->add_option("--seed", seed, "override base_seed");
  run->add_option("--trials", trials, "override trial count");
  run->add_option("--out", out_dir, "override output directory");

  CLI::App* sweep = app.add_subcommand("sweep", "sweep one experiment axis");
  sweep->add_option("--config", config_path, "config file (JSON)")->required();
  sweep->add_option("--axis", axis, "n_helpers|deadline_s|error_margin|p_leave")
      ->required();
  sweep->add_option("--values", values, "comma-separated axis values")->required();
  sweep->add_option("--out", out_dir, "override output directory");

  CLI::App* report = app.add_subcommand("report", "render tables and plot data");
  report->add_option("dir", report_dir, "results directory")->required();

  CLI::App* validate = app.add_subcommand("validate-trace", "check a mobility trace");
  validate->add_option("file", trace_path, "trace CSV file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return run_cmd(config_path, seed, trials, out_dir);
    if (sweep->parsed()) return sweep_cmd(config_path, axis, values, out_dir);
    if (report->parsed()) {
      edgesim::report(report_dir, std::cout);
      return 0;
    }
    if (validate->parsed()) {
      if (!std::filesystem::exists(trace_path)) {
        std::cerr << "error: no such file: " << trace_path << "\n";
        return kExitIo;
      }
      std::cout << edgesim::validate_trace(trace_path) << "\n";
      return 0;
    }
  } catch (const edgesim::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const edgesim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const edgesim::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const edgesim::GapError& e) {
    std::cerr << "trace error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const edgesim::SimError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
