#pragma once

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "edgesim/config.hpp"
#include "edgesim/engine.hpp"

namespace edgesim {

// Fixed-format floats keep the CSVs byte-identical across platforms.
inline std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

struct CampaignSummary {
  std::string policy;
  int n_workers = 0;
  long trials = 0;
  double mean_completion_s = 0, min_completion_s = 0, max_completion_s = 0;
  double mean_total_mAh = 0, min_total_mAh = 0, max_total_mAh = 0;
  double mean_master_mAh = 0;
  double mean_failed_attempts = 0;
  double deadline_met_rate = 0;
};

inline CampaignSummary summarize(const std::vector<TrialResult>& rs) {
  if (rs.empty()) throw SimError("cannot summarize zero trials");
  CampaignSummary s;
  s.policy = rs.front().scheduler;
  s.n_workers = rs.front().n_workers;
  s.trials = static_cast<long>(rs.size());
  s.min_completion_s = s.max_completion_s = rs.front().completion_time_s;
  s.min_total_mAh = s.max_total_mAh = rs.front().total_energy_mAh;
  long met = 0;
  for (const auto& r : rs) {
    s.mean_completion_s += r.completion_time_s;
    s.min_completion_s = std::min(s.min_completion_s, r.completion_time_s);
    s.max_completion_s = std::max(s.max_completion_s, r.completion_time_s);
    s.mean_total_mAh += r.total_energy_mAh;
    s.min_total_mAh = std::min(s.min_total_mAh, r.total_energy_mAh);
    s.max_total_mAh = std::max(s.max_total_mAh, r.total_energy_mAh);
    s.mean_master_mAh += r.master_energy_mAh;
    s.mean_failed_attempts += r.failed_attempts;
    if (r.deadline_met) ++met;
  }
  s.mean_completion_s /= s.trials;
  s.mean_total_mAh /= s.trials;
  s.mean_master_mAh /= s.trials;
  s.mean_failed_attempts /= s.trials;
  s.deadline_met_rate = static_cast<double>(met) / s.trials;
  return s;
}

inline int thread_cap() {
  if (const char* env = std::getenv("EDGESIM_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// Runs `trials` trials with seeds base_seed..base_seed+trials-1.  Each trial is
// single-threaded; trials run concurrently up to the EDGESIM_THREADS cap.
inline std::vector<TrialResult> run_trials(const ExperimentConfig& cfg,
                                           std::vector<std::vector<std::string>>* logs = nullptr) {
  std::vector<TrialResult> results(cfg.trials);
  if (logs) logs->assign(cfg.trials, {});
  std::atomic<long> next{0};
  const int n_threads = std::min<long>(thread_cap(), cfg.trials);
  auto worker = [&]() {
    for (;;) {
      const long i = next.fetch_add(1);
      if (i >= cfg.trials) return;
      TrialEngine engine(cfg, cfg.base_seed + static_cast<std::uint64_t>(i));
      results[i] = engine.run();
      if (logs && cfg.emit_event_log) (*logs)[i] = engine.event_log();
    }
  };
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return results;
}

constexpr const char* kTrialsHeader =
    "trial,seed,policy,n_workers,completed,failed_attempts,completion_s,"
    "total_mAh,master_mAh,deadline_met";

inline void write_trials_csv(const std::string& path,
                             const std::vector<TrialResult>& rs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "# edgesim trials v1\n" << kTrialsHeader << "\n";
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const TrialResult& r = rs[i];
    out << i << "," << r.seed << "," << r.scheduler << "," << r.n_workers << ","
        << r.completed << "," << r.failed_attempts << ","
        << fmt6(r.completion_time_s) << "," << fmt6(r.total_energy_mAh) << ","
        << fmt6(r.master_energy_mAh) << "," << (r.deadline_met ? 1 : 0) << "\n";
  }
}

constexpr const char* kSummaryHeader =
    "policy,n_workers,trials,mean_completion_s,min_completion_s,max_completion_s,"
    "mean_total_mAh,min_total_mAh,max_total_mAh,mean_master_mAh,"
    "mean_failed_attempts,deadline_met_rate";

inline std::string summary_row(const CampaignSummary& s) {
  std::ostringstream out;
  out << s.policy << "," << s.n_workers << "," << s.trials << ","
      << fmt6(s.mean_completion_s) << "," << fmt6(s.min_completion_s) << ","
      << fmt6(s.max_completion_s) << "," << fmt6(s.mean_total_mAh) << ","
      << fmt6(s.min_total_mAh) << "," << fmt6(s.max_total_mAh) << ","
      << fmt6(s.mean_master_mAh) << "," << fmt6(s.mean_failed_attempts) << ","
      << fmt6(s.deadline_met_rate);
  return out.str();
}

inline void write_summary_csv(const std::string& path, const CampaignSummary& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "# edgesim summary v1\n" << kSummaryHeader << "\n" << summary_row(s) << "\n";
}

inline CampaignSummary run_campaign(const ExperimentConfig& cfg) {
  std::vector<std::vector<std::string>> logs;
  auto results = run_trials(cfg, &logs);
  std::filesystem::create_directories(cfg.out_dir);
  write_trials_csv(cfg.out_dir + "/trials.csv", results);
  CampaignSummary s = summarize(results);
  write_summary_csv(cfg.out_dir + "/summary.csv", s);
  if (cfg.emit_event_log) {
    for (std::size_t i = 0; i < logs.size(); ++i) {
      std::ofstream out(cfg.out_dir + "/events_trial" + std::to_string(i) + ".csv",
                        std::ios::binary);
      if (!out) throw IoError("cannot write event log");
      out << "at_us,kind,task,device,detail\n";
      for (const auto& row : logs[i]) out << row << "\n";
    }
  }
  return s;
}

// ---- sweeps ----------------------------------------------------------------

enum class SweepAxis { NHelpers, DeadlineS, ErrorMargin, PLeave };

inline SweepAxis parse_axis(const std::string& s) {
  if (s == "n_helpers") return SweepAxis::NHelpers;
  if (s == "deadline_s") return SweepAxis::DeadlineS;
  if (s == "error_margin") return SweepAxis::ErrorMargin;
  if (s == "p_leave") return SweepAxis::PLeave;
  throw ConfigError("unknown sweep axis '" + s + "'");
}

// Helper-count sweeps clone the last worker profile; the first worker keeps
// its own mobility while added workers take the last ("rest") mobility block.
inline ExperimentConfig apply_sweep_point(ExperimentConfig cfg, SweepAxis axis,
                                          double value) {
  switch (axis) {
    case SweepAxis::NHelpers: {
      const int target = static_cast<int>(value);
      if (target < 1) throw ConfigError("n_helpers sweep values must be >= 1");
      if (cfg.devices.size() < 2)
        throw ConfigError("n_helpers sweep needs a worker to clone");
      const DeviceProfile tmpl = cfg.devices.back();
      const MobilitySpec rest_mob = cfg.mobility.back();
      const MobilityPredictor rest_pred =
          cfg.predictor.empty() ? MobilityPredictor{} : cfg.predictor.back();
      cfg.devices.resize(1 + target, tmpl);
      for (std::size_t d = 1; d < cfg.devices.size(); ++d)
        cfg.devices[d].id = static_cast<int>(d);
      cfg.mobility.resize(target, rest_mob);
      if (!cfg.predictor.empty()) cfg.predictor.resize(target, rest_pred);
      break;
    }
    case SweepAxis::DeadlineS:
      cfg.deadline_s = value;
      break;
    case SweepAxis::ErrorMargin:
      if (cfg.predictor.empty())
        cfg.predictor.assign(cfg.devices.size() - 1, MobilityPredictor{});
      for (auto& p : cfg.predictor) {
        p.kind = MobilityPredictor::Kind::Predicted;
        p.error_margin = value;
      }
      break;
    case SweepAxis::PLeave:
      for (auto& m : cfg.mobility)
        if (m.kind == MobilitySpec::Kind::Markov) m.markov.p_leave = value;
      break;
  }
  cfg.validate();
  return cfg;
}

inline std::vector<CampaignSummary> sweep(const ExperimentConfig& base, SweepAxis axis,
                                          const std::vector<double>& values,
                                          const std::string& out_dir) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  std::vector<CampaignSummary> out;
  std::filesystem::create_directories(out_dir);
  std::ofstream csv(out_dir + "/sweep.csv", std::ios::binary);
  if (!csv) throw IoError("cannot write sweep.csv");
  csv << "# edgesim sweep v1\naxis,value," << kSummaryHeader << "\n";
  const char* axis_name = axis == SweepAxis::NHelpers ? "n_helpers"
                          : axis == SweepAxis::DeadlineS ? "deadline_s"
                          : axis == SweepAxis::ErrorMargin ? "error_margin"
                                                           : "p_leave";
  for (double v : values) {
    ExperimentConfig cfg = apply_sweep_point(base, axis, v);
    auto results = run_trials(cfg);
    CampaignSummary s = summarize(results);
    csv << axis_name << "," << fmt6(v) << "," << summary_row(s) << "\n";
    out.push_back(s);
  }
  return out;
}

// ---- report ----------------------------------------------------------------

namespace detail {

inline std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

inline int column(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  throw ParseError("missing column '" + name + "'");
}

inline void print_aligned(std::ostream& os,
                          const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& r : rows)
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c >= width.size()) width.push_back(0);
      width[c] = std::max(width[c], r[c].size());
    }
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      os << r[c];
      if (c + 1 < r.size()) os << std::string(width[c] - r[c].size() + 2, ' ');
    }
    os << "\n";
  }
}

struct SeriesPoint {
  double mean = 0, mn = 0, mx = 0;
};

}  // namespace detail

// Prints aligned tables from a results directory and writes per-figure
// plotdata_*.csv files (x, series, mean, min, max).
inline void report(const std::string& results_dir, std::ostream& os) {
  namespace fs = std::filesystem;
  const std::string sweep_path = results_dir + "/sweep.csv";
  const std::string trials_path = results_dir + "/trials.csv";
  const bool has_sweep = fs::exists(sweep_path);
  const bool has_trials = fs::exists(trials_path);
  if (!has_sweep && !has_trials)
    throw IoError("no sweep.csv or trials.csv in " + results_dir);

  auto write_plotdata = [&](const std::string& name,
                            const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(results_dir + "/plotdata_" + name + ".csv", std::ios::binary);
    if (!out) throw IoError("cannot write plotdata_" + name + ".csv");
    out << "x,series,mean,min,max\n";
    for (const auto& r : rows) {
      for (std::size_t c = 0; c < r.size(); ++c)
        out << r[c] << (c + 1 < r.size() ? "," : "\n");
    }
  };

  if (has_sweep) {
    auto rows = detail::read_csv(sweep_path);
    if (rows.size() < 2) throw ParseError("sweep.csv has no data rows");
    const auto& h = rows.front();
    const int c_val = detail::column(h, "value");
    const int c_pol = detail::column(h, "policy");
    const int c_mc = detail::column(h, "mean_completion_s");
    const int c_nc = detail::column(h, "min_completion_s");
    const int c_xc = detail::column(h, "max_completion_s");
    const int c_me = detail::column(h, "mean_total_mAh");
    const int c_ne = detail::column(h, "min_total_mAh");
    const int c_xe = detail::column(h, "max_total_mAh");
    os << "Sweep results (" << sweep_path << ")\n";
    detail::print_aligned(os, rows);
    std::vector<std::vector<std::string>> comp, energy;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto& r = rows[i];
      comp.push_back({r[c_val], r[c_pol], r[c_mc], r[c_nc], r[c_xc]});
      energy.push_back({r[c_val], r[c_pol], r[c_me], r[c_ne], r[c_xe]});
    }
    write_plotdata("completion", comp);
    write_plotdata("energy", energy);
  }
  if (has_trials) {
    auto rows = detail::read_csv(trials_path);
    if (rows.size() < 2) throw ParseError("trials.csv has no data rows");
    os << "Trial results (" << trials_path << ")\n";
    detail::print_aligned(os, rows);
    if (!has_sweep) {
      // Single campaign: one series, x = worker count.
      const auto& h = rows.front();
      const int c_pol = detail::column(h, "policy");
      const int c_nw = detail::column(h, "n_workers");
      const int c_cs = detail::column(h, "completion_s");
      const int c_te = detail::column(h, "total_mAh");
      std::vector<double> cs, te;
      for (std::size_t i = 1; i < rows.size(); ++i) {
        cs.push_back(std::stod(rows[i][c_cs]));
        te.push_back(std::stod(rows[i][c_te]));
      }
      auto agg = [](const std::vector<double>& v) {
        detail::SeriesPoint p;
        p.mn = p.mx = v.front();
        for (double x : v) {
          p.mean += x;
          p.mn = std::min(p.mn, x);
          p.mx = std::max(p.mx, x);
        }
        p.mean /= static_cast<double>(v.size());
        return p;
      };
      const auto pc = agg(cs);
      const auto pe = agg(te);
      const std::string x = rows[1][c_nw];
      const std::string series = rows[1][c_pol];
      write_plotdata("completion",
                     {{x, series, fmt6(pc.mean), fmt6(pc.mn), fmt6(pc.mx)}});
      write_plotdata("energy",
                     {{x, series, fmt6(pe.mean), fmt6(pe.mn), fmt6(pe.mx)}});
    }
  }
}

// Loads and sanity-checks a mobility trace; returns a one-line description.
inline std::string validate_trace(const std::string& path) {
  const MobilityTrace t = load_trace(path);
  std::size_t slots = 0;
  for (const auto& [dev, states] : t.states) slots = std::max(slots, states.size());
  std::ostringstream os;
  os << "ok: " << t.states.size() << " device(s), " << slots << " slot(s), slot_s="
     << t.slot_s;
  return os.str();
}

}  // namespace edgesim
