#pragma once

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "edgesim/engine.hpp"

namespace edgesim {

// Device presets fitted against measured single-phone baselines; see
// scripts/fit_presets.py for the derivation.
inline DeviceProfile device_preset(const std::string& name) {
  DeviceProfile p;
  if (name == "nexus5_master") {
    p.mean_service_s = 8.8190416667;   // (674.1425 - 145) / 60
    p.service_jitter = 0.05;
    p.link_bandwidth_Bps = 5'000'000;
    p.cpu_current_mA = {{0, 0, 218.536670}}; // 32.1214 mAh over 529.1425 s
    p.wifi_power_mA = 20.0;
    p.initial_delay_s = 145.0;
    p.group_owner_overhead = 1.2; // group-owner duty makes local processing pricier
  } else if (name == "nexus5_worker") {
    p.mean_service_s = 4.2;
    p.service_jitter = 0.05;
    p.link_bandwidth_Bps = 5'000'000;
    p.cpu_current_mA = {{0, 0, 341.0671}}; // closes the 24.8485 mAh offload anchor
    p.wifi_power_mA = 20.0;
    p.initial_delay_s = 80.0;
    p.group_owner_overhead = 1.0;
  } else if (name == "nexus6p_worker") {
    p.mean_service_s = 6.0;
    p.service_jitter = 0.05;
    p.link_bandwidth_Bps = 10'000'000;
    p.cpu_current_mA = {{0, 0, 160.0}};
    p.wifi_power_mA = 20.0;
    p.initial_delay_s = 0.0;
    p.group_owner_overhead = 1.0;
  } else {
    throw ConfigError("unknown device preset '" + name + "'");
  }
  return p;
}

namespace detail {

using json = nlohmann::json;

inline void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                           const std::string& path) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError("unknown field '" + path + it.key() + "'");
}

inline double get_num(const json& obj, const std::string& key, double fallback,
                      const std::string& path) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_number())
    throw ConfigError("'" + path + key + "' must be a number");
  return obj.at(key).get<double>();
}

inline PolicyType parse_policy(const std::string& s) {
  if (s == "no_cooperation") return PolicyType::NoCooperation;
  if (s == "full_offloading") return PolicyType::FullOffloading;
  if (s == "macc_serial") return PolicyType::MaccSerial;
  if (s == "prcomp_serial") return PolicyType::PrCompSerial;
  if (s == "macc_parallel") return PolicyType::MaccParallel;
  if (s == "parallel_baseline") return PolicyType::ParallelBaseline;
  if (s == "arc") return PolicyType::Arc;
  throw ConfigError("unknown policy '" + s + "'");
}

inline EnergyModel::Kind parse_energy_kind(const std::string& s) {
  if (s == "ordinary") return EnergyModel::Kind::Ordinary;
  if (s == "new") return EnergyModel::Kind::New;
  if (s == "newest") return EnergyModel::Kind::Newest;
  if (s == "prcomp_ewma") return EnergyModel::Kind::PrCompEwma;
  throw ConfigError("unknown energy model '" + s + "'");
}

inline DeviceProfile parse_device(const json& j, int index) {
  const std::string path = "devices[" + std::to_string(index) + "].";
  reject_unknown(j, {"preset", "mean_service_s", "service_jitter",
                     "link_bandwidth_Bps", "cpu_current_mA", "wifi_power_mA",
                     "initial_delay_s", "group_owner_overhead"},
                 path);
  DeviceProfile p;
  if (j.contains("preset")) p = device_preset(j.at("preset").get<std::string>());
  p.id = index;
  p.mean_service_s = get_num(j, "mean_service_s", p.mean_service_s, path);
  p.service_jitter = get_num(j, "service_jitter", p.service_jitter, path);
  p.link_bandwidth_Bps = get_num(j, "link_bandwidth_Bps", p.link_bandwidth_Bps, path);
  p.wifi_power_mA = get_num(j, "wifi_power_mA", p.wifi_power_mA, path);
  p.initial_delay_s = get_num(j, "initial_delay_s", p.initial_delay_s, path);
  p.group_owner_overhead = get_num(j, "group_owner_overhead", p.group_owner_overhead, path);
  if (j.contains("cpu_current_mA")) {
    p.cpu_current_mA.clear();
    for (const auto& e : j.at("cpu_current_mA")) {
      reject_unknown(e, {"cluster", "speed", "current_mA"}, path + "cpu_current_mA.");
      CpuPowerEntry entry;
      entry.cluster = static_cast<int>(get_num(e, "cluster", 0, path));
      entry.speed = static_cast<int>(get_num(e, "speed", 0, path));
      entry.current_mA = get_num(e, "current_mA", 0, path);
      p.cpu_current_mA.push_back(entry);
    }
  }
  return p;
}

inline MobilitySpec parse_mobility(const json& j, int index) {
  const std::string path = "mobility[" + std::to_string(index) + "].";
  reject_unknown(j, {"kind", "p_leave", "p_return", "slot_s", "initial_in_range",
                     "path", "device"},
                 path);
  MobilitySpec m;
  const std::string kind = j.value("kind", std::string("markov"));
  if (kind == "markov") {
    m.kind = MobilitySpec::Kind::Markov;
    m.markov.p_leave = get_num(j, "p_leave", 0.0, path);
    m.markov.p_return = get_num(j, "p_return", 0.0, path);
    m.markov.slot_s = get_num(j, "slot_s", 10.0, path);
    m.markov.initial_state = j.value("initial_in_range", true);
  } else if (kind == "trace") {
    m.kind = MobilitySpec::Kind::Trace;
    if (!j.contains("path")) throw ConfigError("'" + path + "path' is required");
    m.trace_path = j.at("path").get<std::string>();
    m.trace_device = static_cast<int>(get_num(j, "device", 0, path));
    m.trace_slot_s = get_num(j, "slot_s", 0.0, path);
  } else {
    throw ConfigError("unknown mobility kind '" + kind + "'");
  }
  return m;
}

inline MobilityPredictor parse_predictor(const json& j, int index) {
  const std::string path = "predictor[" + std::to_string(index) + "].";
  reject_unknown(j, {"kind", "p_out", "error_margin", "window_slots"}, path);
  MobilityPredictor p;
  const std::string kind = j.value("kind", std::string("statistical"));
  if (kind == "statistical") p.kind = MobilityPredictor::Kind::Statistical;
  else if (kind == "predicted") p.kind = MobilityPredictor::Kind::Predicted;
  else if (kind == "majority_vote") p.kind = MobilityPredictor::Kind::MajorityVote;
  else throw ConfigError("unknown predictor kind '" + kind + "'");
  p.p_out = get_num(j, "p_out", 0.0, path);
  p.error_margin = get_num(j, "error_margin", 0.0, path);
  p.window_slots = static_cast<int>(get_num(j, "window_slots", 11, path));
  return p;
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  using detail::get_num;
  using detail::reject_unknown;
  if (!j.is_object()) throw ConfigError("top-level config must be an object");
  reject_unknown(j, {"policy", "energy_model", "tasks", "deadline_s", "devices",
                     "mobility", "predictor", "p_model", "trials", "base_seed",
                     "probe_interval_s", "probe_scale", "masters", "out_dir",
                     "emit_event_log", "wait_interval_s", "notify_latency_s",
                     "retrieve_timeout_s", "max_sim_s"},
                 "");
  ExperimentConfig cfg;
  if (!j.contains("policy")) throw ConfigError("'policy' is required");
  cfg.policy.type = detail::parse_policy(j.at("policy").get<std::string>());
  if (cfg.policy.type == PolicyType::PrCompSerial ||
      cfg.policy.type == PolicyType::ParallelBaseline ||
      cfg.policy.type == PolicyType::Arc)
    cfg.policy.energy.kind = EnergyModel::Kind::PrCompEwma;
  if (j.contains("energy_model")) {
    const auto& e = j.at("energy_model");
    reject_unknown(e, {"kind", "use_helper_fail_energy", "beta"}, "energy_model.");
    if (e.contains("kind"))
      cfg.policy.energy.kind = detail::parse_energy_kind(e.at("kind").get<std::string>());
    cfg.policy.energy.use_helper_fail_energy =
        e.value("use_helper_fail_energy", cfg.policy.energy.use_helper_fail_energy);
    cfg.policy.energy.beta = get_num(e, "beta", cfg.policy.energy.beta, "energy_model.");
  }
  if (!j.contains("tasks")) throw ConfigError("'tasks' is required");
  {
    const auto& t = j.at("tasks");
    reject_unknown(t, {"K", "payload_bytes", "result_bytes", "work_units"}, "tasks.");
    cfg.K = static_cast<long>(get_num(t, "K", 1, "tasks."));
    cfg.payload_bytes = static_cast<std::int64_t>(get_num(t, "payload_bytes", 1, "tasks."));
    cfg.result_bytes = static_cast<std::int64_t>(get_num(t, "result_bytes", 0, "tasks."));
    cfg.work_units = get_num(t, "work_units", 1.0, "tasks.");
  }
  if (!j.contains("deadline_s")) throw ConfigError("'deadline_s' is required");
  cfg.deadline_s = get_num(j, "deadline_s", 0, "");
  if (!j.contains("devices") || !j.at("devices").is_array() || j.at("devices").empty())
    throw ConfigError("'devices' must be a non-empty array");
  int idx = 0;
  for (const auto& d : j.at("devices")) cfg.devices.push_back(detail::parse_device(d, idx++));
  if (j.contains("mobility")) {
    idx = 0;
    for (const auto& m : j.at("mobility"))
      cfg.mobility.push_back(detail::parse_mobility(m, idx++));
  }
  // Workers without an explicit mobility block never leave.
  while (cfg.mobility.size() + 1 < cfg.devices.size())
    cfg.mobility.push_back(MobilitySpec{});
  if (j.contains("predictor")) {
    idx = 0;
    for (const auto& p : j.at("predictor"))
      cfg.predictor.push_back(detail::parse_predictor(p, idx++));
    while (cfg.predictor.size() + 1 < cfg.devices.size())
      cfg.predictor.push_back(MobilityPredictor{});
  }
  if (j.contains("p_model")) {
    const std::string pm = j.at("p_model").get<std::string>();
    if (pm == "stationary") cfg.p_model = PModel::Stationary;
    else if (pm == "leave") cfg.p_model = PModel::Leave;
    else throw ConfigError("p_model must be 'stationary' or 'leave'");
  }
  cfg.trials = static_cast<long>(get_num(j, "trials", 1, ""));
  cfg.base_seed = static_cast<std::uint64_t>(get_num(j, "base_seed", 0, ""));
  cfg.probe_interval_s = get_num(j, "probe_interval_s", cfg.probe_interval_s, "");
  cfg.probe_scale = get_num(j, "probe_scale", cfg.probe_scale, "");
  if (j.contains("masters")) {
    cfg.masters.clear();
    for (const auto& m : j.at("masters")) {
      reject_unknown(m, {"start_s"}, "masters.");
      cfg.masters.push_back({get_num(m, "start_s", 0.0, "masters.")});
    }
  }
  cfg.out_dir = j.value("out_dir", cfg.out_dir);
  cfg.emit_event_log = j.value("emit_event_log", cfg.emit_event_log);
  cfg.wait_interval_s = get_num(j, "wait_interval_s", cfg.wait_interval_s, "");
  cfg.notify_latency_s = get_num(j, "notify_latency_s", cfg.notify_latency_s, "");
  cfg.retrieve_timeout_s = get_num(j, "retrieve_timeout_s", cfg.retrieve_timeout_s, "");
  cfg.max_sim_s = get_num(j, "max_sim_s", cfg.max_sim_s, "");
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

}  // namespace edgesim
