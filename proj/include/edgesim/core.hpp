#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace edgesim {

// Virtual time is an integer microsecond tick count. All seconds values
// exposed to callers are conversions of this integer clock.
using Micros = std::int64_t;
constexpr Micros kMicrosPerSec = 1'000'000;

inline double to_seconds(Micros t) { return static_cast<double>(t) / kMicrosPerSec; }
inline Micros to_micros(double s) { return static_cast<Micros>(s * kMicrosPerSec + (s >= 0 ? 0.5 : -0.5)); }

// Device 0 is always the master / local processing.
using DeviceId = int;
constexpr DeviceId kLocalDevice = 0;

struct SimError : std::runtime_error {
  explicit SimError(const std::string& what) : std::runtime_error(what) {}
};
struct NegativeDelta : SimError { using SimError::SimError; };
struct ZeroSystemTime : SimError { using SimError::SimError; };
struct DuplicateAttempt : SimError { using SimError::SimError; };
struct NoSamples : SimError { using SimError::SimError; };
struct DegenerateChain : SimError { using SimError::SimError; };
struct InsufficientHistory : SimError { using SimError::SimError; };
struct CertainlyAbsent : SimError { using SimError::SimError; };
struct ParseError : SimError { using SimError::SimError; };
struct GapError : SimError { using SimError::SimError; };
struct ConfigError : SimError { using SimError::SimError; };
struct NoDevices : SimError { using SimError::SimError; };
struct IoError : SimError { using SimError::SimError; };

// Current draw of one CPU cluster running at one speed.
struct CpuPowerEntry {
  int cluster = 0;
  int speed = 0;
  double current_mA = 0.0;
};

struct DeviceProfile {
  DeviceId id = 0;
  double mean_service_s = 1.0;     // true mean per-task processing time
  double service_jitter = 0.0;     // uniform multiplicative noise half-width, in [0,1)
  double link_bandwidth_Bps = 1.0; // unused for device 0
  std::vector<CpuPowerEntry> cpu_current_mA{{0, 0, 100.0}};
  double wifi_power_mA = 0.0;
  double initial_delay_s = 0.0;    // w_n: time before the device may accept its first task
  double group_owner_overhead = 1.0; // multiplies the master's local service time while workers are attached

  void validate() const {
    if (id < 0) throw ConfigError("device id must be >= 0");
    if (mean_service_s <= 0) throw ConfigError("mean_service_s must be > 0");
    if (service_jitter < 0 || service_jitter >= 1)
      throw ConfigError("service_jitter must be in [0,1)");
    if (mean_service_s * (1.0 - service_jitter) <= 0)
      throw ConfigError("mean_service_s*(1-jitter) must be > 0");
    if (id != kLocalDevice && link_bandwidth_Bps <= 0)
      throw ConfigError("link_bandwidth_Bps must be > 0");
    if (cpu_current_mA.empty()) throw ConfigError("cpu_current_mA must not be empty");
    for (const auto& e : cpu_current_mA)
      if (e.current_mA <= 0) throw ConfigError("cpu current must be > 0");
    if (wifi_power_mA < 0) throw ConfigError("wifi_power_mA must be >= 0");
    if (initial_delay_s < 0) throw ConfigError("initial_delay_s must be >= 0");
    if (group_owner_overhead < 1.0)
      throw ConfigError("group_owner_overhead must be >= 1");
  }
};

struct TaskSpec {
  int task_id = 0;
  std::int64_t payload_bytes = 1;
  std::int64_t result_bytes = 0;
  double work_units = 1.0; // scales service time linearly
};

enum class AttemptStatus { Success, FailedAtStep1, FailedAtStep2, FailedAtStep3 };

inline bool is_failure(AttemptStatus s) { return s != AttemptStatus::Success; }
inline int failed_step(AttemptStatus s) {
  switch (s) {
    case AttemptStatus::FailedAtStep1: return 1;
    case AttemptStatus::FailedAtStep2: return 2;
    case AttemptStatus::FailedAtStep3: return 3;
    default: return 0;
  }
}

struct TaskOutcome {
  int task_id = 0;
  DeviceId device = 0;   // executing device; 0 = local processing
  int attempt = 1;       // 1-based attempt counter for this task
  AttemptStatus status = AttemptStatus::Success;
  double start_s = 0.0;
  double end_s = 0.0;
  double master_energy_mAh = 0.0;
  double worker_energy_mAh = 0.0; // zero for local processing
  bool probe = false;             // probe attempts refresh stats but do not count toward K

  double delay_s() const { return end_s - start_s; }
  double total_energy_mAh() const { return master_energy_mAh + worker_energy_mAh; }
};

// Counter snapshot as read from a device's CPU bookkeeping.
struct LedgerSnapshot {
  double cpu_time_app_s = 0.0;  // T_a
  double cpu_time_all_s = 0.0;  // T_all
  double wifi_active_s = 0.0;
  std::map<std::pair<int, int>, double> cluster_speed_time_s; // tau_{c,s}
};

// CPU energy attributable to the app over the interval [before, after]:
// the app's share of system CPU time times the total cluster-speed energy.
inline double interval_cpu_energy(const LedgerSnapshot& before,
                                  const LedgerSnapshot& after,
                                  const DeviceProfile& profile) {
  const double d_app = after.cpu_time_app_s - before.cpu_time_app_s;
  const double d_all = after.cpu_time_all_s - before.cpu_time_all_s;
  if (d_app < 0 || d_all < 0) throw NegativeDelta("cpu counter decreased");
  double sum_mAs = 0.0;
  for (const auto& e : profile.cpu_current_mA) {
    const auto key = std::make_pair(e.cluster, e.speed);
    const double t1 = after.cluster_speed_time_s.count(key)
                          ? after.cluster_speed_time_s.at(key) : 0.0;
    const double t0 = before.cluster_speed_time_s.count(key)
                          ? before.cluster_speed_time_s.at(key) : 0.0;
    if (t1 - t0 < 0) throw NegativeDelta("cluster-speed counter decreased");
    sum_mAs += (t1 - t0) * e.current_mA;
  }
  if (d_app == 0) return 0.0;
  if (d_all == 0) throw ZeroSystemTime("T_all delta is zero while T_a delta > 0");
  return (d_app / d_all) * sum_mAs / 3600.0;
}

inline double wifi_energy(double active_s, const DeviceProfile& profile) {
  if (active_s < 0) throw NegativeDelta("wifi active time negative");
  return active_s / 3600.0 * profile.wifi_power_mA;
}

// Ground-truth per-device, per-attempt energy accounting.
class EnergyLedger {
 public:
  struct Entry {
    int task_id;
    DeviceId device;  // executing device of the attempt
    int attempt;
    double master_energy_mAh;
    double worker_energy_mAh;
  };

  void record_attempt(const TaskOutcome& o) {
    const Key key{o.task_id, o.device, o.attempt};
    if (!seen_.insert(key).second)
      throw DuplicateAttempt("attempt already recorded: task " + std::to_string(o.task_id) +
                             " device " + std::to_string(o.device) +
                             " attempt " + std::to_string(o.attempt));
    entries_.push_back({o.task_id, o.device, o.attempt,
                        o.master_energy_mAh, o.worker_energy_mAh});
    master_total_mAh_ += o.master_energy_mAh;
    worker_total_mAh_ += o.worker_energy_mAh;
    per_device_mAh_[o.device] += o.worker_energy_mAh;
    per_device_mAh_[kLocalDevice] += o.master_energy_mAh;
  }

  double master_total_mAh() const { return master_total_mAh_; }
  double worker_total_mAh() const { return worker_total_mAh_; }
  double total_mAh() const { return master_total_mAh_ + worker_total_mAh_; }
  double device_mAh(DeviceId d) const {
    auto it = per_device_mAh_.find(d);
    return it == per_device_mAh_.end() ? 0.0 : it->second;
  }
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  struct Key {
    int task_id; DeviceId device; int attempt;
    bool operator<(const Key& o) const {
      if (task_id != o.task_id) return task_id < o.task_id;
      if (device != o.device) return device < o.device;
      return attempt < o.attempt;
    }
  };
  std::vector<Entry> entries_;
  std::set<Key> seen_;
  double master_total_mAh_ = 0.0;
  double worker_total_mAh_ = 0.0;
  std::map<DeviceId, double> per_device_mAh_;
};

}  // namespace edgesim
