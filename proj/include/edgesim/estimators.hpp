#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "edgesim/core.hpp"

namespace edgesim {

// Per-device running statistics feeding the online policies.
struct DeviceStats {
  long success_count = 0;  // M_n
  long fail_count = 0;     // M~_n
  double delay_sum_s = 0.0;            // sum of theta over successes
  double energy_success_sum_mAh = 0.0; // sum of (e_o + e_p) over successes
  double energy_fail_sum_mAh = 0.0;    // sum of wasted energy over failures
  double ewma_energy_mAh = 0.0;        // gamma_n (0.8 new / 0.2 old)
  bool ewma_init = false;
  double ewma_proc_mAh = 0.0;          // processing EWMA of this device
  bool ewma_proc_init = false;
  double ewma_off_mAh = 0.0;           // offload EWMA; meaningful for device 0 only
  bool ewma_off_init = false;
};

struct EnergyModel {
  enum class Kind { Ordinary, New, Newest, PrCompEwma };
  Kind kind = Kind::Newest;
  bool use_helper_fail_energy = true; // New model: include e~_p in the waste sum
  double beta = 0.2;                  // PrCompEwma: weight kept on the old estimate

  void validate() const {
    if (beta <= 0 || beta >= 1) throw ConfigError("beta must be in (0,1)");
  }
};

class StatsTable {
 public:
  explicit StatsTable(int n_devices = 1) : stats_(n_devices) {}

  int size() const { return static_cast<int>(stats_.size()); }
  const DeviceStats& at(int n) const { return stats_.at(n); }
  DeviceStats& at(int n) { return stats_.at(n); }
  bool has_delay_sample(int n) const { return stats_.at(n).success_count > 0; }

  std::vector<DeviceStats> stats_;
};

inline double avg_delay(const StatsTable& stats, int n) {
  const DeviceStats& s = stats.at(n);
  if (s.success_count == 0) throw NoSamples("no delay samples for device " + std::to_string(n));
  return s.delay_sum_s / static_cast<double>(s.success_count);
}

// T_{n,k}: estimated time to finish the remaining tasks when task k (1-based)
// is about to be scheduled on device n and K - k tasks follow it.
inline double estimated_completion_serial(const StatsTable& stats, int n, long k,
                                          long K, double w_n, double p_n) {
  const double t_n = avg_delay(stats, n);
  const double t_0 = avg_delay(stats, kLocalDevice);
  return w_n + t_n + t_0 * p_n +
         ((t_0 + t_n) / 2.0 * (1.0 - p_n) + t_0 * p_n) * static_cast<double>(K - k);
}

inline double mobility_inflated_delay(const StatsTable& stats, int n, double p_n) {
  if (p_n >= 1.0) throw CertainlyAbsent("device " + std::to_string(n) + " has p_out = 1");
  return avg_delay(stats, n) / (1.0 - p_n);
}

// Expected energy to complete one task on device n under the chosen model.
inline double estimate_energy(const StatsTable& stats, int n, const EnergyModel& model,
                              double p_n) {
  const DeviceStats& s = stats.at(n);
  switch (model.kind) {
    case EnergyModel::Kind::Ordinary: {
      const DeviceStats& s0 = stats.at(kLocalDevice);
      if (s.success_count == 0 || s0.success_count == 0)
        throw NoSamples("ordinary model needs successes on device " + std::to_string(n) + " and 0");
      const double eps_n = s.energy_success_sum_mAh / s.success_count;
      const double eps_0 = s0.energy_success_sum_mAh / s0.success_count;
      return eps_n + eps_0 * p_n;
    }
    case EnergyModel::Kind::New: {
      if (s.success_count == 0) {
        // Division by M_n = 0: until a success exists the device is never chosen.
        if (s.fail_count > 0) return std::numeric_limits<double>::infinity();
        throw NoSamples("new model has no samples for device " + std::to_string(n));
      }
      const double sum = s.energy_fail_sum_mAh + s.energy_success_sum_mAh;
      return sum / static_cast<double>(s.success_count);
    }
    case EnergyModel::Kind::Newest: {
      const DeviceStats& s0 = stats.at(kLocalDevice);
      if (!s.ewma_init || !s0.ewma_init)
        throw NoSamples("newest model EWMA not initialized for device " + std::to_string(n));
      return s.ewma_energy_mAh + s0.ewma_energy_mAh * p_n;
    }
    case EnergyModel::Kind::PrCompEwma: {
      if (p_n >= 1.0) throw CertainlyAbsent("device " + std::to_string(n) + " has p_out = 1");
      if (!s.ewma_proc_init)
        throw NoSamples("prcomp model EWMA not initialized for device " + std::to_string(n));
      const double off = s.ewma_off_init ? s.ewma_off_mAh : 0.0;
      return (s.ewma_proc_mAh + off) / (1.0 - p_n);
    }
  }
  throw SimError("unreachable energy model kind");
}

// Folds an attempt outcome into the running statistics. Successes update the
// delay mean and every energy estimator of the executing device; failures only
// grow the waste sums. EWMAs of other devices are left untouched.
inline void update_on_outcome(StatsTable& stats, const TaskOutcome& o,
                              const EnergyModel& model) {
  DeviceStats& s = stats.at(o.device);
  if (o.status == AttemptStatus::Success) {
    const double sample = o.total_energy_mAh();
    s.success_count += 1;
    s.delay_sum_s += o.delay_s();
    s.energy_success_sum_mAh += sample;
    if (!s.ewma_init) {
      s.ewma_energy_mAh = sample;
      s.ewma_init = true;
    } else {
      s.ewma_energy_mAh = 0.8 * sample + 0.2 * s.ewma_energy_mAh;
    }
    // PrComp processing EWMA of the executing device: CPU plus Wi-Fi when offloaded.
    const double proc_sample = o.device == kLocalDevice ? o.master_energy_mAh
                                                        : o.worker_energy_mAh;
    if (!s.ewma_proc_init) {
      s.ewma_proc_mAh = proc_sample;
      s.ewma_proc_init = true;
    } else {
      s.ewma_proc_mAh = (1.0 - model.beta) * proc_sample + model.beta * s.ewma_proc_mAh;
    }
    // PrComp offload EWMA lives on the master and updates only on offloads.
    if (o.device != kLocalDevice) {
      DeviceStats& s0 = stats.at(kLocalDevice);
      const double off_sample = o.master_energy_mAh;
      if (!s0.ewma_off_init) {
        s0.ewma_off_mAh = off_sample;
        s0.ewma_off_init = true;
      } else {
        s0.ewma_off_mAh = (1.0 - model.beta) * off_sample + model.beta * s0.ewma_off_mAh;
      }
    }
  } else {
    s.fail_count += 1;
    double waste = o.master_energy_mAh;
    if (model.use_helper_fail_energy) waste += o.worker_energy_mAh;
    s.energy_fail_sum_mAh += waste;
  }
}

}  // namespace edgesim
