#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <variant>
#include <vector>

#include "edgesim/core.hpp"
#include "edgesim/estimators.hpp"

namespace edgesim {

enum class PolicyType {
  NoCooperation,
  FullOffloading,
  MaccSerial,
  PrCompSerial,
  MaccParallel,
  ParallelBaseline,
  Arc,
};

inline bool is_parallel_policy(PolicyType t) {
  return t == PolicyType::MaccParallel || t == PolicyType::ParallelBaseline ||
         t == PolicyType::Arc;
}

// Only MaCC/PrComp/Arc policies consume estimator state; the others need no probes.
inline bool policy_uses_estimates(PolicyType t) {
  return t == PolicyType::MaccSerial || t == PolicyType::PrCompSerial ||
         t == PolicyType::MaccParallel || t == PolicyType::Arc;
}

struct Policy {
  PolicyType type = PolicyType::MaccSerial;
  EnergyModel energy; // Newest by default; PrComp policies use PrCompEwma
};

enum class Rationale { Probe, MinEnergyFeasible, OnlyFeasible, Fallback };

struct ScheduleDecision {
  int task_id = 0;
  DeviceId device = 0;
  double decided_at_s = 0.0;
  Rationale rationale = Rationale::OnlyFeasible;
};

struct Wait {
  double duration_s = 0.5;
};

using SerialAction = std::variant<ScheduleDecision, Wait>;

// Shared decision context: per-device availability, out probabilities, and
// remaining initial delays at decision time.
struct SchedContext {
  std::vector<bool> available;       // index 0 = local (true once the video ended)
  std::vector<double> p_out;         // P_n; p_out[0] is forced to 0
  std::vector<double> initial_delay_s; // remaining w_n at decision time
  double wait_interval_s = 0.5;
};

namespace detail {

// Lowest-index argmin keeps every policy deterministic under ties.
inline std::optional<int> argmin_device(const std::vector<int>& candidates,
                                        const std::vector<double>& value) {
  std::optional<int> best;
  for (int n : candidates) {
    if (!best || value[n] < value[*best]) best = n;
  }
  return best;
}

}  // namespace detail

// Serial policy state: the round-robin cursor survives between decisions.
class SerialScheduler {
 public:
  explicit SerialScheduler(const Policy& policy) : policy_(policy) {}

  const Policy& policy() const { return policy_; }

  SerialAction next_serial(const StatsTable& stats, const SchedContext& ctx,
                           int task_id, long k, long K, double now_s,
                           double deadline_s) {
    const int n_devices = static_cast<int>(ctx.available.size());
    if (n_devices == 0) throw NoDevices("empty cluster");

    switch (policy_.type) {
      case PolicyType::NoCooperation: {
        if (ctx.initial_delay_s[kLocalDevice] > 0)
          return Wait{ctx.initial_delay_s[kLocalDevice]};
        return ScheduleDecision{task_id, kLocalDevice, now_s, Rationale::OnlyFeasible};
      }
      case PolicyType::FullOffloading: {
        if (n_devices <= 1) throw NoDevices("full offloading needs at least one worker");
        for (int step = 1; step < n_devices; ++step) {
          const int w = (rr_cursor_ - 1 + step) % (n_devices - 1) + 1;
          if (ctx.available[w]) {
            rr_cursor_ = w;
            return ScheduleDecision{task_id, w, now_s, Rationale::OnlyFeasible};
          }
        }
        return Wait{ctx.wait_interval_s};
      }
      case PolicyType::MaccSerial:
      case PolicyType::PrCompSerial:
        return next_estimating(stats, ctx, task_id, k, K, now_s, deadline_s);
      default:
        throw SimError("next_serial called with a parallel policy");
    }
  }

 private:
  SerialAction next_estimating(const StatsTable& stats, const SchedContext& ctx,
                               int task_id, long k, long K, double now_s,
                               double deadline_s) {
    const int n_devices = static_cast<int>(ctx.available.size());
    std::vector<int> usable;   // available with enough samples to estimate
    std::vector<double> completion(n_devices, std::numeric_limits<double>::infinity());
    std::vector<double> energy(n_devices, std::numeric_limits<double>::infinity());
    std::vector<int> feasible;
    const double budget = deadline_s - now_s;

    for (int n = 0; n < n_devices; ++n) {
      if (!ctx.available[n]) continue;
      const double p = n == kLocalDevice ? 0.0 : ctx.p_out[n];
      if (p >= 1.0) continue; // predicted certainly absent
      try {
        double est;
        if (policy_.type == PolicyType::MaccSerial) {
          est = estimated_completion_serial(stats, n, k, K, ctx.initial_delay_s[n], p);
        } else {
          est = mobility_inflated_delay(stats, n, p) * static_cast<double>(K - k + 1) +
                ctx.initial_delay_s[n];
        }
        energy[n] = estimate_energy(stats, n, policy_.energy, p);
        completion[n] = est;
      } catch (const NoSamples&) {
        continue; // bootstrap probing has not reached this device yet
      }
      usable.push_back(n);
      if (completion[n] <= budget) feasible.push_back(n);
    }

    if (usable.empty()) return Wait{ctx.wait_interval_s};
    if (!feasible.empty()) {
      const int best = *detail::argmin_device(feasible, energy);
      const Rationale why = feasible.size() == 1 ? Rationale::OnlyFeasible
                                                 : Rationale::MinEnergyFeasible;
      return ScheduleDecision{task_id, best, now_s, why};
    }
    // No device can meet the deadline: best effort on estimated completion.
    const int best = *detail::argmin_device(usable, completion);
    return ScheduleDecision{task_id, best, now_s, Rationale::Fallback};
  }

  Policy policy_;
  int rr_cursor_ = 0; // last worker that received a task; 0 = none yet
};

struct Allocation {
  bool feasible = false;
  std::vector<long> tasks_per_device;
};

// Offline serial optimum: all K tasks to the cheapest device whose delay
// fits the deadline; infeasible when no single device does.
inline Allocation solve_serial_offline(const std::vector<double>& energy_per_task,
                                       const std::vector<double>& delay_per_task,
                                       long K, double deadline_s) {
  if (K < 1) throw ConfigError("K must be >= 1");
  if (energy_per_task.size() != delay_per_task.size())
    throw ConfigError("energy and delay vectors differ in length");
  const int n = static_cast<int>(energy_per_task.size());
  Allocation a;
  a.tasks_per_device.assign(n, 0);
  std::optional<int> best;
  for (int d = 0; d < n; ++d) {
    if (delay_per_task[d] * static_cast<double>(K) > deadline_s) continue;
    if (!best || energy_per_task[d] < energy_per_task[*best]) best = d;
  }
  if (!best) return a;
  a.feasible = true;
  a.tasks_per_device[*best] = K;
  return a;
}

// Offline parallel optimum: fill devices in ascending energy order, each up
// to its per-deadline capacity floor(deadline / delay).
inline Allocation solve_parallel_offline(const std::vector<double>& energy_per_task,
                                         const std::vector<double>& delay_per_task,
                                         long K, double deadline_s) {
  if (K < 1) throw ConfigError("K must be >= 1");
  if (energy_per_task.size() != delay_per_task.size())
    throw ConfigError("energy and delay vectors differ in length");
  const int n = static_cast<int>(energy_per_task.size());
  Allocation a;
  a.tasks_per_device.assign(n, 0);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
    return energy_per_task[x] < energy_per_task[y];
  });
  long remaining = K;
  for (int d : order) {
    if (remaining <= 0) break;
    if (delay_per_task[d] <= 0) throw ConfigError("delay must be positive");
    const long cap = static_cast<long>(std::floor(deadline_s / delay_per_task[d]));
    const long take = std::min(remaining, std::max<long>(cap, 0));
    a.tasks_per_device[d] = take;
    remaining -= take;
  }
  a.feasible = remaining <= 0;
  if (!a.feasible) a.tasks_per_device.assign(n, 0);
  return a;
}

// One dispatch round for the parallel policies. `idle[n]` is true when device
// n has no in-flight task from this master.
inline std::vector<ScheduleDecision> dispatch_parallel(
    const Policy& policy, const StatsTable& stats, const SchedContext& ctx,
    const std::vector<int>& remaining_tasks, const std::vector<bool>& idle,
    double now_s, double deadline_s) {
  std::vector<ScheduleDecision> out;
  if (remaining_tasks.empty()) return out;
  const int n_devices = static_cast<int>(ctx.available.size());
  std::size_t next_task = 0;
  auto take_task = [&]() -> std::optional<int> {
    if (next_task >= remaining_tasks.size()) return std::nullopt;
    return remaining_tasks[next_task++];
  };

  switch (policy.type) {
    case PolicyType::ParallelBaseline: {
      for (int n = 0; n < n_devices; ++n) {
        if (!ctx.available[n] || !idle[n]) continue;
        if (auto t = take_task()) {
          out.push_back({*t, n, now_s, Rationale::OnlyFeasible});
        }
      }
      return out;
    }
    case PolicyType::Arc: {
      const DeviceStats& s0 = stats.at(kLocalDevice);
      const bool offload_benefits =
          s0.ewma_off_init && s0.ewma_proc_init && s0.ewma_off_mAh < s0.ewma_proc_mAh;
      bool dispatched = false;
      if (offload_benefits) {
        for (int n = 1; n < n_devices; ++n) {
          if (!ctx.available[n] || !idle[n]) continue;
          if (auto t = take_task()) {
            out.push_back({*t, n, now_s, Rationale::MinEnergyFeasible});
            dispatched = true;
          }
        }
      }
      if (!dispatched && ctx.available[kLocalDevice] && idle[kLocalDevice]) {
        if (auto t = take_task()) out.push_back({*t, kLocalDevice, now_s, Rationale::Fallback});
      }
      return out;
    }
    case PolicyType::MaccParallel: {
      struct Candidate { int device; double energy; double delay; };
      std::vector<Candidate> cands;
      for (int n = 0; n < n_devices; ++n) {
        if (!ctx.available[n]) continue;
        const double p = n == kLocalDevice ? 0.0 : ctx.p_out[n];
        if (p >= 1.0) continue;
        try {
          cands.push_back({n, estimate_energy(stats, n, policy.energy, p),
                           mobility_inflated_delay(stats, n, p)});
        } catch (const NoSamples&) {
          continue;
        }
      }
      std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
        if (a.energy != b.energy) return a.energy < b.energy;
        return a.device < b.device;
      });
      const double budget = deadline_s - now_s;
      long capacity = 0;
      const long remaining = static_cast<long>(remaining_tasks.size());
      for (const Candidate& c : cands) {
        if (idle[c.device]) {
          if (auto t = take_task())
            out.push_back({*t, c.device, now_s, Rationale::MinEnergyFeasible});
        }
        capacity += std::max<long>(0, static_cast<long>(std::floor(budget / c.delay)));
        if (capacity >= remaining) break;
      }
      return out;
    }
    default:
      throw SimError("dispatch_parallel called with a serial policy");
  }
}

}  // namespace edgesim
