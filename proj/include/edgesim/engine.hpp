#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "edgesim/core.hpp"
#include "edgesim/estimators.hpp"
#include "edgesim/mobility.hpp"
#include "edgesim/schedulers.hpp"

namespace edgesim {

// Processor-sharing contention: m concurrent tasks each run at 1/m speed.
inline double contention_factor(int in_flight) {
  return static_cast<double>(std::max(1, in_flight));
}

struct MobilitySpec {
  enum class Kind { Markov, Trace };
  Kind kind = Kind::Markov;
  MarkovMobility markov;
  std::string trace_path;
  int trace_device = 0;
  double trace_slot_s = 0.0; // 0 = take the trace's own slot length
};

struct MasterSpec {
  double start_s = 0.0;
};

enum class PModel { Stationary, Leave };

struct ExperimentConfig {
  // tasks
  long K = 1;
  std::int64_t payload_bytes = 1;
  std::int64_t result_bytes = 0;
  double work_units = 1.0;
  double deadline_s = 0.0;

  std::vector<DeviceProfile> devices;       // [0] = master, [1..N] = workers
  std::vector<MobilitySpec> mobility;       // one per worker
  std::vector<MobilityPredictor> predictor; // one per worker
  Policy policy;
  PModel p_model = PModel::Stationary;

  long trials = 1;
  std::uint64_t base_seed = 0;
  double probe_interval_s = 10.0;
  std::vector<MasterSpec> masters{{0.0}};

  std::string out_dir = "out";
  bool emit_event_log = false;

  double wait_interval_s = 0.5;   // full-offloading sleep; reused as the generic wake interval
  double notify_latency_s = 0.0;  // failure notice travel time
  double retrieve_timeout_s = 10.0;
  double probe_scale = 0.005;     // probe work as a fraction of a real task
  double max_sim_s = 50000.0;     // hard stop for policies that can never finish

  int n_workers() const { return static_cast<int>(devices.size()) - 1; }

  void validate() const {
    if (K < 1) throw ConfigError("tasks.K must be >= 1");
    if (payload_bytes <= 0) throw ConfigError("tasks.payload_bytes must be > 0");
    if (result_bytes < 0) throw ConfigError("tasks.result_bytes must be >= 0");
    if (work_units <= 0) throw ConfigError("tasks.work_units must be > 0");
    if (deadline_s <= 0) throw ConfigError("deadline_s must be > 0");
    if (devices.empty()) throw ConfigError("devices must include the master");
    for (const auto& d : devices) d.validate();
    for (std::size_t i = 0; i < devices.size(); ++i)
      if (devices[i].id != static_cast<int>(i))
        throw ConfigError("device ids must be 0..N in order");
    if (mobility.size() != devices.size() - 1)
      throw ConfigError("mobility must have one entry per worker");
    for (const auto& m : mobility)
      if (m.kind == MobilitySpec::Kind::Markov) m.markov.validate();
    if (!predictor.empty() && predictor.size() != devices.size() - 1)
      throw ConfigError("predictor must have one entry per worker");
    for (const auto& p : predictor) p.validate();
    policy.energy.validate();
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (probe_interval_s <= 0) throw ConfigError("probe_interval_s must be > 0");
    if (masters.empty()) throw ConfigError("at least one master required");
    for (const auto& m : masters)
      if (m.start_s < 0) throw ConfigError("master start_s must be >= 0");
    if (probe_scale <= 0 || probe_scale > 0.5) throw ConfigError("probe_scale out of range");
    if (policy.type == PolicyType::FullOffloading && devices.size() < 2)
      throw ConfigError("full offloading needs at least one worker");
  }
};

struct TrialResult {
  std::string scheduler;
  std::uint64_t seed = 0;
  int n_workers = 0;
  long completed = 0;
  long failed_attempts = 0;
  double completion_time_s = 0.0;
  double total_energy_mAh = 0.0;
  double master_energy_mAh = 0.0;
  std::vector<double> per_device_energy_mAh;
  std::vector<long> per_device_success;
  bool deadline_met = false;
};

inline std::string policy_name(PolicyType t) {
  switch (t) {
    case PolicyType::NoCooperation: return "no_cooperation";
    case PolicyType::FullOffloading: return "full_offloading";
    case PolicyType::MaccSerial: return "macc_serial";
    case PolicyType::PrCompSerial: return "prcomp_serial";
    case PolicyType::MaccParallel: return "macc_parallel";
    case PolicyType::ParallelBaseline: return "parallel_baseline";
    case PolicyType::Arc: return "arc";
  }
  return "?";
}

// Deterministic single-trial simulation over an integer-microsecond event queue.
class TrialEngine {
 public:
  TrialEngine(const ExperimentConfig& cfg, std::uint64_t seed)
      : cfg_(cfg), seed_(seed), capture_log_(cfg.emit_event_log) {
    cfg_.validate();
    init();
  }

  TrialResult run() {
    while (!queue_.empty()) {
      Event ev = queue_.top();
      queue_.pop();
      if (ev.at_us > to_micros(cfg_.max_sim_s)) break;
      now_ = ev.at_us;
      handle(ev);
      if (all_done()) break;
    }
    return build_result();
  }

  const std::vector<std::string>& event_log() const { return log_; }
  const EnergyLedger& ledger() const { return ledger_; }

 private:
  enum class EventKind { SlotTick = 0, StepComplete = 1, ProbeTick = 2,
                         DispatchWake = 3, RetrieveTimeout = 4 };

  struct Event {
    Micros at_us;
    EventKind kind;
    int device;
    int task;
    int master;
    std::int64_t uid;   // attempt uid for StepComplete / RetrieveTimeout
    std::uint64_t gen;  // stale-event filter
    bool operator>(const Event& o) const {
      if (at_us != o.at_us) return at_us > o.at_us;
      if (kind != o.kind) return kind > o.kind;
      if (device != o.device) return device > o.device;
      if (task != o.task) return task > o.task;
      return uid > o.uid;
    }
  };

  struct Attempt {
    std::int64_t uid = 0;
    int master = 0;
    int task_id = 0;      // task index within the master's batch; negative for probes
    int attempt_no = 1;
    DeviceId device = 0;
    bool probe = false;
    Micros start_us = 0;
    int step = 1;
    double work_s = 0.0;       // step-2 service demand (jitter applied)
    double work_done_s = 0.0;  // progressed under processor sharing
    double payload_s = 0.0;
    double result_s = 0.0;
    double master_wifi_s = 0.0;
    double worker_wifi_s = 0.0;
    double busy_at_step2_start_s = 0.0; // worker busy-time counter at step-2 entry
    std::uint64_t gen = 0;
    bool resolved = false;
  };

  struct WorkerRt {
    std::unique_ptr<MobilityProcess> mobility;
    RandomStream service_rng{0};
    RandomStream predictor_rng{0};
    std::map<int, Prediction> slot_predictions;
    std::vector<std::int64_t> active; // attempt uids currently in step 2
    double busy_s = 0.0;              // cumulative time with >= 1 active job
    Micros last_ps_us = 0;
  };

  struct MasterRt {
    int index = 0;
    Micros start_us = 0;
    Micros deadline_abs_us = 0;
    DeviceProfile profile; // this master's own device (clone of devices[0])
    RandomStream service_rng{0};
    std::unique_ptr<SerialScheduler> serial;
    StatsTable stats{1};
    std::vector<char> task_done;
    std::vector<int> attempts_of_task;
    std::set<int> in_flight;              // real task ids currently dispatched
    std::vector<char> device_has_real;    // per device; this master's real in-flight
    std::vector<char> probe_in_flight;    // per device
    std::vector<Micros> last_sample_us;   // per device; most recent outcome
    std::vector<long> success_counts;     // per device, real tasks only
    long completed = 0;
    long failed_attempts = 0;
    bool done = false;
    Micros done_at_us = 0;
    long probe_seq = 0;
  };

  void init() {
    const int n_dev = static_cast<int>(cfg_.devices.size());
    workers_.resize(cfg_.n_workers());
    for (int w = 0; w < cfg_.n_workers(); ++w) {
      const MobilitySpec& ms = cfg_.mobility[w];
      const int device = w + 1;
      if (ms.kind == MobilitySpec::Kind::Markov) {
        workers_[w].mobility = std::make_unique<MobilityProcess>(ms.markov, seed_, device);
      } else {
        MobilityTrace trace = load_trace(ms.trace_path);
        workers_[w].mobility =
            std::make_unique<MobilityProcess>(trace, ms.trace_device, ms.trace_slot_s);
      }
      workers_[w].service_rng =
          RandomStream(RandomStream::mix(seed_, 0x5e00 + device));
      workers_[w].predictor_rng =
          RandomStream(RandomStream::mix(seed_, 0x9d00 + device));
    }

    masters_.resize(cfg_.masters.size());
    for (std::size_t m = 0; m < cfg_.masters.size(); ++m) {
      MasterRt& mr = masters_[m];
      mr.index = static_cast<int>(m);
      mr.start_us = to_micros(cfg_.masters[m].start_s);
      mr.deadline_abs_us = mr.start_us + to_micros(cfg_.deadline_s);
      mr.profile = cfg_.devices[0];
      mr.service_rng = RandomStream(RandomStream::mix(seed_, 0x10c0 + m));
      mr.serial = std::make_unique<SerialScheduler>(cfg_.policy);
      mr.stats = StatsTable(n_dev);
      mr.task_done.assign(cfg_.K, 0);
      mr.attempts_of_task.assign(cfg_.K, 0);
      mr.device_has_real.assign(n_dev, 0);
      mr.probe_in_flight.assign(n_dev, 0);
      mr.last_sample_us.assign(n_dev, std::numeric_limits<Micros>::min() / 2);
      mr.success_counts.assign(n_dev, 0);
      if (policy_uses_estimates(cfg_.policy.type))
        push(Event{mr.start_us, EventKind::ProbeTick, 0, 0, mr.index, 0, 0});
      push(Event{mr.start_us, EventKind::DispatchWake, 0, 0, mr.index, 0, 0});
    }
  }

  // ---- utilities -----------------------------------------------------------

  void push(const Event& e) { queue_.push(e); }

  bool worker_in_range(int device, Micros t) {
    return workers_[device - 1].mobility->in_range_at(t);
  }

  bool overhead_active() const {
    return cfg_.policy.type != PolicyType::NoCooperation && cfg_.n_workers() > 0;
  }

  double transfer_s(std::int64_t bytes, const DeviceProfile& worker) const {
    return static_cast<double>(bytes) / worker.link_bandwidth_Bps;
  }

  double jittered(double mean, double jitter, RandomStream& rng) {
    if (jitter <= 0) return mean;
    return mean * (1.0 + jitter * (2.0 * rng.next_uniform01() - 1.0));
  }

  void logf(Micros at, const std::string& kind, int task, int device,
            const std::string& detail) {
    if (!capture_log_) return;
    log_.push_back(std::to_string(at) + "," + kind + "," + std::to_string(task) +
                   "," + std::to_string(device) + "," + detail);
  }

  bool all_done() const {
    for (const auto& m : masters_)
      if (!m.done) return false;
    return true;
  }

  // Out probability P_n fed to the estimators for a worker, per its predictor.
  double worker_p_out(MasterRt& m, int device, Micros t) {
    const int w = device - 1;
    MobilityPredictor pred;
    if (w < static_cast<int>(cfg_.predictor.size())) pred = cfg_.predictor[w];
    switch (pred.kind) {
      case MobilityPredictor::Kind::Statistical: {
        if (pred.p_out > 0) return pred.p_out;
        if (cfg_.mobility[w].kind == MobilitySpec::Kind::Markov) {
          const MarkovMobility& mk = cfg_.mobility[w].markov;
          if (mk.p_leave == 0 && mk.p_return == 0) return 0.0;
          return cfg_.p_model == PModel::Leave ? mk.p_leave : stationary_out_of_range(mk);
        }
        return pred.p_out;
      }
      case MobilityPredictor::Kind::Predicted: {
        WorkerRt& wr = workers_[w];
        const int target = wr.mobility->slot_of(t) + 1;
        auto it = wr.slot_predictions.find(target);
        if (it == wr.slot_predictions.end()) {
          const bool truth = wr.mobility->state_of_slot(target);
          Prediction p = predict_out_probability(pred, {}, truth,
                                                 wr.predictor_rng.next_uniform01());
          it = wr.slot_predictions.emplace(target, p).first;
        }
        return it->second.p_out;
      }
      case MobilityPredictor::Kind::MajorityVote: {
        WorkerRt& wr = workers_[w];
        const int current = wr.mobility->slot_of(t);
        if (current + 1 < pred.window_slots) return 0.0; // not enough history yet
        auto history = wr.mobility->history_through(current);
        Prediction p = predict_out_probability(pred, history, true, 0.0);
        return p.p_out;
      }
    }
    return 0.0;
  }

  SchedContext make_context(MasterRt& m, Micros t) {
    const int n_dev = static_cast<int>(cfg_.devices.size());
    SchedContext ctx;
    ctx.wait_interval_s = cfg_.wait_interval_s;
    ctx.available.assign(n_dev, false);
    ctx.p_out.assign(n_dev, 0.0);
    ctx.initial_delay_s.assign(n_dev, 0.0);
    const Micros w0_abs = m.start_us + to_micros(m.profile.initial_delay_s);
    ctx.available[0] = t >= w0_abs;
    ctx.initial_delay_s[0] = std::max<double>(0.0, to_seconds(w0_abs - t));
    for (int d = 1; d < n_dev; ++d) {
      const Micros wd_abs = to_micros(cfg_.devices[d].initial_delay_s);
      ctx.available[d] = t >= wd_abs && worker_in_range(d, t);
      ctx.p_out[d] = worker_p_out(m, d, t);
      ctx.initial_delay_s[d] = std::max<double>(0.0, to_seconds(wd_abs - t));
    }
    return ctx;
  }

  // ---- attempt lifecycle ---------------------------------------------------

  Attempt& start_attempt(MasterRt& m, int task_id, DeviceId device, bool probe) {
    const std::int64_t uid = ++uid_seq_;
    Attempt a;
    a.uid = uid;
    a.master = m.index;
    a.task_id = task_id;
    a.device = device;
    a.probe = probe;
    a.start_us = now_;
    const double scale = probe ? cfg_.probe_scale : 1.0;
    const double work_units = cfg_.work_units * scale;
    if (device == kLocalDevice) {
      const double overhead = overhead_active() ? m.profile.group_owner_overhead : 1.0;
      a.work_s = jittered(m.profile.mean_service_s * work_units,
                          m.profile.service_jitter, m.service_rng) * overhead;
      a.attempt_no = probe ? 1 : ++m.attempts_of_task[task_id];
      a.step = 2;
    } else {
      const DeviceProfile& wp = cfg_.devices[device];
      a.payload_s = transfer_s(std::max<std::int64_t>(
          1, static_cast<std::int64_t>(cfg_.payload_bytes * scale)), wp);
      a.result_s = transfer_s(static_cast<std::int64_t>(cfg_.result_bytes * scale), wp);
      a.work_s = jittered(wp.mean_service_s * work_units, wp.service_jitter,
                          workers_[device - 1].service_rng);
      a.attempt_no = probe ? 1 : ++m.attempts_of_task[task_id];
    }
    if (probe) {
      a.attempt_no = 1;
      a.task_id = -static_cast<int>(++m.probe_seq) * 100 - device; // unique probe key
    }
    auto [it, ok] = attempts_.emplace(uid, a);
    (void)ok;
    Attempt& ref = it->second;

    if (probe) {
      m.probe_in_flight[device] = 1;
    } else {
      m.in_flight.insert(task_id);
      m.device_has_real[device] = 1;
    }
    logf(now_, probe ? "probe" : "dispatch", ref.task_id, device,
         "m" + std::to_string(m.index) + " attempt=" + std::to_string(ref.attempt_no));

    if (device == kLocalDevice) {
      push(Event{now_ + to_micros(ref.work_s), EventKind::StepComplete, device,
                 ref.task_id, m.index, uid, ref.gen});
    } else {
      // Step 1: availability check at the very start (the size/ack handshake).
      if (!worker_in_range(device, now_)) {
        resolve(ref, AttemptStatus::FailedAtStep1, now_);
        return ref;
      }
      push(Event{now_ + to_micros(ref.payload_s), EventKind::StepComplete, device,
                 ref.task_id, m.index, uid, ref.gen});
      if (!probe && is_parallel_policy(cfg_.policy.type)) {
        const Micros timeout_at =
            std::max(now_, m.deadline_abs_us) + to_micros(cfg_.retrieve_timeout_s);
        push(Event{timeout_at, EventKind::RetrieveTimeout, device, ref.task_id,
                   m.index, uid, ref.gen});
      }
    }
    return ref;
  }

  // Advance processor-sharing progress of a worker to time t.
  void ps_update(WorkerRt& w, Micros t) {
    const int mjobs = static_cast<int>(w.active.size());
    if (mjobs > 0 && t > w.last_ps_us) {
      const double dt = to_seconds(t - w.last_ps_us);
      for (std::int64_t uid : w.active)
        attempts_.at(uid).work_done_s += dt / contention_factor(mjobs);
      w.busy_s += dt;
    }
    w.last_ps_us = t;
  }

  // Reschedule step-2 completions after a membership change.
  void ps_reschedule(WorkerRt& w, int device, Micros t) {
    const int mjobs = static_cast<int>(w.active.size());
    for (std::int64_t uid : w.active) {
      Attempt& a = attempts_.at(uid);
      const double remaining = std::max(0.0, a.work_s - a.work_done_s);
      a.gen += 1;
      push(Event{t + to_micros(remaining * contention_factor(mjobs)),
                 EventKind::StepComplete, device, a.task_id, a.master, a.uid, a.gen});
    }
  }

  void enter_step2(Attempt& a) {
    WorkerRt& w = workers_[a.device - 1];
    ps_update(w, now_);
    a.step = 2;
    a.busy_at_step2_start_s = w.busy_s;
    w.active.push_back(a.uid);
    ps_reschedule(w, a.device, now_);
  }

  void leave_step2(Attempt& a) {
    WorkerRt& w = workers_[a.device - 1];
    ps_update(w, now_);
    w.active.erase(std::remove(w.active.begin(), w.active.end(), a.uid), w.active.end());
    ps_reschedule(w, a.device, now_);
  }

  void on_step_complete(Attempt& a) {
    if (a.device == kLocalDevice) {
      resolve(a, AttemptStatus::Success, now_);
      return;
    }
    switch (a.step) {
      case 1: { // payload received
        a.master_wifi_s += a.payload_s;
        a.worker_wifi_s += a.payload_s;
        if (!worker_in_range(a.device, now_)) {
          resolve(a, AttemptStatus::FailedAtStep2,
                  now_ + to_micros(cfg_.notify_latency_s));
          return;
        }
        enter_step2(a);
        break;
      }
      case 2: { // processing finished
        leave_step2(a);
        a.step = 3;
        if (!worker_in_range(a.device, now_)) {
          resolve(a, AttemptStatus::FailedAtStep3,
                  now_ + to_micros(cfg_.notify_latency_s));
          return;
        }
        a.master_wifi_s += a.result_s;
        a.worker_wifi_s += a.result_s;
        a.gen += 1;
        push(Event{now_ + to_micros(a.result_s), EventKind::StepComplete, a.device,
                   a.task_id, a.master, a.uid, a.gen});
        a.step = 4; // result in transit
        break;
      }
      case 4:
        resolve(a, AttemptStatus::Success, now_);
        break;
      default:
        throw SimError("unexpected step in on_step_complete");
    }
  }

  // Synthesized CPU counters for the executing device over the attempt.
  double attempt_cpu_energy(const Attempt& a) const {
    const DeviceProfile& prof =
        a.device == kLocalDevice ? masters_[a.master].profile : cfg_.devices[a.device];
    LedgerSnapshot before, after;
    double app_s, all_s;
    if (a.device == kLocalDevice) {
      app_s = all_s = a.work_s; // sole consumer
    } else {
      app_s = a.work_done_s;
      all_s = workers_[a.device - 1].busy_s - a.busy_at_step2_start_s;
      if (all_s < app_s) all_s = app_s; // guard fp rounding
    }
    if (app_s <= 0) return 0.0;
    after.cpu_time_app_s = app_s;
    after.cpu_time_all_s = all_s;
    const auto& e = prof.cpu_current_mA.front();
    after.cluster_speed_time_s[{e.cluster, e.speed}] = all_s;
    return interval_cpu_energy(before, after, prof);
  }

  void resolve(Attempt& a, AttemptStatus status, Micros master_informed_us) {
    if (a.resolved) return;
    a.resolved = true;
    a.gen += 1; // kill any event still in the queue
    MasterRt& m = masters_[a.master];

    TaskOutcome o;
    o.task_id = a.task_id + a.master * 1'000'000; // ledger-unique across masters
    o.device = a.device;
    o.attempt = a.attempt_no;
    o.status = status;
    o.probe = a.probe;
    o.start_s = to_seconds(a.start_us);
    o.end_s = to_seconds(master_informed_us);
    if (a.device == kLocalDevice) {
      o.master_energy_mAh = attempt_cpu_energy(a);
      o.worker_energy_mAh = 0.0;
    } else {
      const DeviceProfile& wp = cfg_.devices[a.device];
      o.master_energy_mAh = wifi_energy(a.master_wifi_s, m.profile);
      o.worker_energy_mAh = attempt_cpu_energy(a) + wifi_energy(a.worker_wifi_s, wp);
    }
    ledger_.record_attempt(o);

    // Probe samples are normalized to one full task before feeding the
    // estimators; the ledger keeps the raw cost.
    TaskOutcome sample = o;
    if (a.probe) {
      const double inv = 1.0 / cfg_.probe_scale;
      sample.end_s = sample.start_s + sample.delay_s() * inv;
      sample.master_energy_mAh *= inv;
      sample.worker_energy_mAh *= inv;
    }
    update_on_outcome(m.stats, sample, cfg_.policy.energy);
    m.last_sample_us[a.device] = master_informed_us;

    const char* status_str =
        status == AttemptStatus::Success ? "success"
        : status == AttemptStatus::FailedAtStep1 ? "fail1"
        : status == AttemptStatus::FailedAtStep2 ? "fail2" : "fail3";
    logf(master_informed_us, "resolve", a.task_id, a.device,
         "m" + std::to_string(m.index) + " " + status_str + (a.probe ? " probe" : ""));

    if (a.probe) {
      m.probe_in_flight[a.device] = 0;
    } else {
      m.in_flight.erase(a.task_id);
      m.device_has_real[a.device] = 0;
      if (status == AttemptStatus::Success) {
        m.task_done[a.task_id] = 1;
        m.completed += 1;
        m.success_counts[a.device] += 1;
        if (m.completed == cfg_.K) {
          m.done = true;
          m.done_at_us = master_informed_us;
        }
      } else {
        m.failed_attempts += 1;
      }
    }
    if (!m.done) try_dispatch(m);
  }

  // ---- scheduling ----------------------------------------------------------

  bool bootstrap_ready(MasterRt& m) {
    if (!policy_uses_estimates(cfg_.policy.type)) return true;
    if (!m.stats.has_delay_sample(kLocalDevice)) return false;
    for (int d = 1; d < static_cast<int>(cfg_.devices.size()); ++d) {
      if (m.stats.has_delay_sample(d)) continue;
      if (now_ < to_micros(cfg_.devices[d].initial_delay_s) ||
          !worker_in_range(d, now_))
        continue; // cannot probe an absent worker
      return false; // probe pending or about to be sent
    }
    return true;
  }

  void try_dispatch(MasterRt& m) {
    if (m.done || now_ < m.start_us) return;
    if (is_parallel_policy(cfg_.policy.type)) {
      dispatch_parallel_round(m);
    } else {
      dispatch_serial(m);
    }
  }

  void dispatch_serial(MasterRt& m) {
    if (!m.in_flight.empty()) return; // serial: one task at a time
    if (!bootstrap_ready(m)) return;  // probes in flight resolve soon
    int next_task = -1;
    for (long t = 0; t < cfg_.K; ++t) {
      if (!m.task_done[t]) { next_task = static_cast<int>(t); break; }
    }
    if (next_task < 0) return;
    SchedContext ctx = make_context(m, now_);
    const double now_s = to_seconds(now_);
    const double deadline_s = to_seconds(m.deadline_abs_us);
    SerialAction act = m.serial->next_serial(m.stats, ctx, next_task,
                                             m.completed + 1, cfg_.K, now_s, deadline_s);
    if (std::holds_alternative<Wait>(act)) {
      const double d = std::max(1e-6, std::get<Wait>(act).duration_s);
      push(Event{now_ + to_micros(d), EventKind::DispatchWake, 0, 0, m.index, 0, 0});
      return;
    }
    const ScheduleDecision dec = std::get<ScheduleDecision>(act);
    start_attempt(m, dec.task_id, dec.device, false);
  }

  void dispatch_parallel_round(MasterRt& m) {
    if (!bootstrap_ready(m)) return;
    std::vector<int> remaining;
    for (long t = 0; t < cfg_.K; ++t)
      if (!m.task_done[t] && !m.in_flight.count(static_cast<int>(t)))
        remaining.push_back(static_cast<int>(t));
    if (remaining.empty()) return;
    SchedContext ctx = make_context(m, now_);
    std::vector<bool> idle(cfg_.devices.size());
    for (std::size_t d = 0; d < idle.size(); ++d) idle[d] = !m.device_has_real[d];
    auto decisions = dispatch_parallel(cfg_.policy, m.stats, ctx, remaining, idle,
                                       to_seconds(now_), to_seconds(m.deadline_abs_us));
    for (const auto& dec : decisions) start_attempt(m, dec.task_id, dec.device, false);
  }

  void on_probe_tick(MasterRt& m) {
    if (m.done) return;
    for (int d = 0; d < static_cast<int>(cfg_.devices.size()); ++d) {
      if (m.device_has_real[d] || m.probe_in_flight[d]) continue;
      const bool never_sampled = !m.stats.has_delay_sample(d);
      const bool stale =
          now_ - m.last_sample_us[d] >= to_micros(cfg_.probe_interval_s);
      if (!never_sampled && !stale) continue;
      if (d != kLocalDevice &&
          (now_ < to_micros(cfg_.devices[d].initial_delay_s) ||
           !worker_in_range(d, now_)))
        continue; // defer until reachable
      start_attempt(m, 0, d, true);
    }
    push(Event{now_ + to_micros(cfg_.probe_interval_s), EventKind::ProbeTick,
               0, 0, m.index, 0, 0});
  }

  void handle(const Event& ev) {
    switch (ev.kind) {
      case EventKind::StepComplete: {
        auto it = attempts_.find(ev.uid);
        if (it == attempts_.end()) return;
        Attempt& a = it->second;
        if (a.resolved || a.gen != ev.gen) return; // stale
        on_step_complete(a);
        break;
      }
      case EventKind::ProbeTick:
        on_probe_tick(masters_[ev.master]);
        // A fresh probe may have unblocked the real dispatch path.
        try_dispatch(masters_[ev.master]);
        break;
      case EventKind::DispatchWake: {
        MasterRt& m = masters_[ev.master];
        try_dispatch(m);
        if (is_parallel_policy(cfg_.policy.type) && !m.done)
          push(Event{now_ + to_micros(cfg_.wait_interval_s), EventKind::DispatchWake,
                     0, 0, m.index, 0, 0});
        break;
      }
      case EventKind::RetrieveTimeout: {
        auto it = attempts_.find(ev.uid);
        if (it == attempts_.end()) return;
        Attempt& a = it->second;
        if (a.resolved || a.gen != ev.gen) return;
        logf(now_, "timeout", a.task_id, a.device, "m" + std::to_string(a.master));
        if (a.step == 2) leave_step2(a);
        resolve(a, AttemptStatus::FailedAtStep3, now_);
        break;
      }
      case EventKind::SlotTick:
        break; // mobility is evaluated lazily
    }
  }

  TrialResult build_result() {
    TrialResult r;
    r.scheduler = policy_name(cfg_.policy.type);
    r.seed = seed_;
    r.n_workers = cfg_.n_workers();
    r.per_device_energy_mAh.resize(cfg_.devices.size(), 0.0);
    r.per_device_success.resize(cfg_.devices.size(), 0);
    Micros last_done = 0;
    bool met = true;
    for (const auto& m : masters_) {
      r.completed += m.completed;
      r.failed_attempts += m.failed_attempts;
      last_done = std::max(last_done, m.done ? m.done_at_us : to_micros(cfg_.max_sim_s));
      met = met && m.done && m.done_at_us <= m.deadline_abs_us;
      for (std::size_t d = 0; d < m.success_counts.size(); ++d)
        r.per_device_success[d] += m.success_counts[d];
    }
    r.completion_time_s = to_seconds(last_done);
    r.deadline_met = met;
    for (std::size_t d = 0; d < cfg_.devices.size(); ++d)
      r.per_device_energy_mAh[d] = ledger_.device_mAh(static_cast<int>(d));
    r.total_energy_mAh = ledger_.total_mAh();
    r.master_energy_mAh = ledger_.device_mAh(kLocalDevice);
    return r;
  }

  ExperimentConfig cfg_;
  std::uint64_t seed_;
  bool capture_log_;
  Micros now_ = 0;
  std::int64_t uid_seq_ = 0;
  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> queue_;
  std::map<std::int64_t, Attempt> attempts_;
  std::vector<WorkerRt> workers_;
  std::vector<MasterRt> masters_;
  EnergyLedger ledger_;
  std::vector<std::string> log_;
};

inline TrialResult run_trial(const ExperimentConfig& cfg, std::uint64_t seed) {
  TrialEngine engine(cfg, seed);
  return engine.run();
}

}  // namespace edgesim
