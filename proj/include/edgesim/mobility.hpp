#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "edgesim/core.hpp"

namespace edgesim {

// Two-state slotted Markov availability process. State is constant within
// a slot; all devices start in range.
struct MarkovMobility {
  double p_leave = 0.0;   // P_l: True -> False
  double p_return = 1.0;  // P_c: False -> True
  double slot_s = 10.0;
  bool initial_state = true;

  void validate() const {
    if (p_leave < 0 || p_leave > 1) throw ConfigError("p_leave must be in [0,1]");
    if (p_return < 0 || p_return > 1) throw ConfigError("p_return must be in [0,1]");
    if (slot_s <= 0) throw ConfigError("slot_s must be > 0");
  }
};

inline bool step_markov(const MarkovMobility& m, bool state, double u) {
  if (state) return u < m.p_leave ? false : true;
  return u < m.p_return ? true : false;
}

inline double stationary_in_range(const MarkovMobility& m) {
  if (m.p_leave == 0 && m.p_return == 0)
    throw DegenerateChain("p_leave and p_return are both zero");
  if (m.p_leave == 0) return 1.0;
  return m.p_return / (m.p_leave + m.p_return);
}

inline double stationary_out_of_range(const MarkovMobility& m) {
  return 1.0 - stationary_in_range(m);
}

struct MobilityTrace {
  double slot_s = 10.0;
  std::map<int, std::vector<bool>> states; // device index -> per-slot in-range flags
};

// CSV with header `slot,device,in_range`. Slot indices must be contiguous
// per device starting at 0; duplicates are rejected.
inline MobilityTrace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open trace file: " + path);
  MobilityTrace trace;
  std::string line;
  int lineno = 0;
  std::map<int, std::map<int, bool>> rows;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != "slot,device,in_range")
        throw ParseError("line 1: expected header 'slot,device,in_range'");
      header_seen = true;
      continue;
    }
    std::istringstream ss(line);
    std::string a, b, c;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c))
      throw ParseError("line " + std::to_string(lineno) + ": expected 3 fields");
    int slot, device, flag;
    try {
      slot = std::stoi(a);
      device = std::stoi(b);
      flag = std::stoi(c);
    } catch (const std::exception&) {
      throw ParseError("line " + std::to_string(lineno) + ": non-numeric field");
    }
    if (slot < 0 || device < 0 || (flag != 0 && flag != 1))
      throw ParseError("line " + std::to_string(lineno) + ": out-of-range value");
    if (!rows[device].emplace(slot, flag == 1).second)
      throw GapError("duplicate (slot " + std::to_string(slot) + ", device " +
                     std::to_string(device) + ")");
  }
  if (!header_seen) throw ParseError("empty trace file");
  for (auto& [device, slots] : rows) {
    std::vector<bool>& seq = trace.states[device];
    int expected = 0;
    for (auto& [slot, flag] : slots) {
      if (slot != expected)
        throw GapError("device " + std::to_string(device) + ": missing slot " +
                       std::to_string(expected));
      seq.push_back(flag);
      ++expected;
    }
  }
  return trace;
}

// Per-worker mobility prediction. Exactly one variant is active per worker.
struct MobilityPredictor {
  enum class Kind { Statistical, Predicted, MajorityVote };
  Kind kind = Kind::Statistical;
  double p_out = 0.0;       // Statistical: single-slot out probability, known a priori
  double error_margin = 0.0; // Predicted: probability of flipping the true next state
  int window_slots = 11;    // MajorityVote: odd so the majority is well defined

  void validate() const {
    if (p_out < 0 || p_out > 1) throw ConfigError("p_out must be in [0,1]");
    if (error_margin < 0 || error_margin > 1) throw ConfigError("error_margin must be in [0,1]");
    if (kind == Kind::MajorityVote && (window_slots < 1 || window_slots % 2 == 0))
      throw ConfigError("window_slots must be odd and >= 1");
  }
};

struct Prediction {
  double p_out = 0.0;
  bool predicted_in_range = true;
};

inline Prediction predict_out_probability(const MobilityPredictor& pred,
                                          const std::vector<bool>& history,
                                          bool truth_next, double u) {
  switch (pred.kind) {
    case MobilityPredictor::Kind::Statistical:
      return {pred.p_out, truth_next};
    case MobilityPredictor::Kind::Predicted: {
      const bool predicted = (u < pred.error_margin) ? !truth_next : truth_next;
      return {predicted ? 0.0 : 1.0, predicted};
    }
    case MobilityPredictor::Kind::MajorityVote: {
      if (static_cast<int>(history.size()) < pred.window_slots)
        throw InsufficientHistory("majority vote needs " +
                                  std::to_string(pred.window_slots) + " slots");
      int in_count = 0;
      for (std::size_t i = history.size() - pred.window_slots; i < history.size(); ++i)
        if (history[i]) ++in_count;
      const bool predicted = in_count > pred.window_slots / 2;
      return {predicted ? 0.0 : 1.0, predicted};
    }
  }
  throw SimError("unreachable predictor kind");
}

// Deterministic stream: splitmix64 over a mixed seed, mapped to [0,1).
// uniform_real_distribution is implementation-defined, so we roll our own
// to keep realizations identical across platforms.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : state_(seed) {}

  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  double next_uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

// Realized availability of one worker over a trial, either Markov-driven or
// replayed from a trace. Slot states are generated lazily and cached, so a
// query never perturbs another worker's stream.
class MobilityProcess {
 public:
  MobilityProcess(const MarkovMobility& model, std::uint64_t trial_seed, int device_index)
      : model_(model),
        rng_(RandomStream::mix(trial_seed, static_cast<std::uint64_t>(device_index) * 2 + 1)) {
    states_.push_back(model.initial_state);
  }

  MobilityProcess(const MobilityTrace& trace, int trace_device, double slot_s)
      : model_{0, 0, slot_s > 0 ? slot_s : trace.slot_s, true}, from_trace_(true) {
    auto it = trace.states.find(trace_device);
    if (it == trace.states.end() || it->second.empty())
      throw ConfigError("trace has no rows for device " + std::to_string(trace_device));
    trace_states_ = it->second;
    states_.push_back(trace_states_[0]);
  }

  double slot_s() const { return model_.slot_s; }

  int slot_of(Micros t) const {
    return static_cast<int>(t / to_micros(model_.slot_s));
  }

  bool state_of_slot(int slot) {
    extend_to(slot);
    return states_[slot];
  }

  bool in_range_at(Micros t) { return state_of_slot(slot_of(t)); }

  // History of slot states up to and including `slot`.
  std::vector<bool> history_through(int slot) {
    extend_to(slot);
    return std::vector<bool>(states_.begin(), states_.begin() + slot + 1);
  }

  bool trace_wrapped() const { return trace_wrapped_; }

 private:
  void extend_to(int slot) {
    while (static_cast<int>(states_.size()) <= slot) {
      if (from_trace_) {
        const std::size_t i = states_.size() % trace_states_.size();
        if (states_.size() >= trace_states_.size()) trace_wrapped_ = true;
        states_.push_back(trace_states_[i]);
      } else {
        states_.push_back(step_markov(model_, states_.back(), rng_.next_uniform01()));
      }
    }
  }

  MarkovMobility model_;
  RandomStream rng_{0};
  bool from_trace_ = false;
  bool trace_wrapped_ = false;
  std::vector<bool> trace_states_;
  std::vector<bool> states_;
};

}  // namespace edgesim
