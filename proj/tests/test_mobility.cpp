#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>

#include "edgesim/mobility.hpp"

using namespace edgesim;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  std::string path = "/tmp/edgesim_test_" + name;
  std::ofstream out(path);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("markov single-step transitions") {
  MarkovMobility m{0.3, 0.5, 10.0, true};
  CHECK(step_markov(m, true, 0.29) == false);   // u < p_leave: leaves
  CHECK(step_markov(m, true, 0.30) == true);    // u >= p_leave: stays
  CHECK(step_markov(m, false, 0.49) == true);   // u < p_return: returns
  CHECK(step_markov(m, false, 0.74) == false);  // u >= p_return: stays out
}

TEST_CASE("stationary distribution formula") {
  CHECK(stationary_in_range({0.3, 0.5, 10.0, true}) == doctest::Approx(0.625));
  CHECK(stationary_out_of_range({0.3, 0.5, 10.0, true}) == doctest::Approx(0.375));
  CHECK(stationary_in_range({0.0, 0.5, 10.0, true}) == 1.0);
  CHECK_THROWS_AS(stationary_in_range({0.0, 0.0, 10.0, true}), DegenerateChain);
}

TEST_CASE("long-run in-range frequency matches the stationary value") {
  MarkovMobility m{0.3, 0.5, 10.0, true};
  MobilityProcess proc(m, 20260826ULL, 1);
  const int slots = 1'000'000;
  long in = 0;
  for (int s = 0; s < slots; ++s)
    if (proc.state_of_slot(s)) ++in;
  const double freq = static_cast<double>(in) / slots;
  CHECK(std::abs(freq - 0.625) < 0.005);
}

TEST_CASE("slot arithmetic and lazy extension") {
  MarkovMobility m{0.0, 1.0, 5.0, true};  // never leaves
  MobilityProcess proc(m, 1, 1);
  CHECK(proc.slot_of(0) == 0);
  CHECK(proc.slot_of(to_micros(4.999)) == 0);
  CHECK(proc.slot_of(to_micros(5.0)) == 1);
  CHECK(proc.in_range_at(to_micros(1234.5)));
  CHECK(proc.history_through(3) == std::vector<bool>{true, true, true, true});
}

TEST_CASE("identical seeds reproduce identical realizations") {
  MarkovMobility m{0.4, 0.4, 5.0, true};
  MobilityProcess a(m, 99, 2), b(m, 99, 2), c(m, 99, 3);
  bool differs_somewhere = false;
  for (int s = 0; s < 2000; ++s) {
    CHECK(a.state_of_slot(s) == b.state_of_slot(s));
    if (a.state_of_slot(s) != c.state_of_slot(s)) differs_somewhere = true;
  }
  CHECK(differs_somewhere);  // distinct devices draw from distinct streams
}

TEST_CASE("random stream is stable across constructions") {
  RandomStream a(RandomStream::mix(42, 7));
  RandomStream b(RandomStream::mix(42, 7));
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  RandomStream u(1);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.next_uniform01();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
}

TEST_CASE("statistical predictor reports the configured out probability") {
  MobilityPredictor pred;
  pred.kind = MobilityPredictor::Kind::Statistical;
  pred.p_out = 0.375;
  auto pr = predict_out_probability(pred, {}, true, 0.9);
  CHECK(pr.p_out == doctest::Approx(0.375));
  CHECK(pr.predicted_in_range);
}

TEST_CASE("oracle-with-error predictor mispredicts at the error margin") {
  MobilityPredictor pred;
  pred.kind = MobilityPredictor::Kind::Predicted;
  pred.error_margin = 0.1;
  RandomStream rng(7);
  MarkovMobility m{0.3, 0.5, 5.0, true};
  MobilityProcess proc(m, 5, 1);
  const int trials = 200'000;
  long wrong = 0;
  for (int s = 0; s < trials; ++s) {
    const bool truth = proc.state_of_slot(s + 1);
    auto pr = predict_out_probability(pred, {}, truth, rng.next_uniform01());
    if (pr.predicted_in_range != truth) ++wrong;
  }
  const double rate = static_cast<double>(wrong) / trials;
  CHECK(std::abs(rate - 0.10) < 0.01);
}

TEST_CASE("majority vote over a constant history is always right") {
  MobilityPredictor pred;
  pred.kind = MobilityPredictor::Kind::MajorityVote;
  pred.window_slots = 11;
  std::vector<bool> hist;
  for (int s = 0; s < 10; ++s) hist.push_back(true);
  CHECK_THROWS_AS(predict_out_probability(pred, hist, true, 0.0), InsufficientHistory);
  for (int s = 10; s < 100; ++s) {
    hist.push_back(true);
    auto pr = predict_out_probability(pred, hist, true, 0.0);
    CHECK(pr.predicted_in_range);
    CHECK(pr.p_out == 0.0);
  }
}

TEST_CASE("majority vote flips with the window majority") {
  MobilityPredictor pred;
  pred.kind = MobilityPredictor::Kind::MajorityVote;
  pred.window_slots = 3;
  CHECK(predict_out_probability(pred, {true, true, false}, false, 0.0).predicted_in_range);
  CHECK(!predict_out_probability(pred, {true, false, false}, true, 0.0).predicted_in_range);
  pred.window_slots = 4;
  CHECK_THROWS_AS(pred.validate(), ConfigError);
}

TEST_CASE("trace parsing accepts the documented schema") {
  auto path = write_temp("trace_ok.csv",
                         "slot,device,in_range\n"
                         "0,0,1\n1,0,0\n2,0,1\n"
                         "0,1,1\n1,1,1\n");
  MobilityTrace t = load_trace(path);
  CHECK(t.states.at(0) == std::vector<bool>{true, false, true});
  CHECK(t.states.at(1) == std::vector<bool>{true, true});
  std::remove(path.c_str());
}

TEST_CASE("trace parsing rejects malformed input") {
  auto bad_header = write_temp("trace_h.csv", "slot,dev,in_range\n0,0,1\n");
  CHECK_THROWS_AS(load_trace(bad_header), ParseError);
  auto bad_field = write_temp("trace_f.csv", "slot,device,in_range\n0,0,yes\n");
  CHECK_THROWS_AS(load_trace(bad_field), ParseError);
  auto bad_flag = write_temp("trace_g.csv", "slot,device,in_range\n0,0,2\n");
  CHECK_THROWS_AS(load_trace(bad_flag), ParseError);
  auto gap = write_temp("trace_gap.csv", "slot,device,in_range\n0,0,1\n2,0,1\n");
  CHECK_THROWS_AS(load_trace(gap), GapError);
  auto dup = write_temp("trace_dup.csv", "slot,device,in_range\n0,0,1\n0,0,1\n");
  CHECK_THROWS_AS(load_trace(dup), GapError);
  CHECK_THROWS_AS(load_trace("/nonexistent/trace.csv"), ParseError);
  auto empty = write_temp("trace_empty.csv", "");
  CHECK_THROWS_AS(load_trace(empty), ParseError);
  for (auto p : {bad_header, bad_field, bad_flag, gap, dup, empty})
    std::remove(p.c_str());
}

TEST_CASE("trace-backed process replays and wraps") {
  auto path = write_temp("trace_wrap.csv",
                         "slot,device,in_range\n0,0,1\n1,0,0\n");
  MobilityTrace t = load_trace(path);
  MobilityProcess proc(t, 0, 5.0);
  CHECK(proc.state_of_slot(0));
  CHECK(!proc.state_of_slot(1));
  CHECK(!proc.trace_wrapped());
  CHECK(proc.state_of_slot(2));  // wraps back to slot 0 of the trace
  CHECK(proc.trace_wrapped());
  CHECK_THROWS_AS(MobilityProcess(t, 9, 5.0), ConfigError);
  std::remove(path.c_str());
}

TEST_CASE("model validation bounds") {
  CHECK_THROWS_AS(MarkovMobility({1.5, 0.5, 10.0, true}).validate(), ConfigError);
  CHECK_THROWS_AS(MarkovMobility({0.5, -0.1, 10.0, true}).validate(), ConfigError);
  CHECK_THROWS_AS(MarkovMobility({0.5, 0.5, 0.0, true}).validate(), ConfigError);
  CHECK_NOTHROW(MarkovMobility({0.5, 0.5, 10.0, true}).validate());
}
