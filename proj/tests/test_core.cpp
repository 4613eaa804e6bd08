#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "edgesim/core.hpp"

using namespace edgesim;

namespace {

LedgerSnapshot snap(double app_s, double all_s, double wifi_s,
                    std::map<std::pair<int, int>, double> tau) {
  LedgerSnapshot s;
  s.cpu_time_app_s = app_s;
  s.cpu_time_all_s = all_s;
  s.wifi_active_s = wifi_s;
  s.cluster_speed_time_s = std::move(tau);
  return s;
}

DeviceProfile one_cluster(double current_mA) {
  DeviceProfile p;
  p.cpu_current_mA = {{0, 0, current_mA}};
  p.wifi_power_mA = 40.0;
  return p;
}

}  // namespace

TEST_CASE("time conversion round-trips at microsecond precision") {
  CHECK(to_micros(1.0) == 1'000'000);
  CHECK(to_seconds(1'500'000) == doctest::Approx(1.5));
  CHECK(to_micros(to_seconds(123'456'789)) == 123'456'789);
  CHECK(to_micros(0.0000004) == 0);   // rounds to nearest tick
  CHECK(to_micros(0.0000006) == 1);
}

TEST_CASE("app-share cpu energy over an interval") {
  DeviceProfile p = one_cluster(100.0);
  auto before = snap(0, 0, 0, {{{0, 0}, 0.0}});
  auto after = snap(2, 4, 0, {{{0, 0}, 4.0}});
  // (2/4) * 4 s * 100 mA = 200 mA*s = 0.055555... mAh
  CHECK(interval_cpu_energy(before, after, p) ==
        doctest::Approx(200.0 / 3600.0).epsilon(1e-12));
}

TEST_CASE("cpu energy sums across clusters and speeds") {
  DeviceProfile p;
  p.cpu_current_mA = {{0, 0, 100.0}, {0, 1, 300.0}, {1, 0, 50.0}};
  auto before = snap(0, 0, 0, {});
  auto after = snap(3, 3, 0, {{{0, 0}, 1.0}, {{0, 1}, 2.0}, {{1, 0}, 4.0}});
  // full app share: (1*100 + 2*300 + 4*50) = 900 mA*s
  CHECK(interval_cpu_energy(before, after, p) == doctest::Approx(900.0 / 3600.0));
}

TEST_CASE("cpu energy edge and error cases") {
  DeviceProfile p = one_cluster(100.0);
  auto z = snap(0, 0, 0, {});
  CHECK(interval_cpu_energy(z, snap(0, 5, 0, {{{0, 0}, 5.0}}), p) == 0.0);
  CHECK_THROWS_AS(interval_cpu_energy(z, snap(1, 0, 0, {{{0, 0}, 1.0}}), p),
                  ZeroSystemTime);
  CHECK_THROWS_AS(interval_cpu_energy(snap(2, 2, 0, {}), snap(1, 3, 0, {}), p),
                  NegativeDelta);
  CHECK_THROWS_AS(interval_cpu_energy(snap(0, 2, 0, {}), snap(1, 1, 0, {}), p),
                  NegativeDelta);
  auto tau_hi = snap(0, 0, 0, {{{0, 0}, 2.0}});
  auto tau_lo = snap(1, 1, 0, {{{0, 0}, 1.0}});
  CHECK_THROWS_AS(interval_cpu_energy(tau_hi, tau_lo, p), NegativeDelta);
}

TEST_CASE("radio energy from active seconds") {
  DeviceProfile p = one_cluster(100.0);  // wifi 40 mA
  CHECK(wifi_energy(90.0, p) == doctest::Approx(1.0));
  CHECK(wifi_energy(0.0, p) == 0.0);
  CHECK_THROWS_AS(wifi_energy(-1.0, p), NegativeDelta);
}

TEST_CASE("profile validation rejects bad fields") {
  DeviceProfile p = one_cluster(100.0);
  CHECK_NOTHROW(p.validate());
  DeviceProfile bad = p;
  bad.mean_service_s = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = p;
  bad.service_jitter = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = p;
  bad.cpu_current_mA.clear();
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = p;
  bad.group_owner_overhead = 0.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = p;
  bad.id = 1;
  bad.link_bandwidth_Bps = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("attempt status helpers") {
  CHECK(!is_failure(AttemptStatus::Success));
  CHECK(is_failure(AttemptStatus::FailedAtStep2));
  CHECK(failed_step(AttemptStatus::Success) == 0);
  CHECK(failed_step(AttemptStatus::FailedAtStep1) == 1);
  CHECK(failed_step(AttemptStatus::FailedAtStep3) == 3);
}

TEST_CASE("ledger accumulates per attempt and per device") {
  EnergyLedger ledger;
  TaskOutcome ok;
  ok.task_id = 0;
  ok.device = 1;
  ok.attempt = 1;
  ok.master_energy_mAh = 1.0;
  ok.worker_energy_mAh = 2.0;
  ledger.record_attempt(ok);

  TaskOutcome fail;
  fail.task_id = 0;
  fail.device = 2;
  fail.attempt = 1;
  fail.status = AttemptStatus::FailedAtStep2;
  fail.master_energy_mAh = 0.05;
  fail.worker_energy_mAh = 0.07;
  ledger.record_attempt(fail);

  CHECK(ledger.master_total_mAh() == doctest::Approx(1.05).epsilon(1e-12));
  CHECK(ledger.worker_total_mAh() == doctest::Approx(2.07).epsilon(1e-12));
  CHECK(ledger.total_mAh() == doctest::Approx(3.12).epsilon(1e-12));
  CHECK(ledger.device_mAh(1) == doctest::Approx(2.0));
  CHECK(ledger.device_mAh(2) == doctest::Approx(0.07));
  CHECK(ledger.device_mAh(kLocalDevice) == doctest::Approx(1.05));
  CHECK(ledger.entries().size() == 2);
}

TEST_CASE("ledger rejects duplicate attempt keys") {
  EnergyLedger ledger;
  TaskOutcome o;
  o.task_id = 3;
  o.device = 1;
  o.attempt = 2;
  ledger.record_attempt(o);
  CHECK_THROWS_AS(ledger.record_attempt(o), DuplicateAttempt);
  o.attempt = 3;  // new attempt number is fine
  CHECK_NOTHROW(ledger.record_attempt(o));
}

TEST_CASE("ledger totals are additive over random attempt sequences") {
  EnergyLedger ledger;
  double expect = 0.0;
  std::uint64_t s = 12345;
  for (int i = 0; i < 200; ++i) {
    s = s * 6364136223846793005ULL + 1442695040888963407ULL;
    TaskOutcome o;
    o.task_id = i / 3;
    o.device = static_cast<int>(s >> 60) % 4;
    o.attempt = i % 3 + 1;
    o.master_energy_mAh = static_cast<double>((s >> 11) % 1000) / 997.0;
    o.worker_energy_mAh = static_cast<double>((s >> 31) % 1000) / 991.0;
    expect += o.total_energy_mAh();
    ledger.record_attempt(o);
  }
  CHECK(ledger.total_mAh() == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("outcome delay and total energy") {
  TaskOutcome o;
  o.start_s = 10.0;
  o.end_s = 14.5;
  o.master_energy_mAh = 0.2;
  o.worker_energy_mAh = 0.3;
  CHECK(o.delay_s() == doctest::Approx(4.5));
  CHECK(o.total_energy_mAh() == doctest::Approx(0.5));
}
