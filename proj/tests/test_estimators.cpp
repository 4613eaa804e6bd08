#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "edgesim/estimators.hpp"

using namespace edgesim;

namespace {

// A stats table whose per-device delay/energy means are set directly.
StatsTable with_means(const std::vector<std::pair<double, double>>& delay_energy) {
  StatsTable t(static_cast<int>(delay_energy.size()));
  for (int n = 0; n < t.size(); ++n) {
    t.at(n).success_count = 1;
    t.at(n).delay_sum_s = delay_energy[n].first;
    t.at(n).energy_success_sum_mAh = delay_energy[n].second;
    t.at(n).ewma_energy_mAh = delay_energy[n].second;
    t.at(n).ewma_init = true;
    t.at(n).ewma_proc_mAh = delay_energy[n].second;
    t.at(n).ewma_proc_init = true;
  }
  return t;
}

TaskOutcome success_on(int device, double delay_s, double master_mAh,
                       double worker_mAh) {
  TaskOutcome o;
  o.device = device;
  o.start_s = 0;
  o.end_s = delay_s;
  o.master_energy_mAh = master_mAh;
  o.worker_energy_mAh = worker_mAh;
  return o;
}

}  // namespace

TEST_CASE("average success delay") {
  StatsTable t(2);
  t.at(1).success_count = 4;
  t.at(1).delay_sum_s = 42.0;
  CHECK(avg_delay(t, 1) == doctest::Approx(10.5));
  CHECK_THROWS_AS(avg_delay(t, 0), NoSamples);
}

TEST_CASE("serial completion estimate matches the frozen hand value") {
  // t_n=10, t_0=12, w_n=0, P=0.3, K=60, k=10:
  // 0 + 10 + 12*0.3 + ((10+12)/2*0.7 + 12*0.3)*50 = 578.6
  StatsTable t = with_means({{12.0, 1.0}, {10.0, 1.0}});
  CHECK(estimated_completion_serial(t, 1, 10, 60, 0.0, 0.3) ==
        doctest::Approx(578.6).epsilon(1e-12));
  // last task, immobile helper: just w_n + t_n
  CHECK(estimated_completion_serial(t, 1, 60, 60, 3.0, 0.0) ==
        doctest::Approx(13.0).epsilon(1e-12));
  // local device with forced P=0: w_0 + t_0*(K-k+1)
  CHECK(estimated_completion_serial(t, 0, 10, 60, 5.0, 0.0) ==
        doctest::Approx(5.0 + 12.0 * 51).epsilon(1e-12));
}

TEST_CASE("mobility-inflated delay") {
  StatsTable t = with_means({{12.0, 1.0}, {9.0, 1.0}});
  CHECK(mobility_inflated_delay(t, 1, 0.1) == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(mobility_inflated_delay(t, 1, 0.0) == doctest::Approx(9.0));
  t.at(1).delay_sum_s = 6.0;
  CHECK(mobility_inflated_delay(t, 1, 0.5) == doctest::Approx(12.0).epsilon(1e-12));
  CHECK_THROWS_AS(mobility_inflated_delay(t, 1, 1.0), CertainlyAbsent);
}

TEST_CASE("retry-penalty energy model matches the frozen hand value") {
  // eps_n = 5, eps_0 = 8, P = 0.5 -> 5 + 8*0.5 = 9
  StatsTable t(2);
  t.at(0).success_count = 1;
  t.at(0).energy_success_sum_mAh = 8.0;
  t.at(1).success_count = 1;
  t.at(1).energy_success_sum_mAh = 5.0;
  EnergyModel m;
  m.kind = EnergyModel::Kind::Ordinary;
  CHECK(estimate_energy(t, 1, m, 0.5) == doctest::Approx(9.0).epsilon(1e-12));
  StatsTable empty(2);
  CHECK_THROWS_AS(estimate_energy(empty, 1, m, 0.5), NoSamples);
}

TEST_CASE("waste-inclusive energy model matches the frozen hand value") {
  // two successes totaling 20 mAh, one failure wasting 10 mAh, M=2 -> 15
  StatsTable t(2);
  t.at(1).success_count = 2;
  t.at(1).energy_success_sum_mAh = 20.0;
  t.at(1).fail_count = 1;
  t.at(1).energy_fail_sum_mAh = 10.0;
  EnergyModel m;
  m.kind = EnergyModel::Kind::New;
  CHECK(estimate_energy(t, 1, m, 0.0) == doctest::Approx(15.0).epsilon(1e-12));
  // failures but no successes yet: infinitely expensive, never chosen
  StatsTable f(2);
  f.at(1).fail_count = 3;
  f.at(1).energy_fail_sum_mAh = 2.0;
  CHECK(std::isinf(estimate_energy(f, 1, m, 0.0)));
  StatsTable empty(2);
  CHECK_THROWS_AS(estimate_energy(empty, 1, m, 0.0), NoSamples);
}

TEST_CASE("ewma energy model matches the frozen hand value") {
  // gamma(k-1)=10, new sample 20 -> 0.8*20 + 0.2*10 = 18; with gamma_0=5, P=0
  StatsTable t(2);
  t.at(0).ewma_energy_mAh = 5.0;
  t.at(0).ewma_init = true;
  t.at(1).ewma_energy_mAh = 10.0;
  t.at(1).ewma_init = true;
  EnergyModel m;
  m.kind = EnergyModel::Kind::Newest;
  update_on_outcome(t, success_on(1, 4.0, 2.0, 18.0), m);  // total sample = 20
  CHECK(t.at(1).ewma_energy_mAh == doctest::Approx(18.0).epsilon(1e-12));
  CHECK(estimate_energy(t, 1, m, 0.0) == doctest::Approx(18.0).epsilon(1e-12));
  CHECK(estimate_energy(t, 1, m, 0.5) == doctest::Approx(18.0 + 2.5).epsilon(1e-12));
}

TEST_CASE("availability-discounted ewma model") {
  StatsTable t(2);
  t.at(1).ewma_proc_mAh = 6.0;
  t.at(1).ewma_proc_init = true;
  t.at(1).ewma_off_mAh = 2.0;
  t.at(1).ewma_off_init = true;
  EnergyModel m;
  m.kind = EnergyModel::Kind::PrCompEwma;
  CHECK(estimate_energy(t, 1, m, 0.5) == doctest::Approx(16.0).epsilon(1e-12));
  CHECK_THROWS_AS(estimate_energy(t, 1, m, 1.0), CertainlyAbsent);
}

TEST_CASE("first success initializes each ewma to the sample") {
  StatsTable t(2);
  EnergyModel m;
  update_on_outcome(t, success_on(1, 3.0, 0.5, 7.5), m);
  CHECK(t.at(1).ewma_energy_mAh == doctest::Approx(8.0));
  CHECK(t.at(1).ewma_proc_mAh == doctest::Approx(7.5));
  CHECK(t.at(0).ewma_off_mAh == doctest::Approx(0.5));
  CHECK(t.at(0).ewma_off_init);
  CHECK(!t.at(0).ewma_init);  // local gamma untouched by an offload
}

TEST_CASE("ewma converges to constant samples") {
  StatsTable t(2);
  EnergyModel m;
  for (int i = 0; i < 30; ++i) update_on_outcome(t, success_on(1, 2.0, 1.0, 3.0), m);
  CHECK(std::abs(t.at(1).ewma_energy_mAh - 4.0) < 1e-6);
  CHECK(std::abs(t.at(1).ewma_proc_mAh - 3.0) < 1e-6);
  CHECK(std::abs(t.at(0).ewma_off_mAh - 1.0) < 1e-6);
}

TEST_CASE("failures grow the waste sum but never touch delay or ewma") {
  StatsTable t(3);
  EnergyModel m;
  update_on_outcome(t, success_on(1, 5.0, 1.0, 2.0), m);
  const double gamma_before = t.at(1).ewma_energy_mAh;
  TaskOutcome fail = success_on(1, 2.0, 0.3, 0.4);
  fail.status = AttemptStatus::FailedAtStep2;
  update_on_outcome(t, fail, m);
  CHECK(t.at(1).success_count == 1);
  CHECK(t.at(1).fail_count == 1);
  CHECK(avg_delay(t, 1) == doctest::Approx(5.0));
  CHECK(t.at(1).ewma_energy_mAh == doctest::Approx(gamma_before));
  CHECK(t.at(1).energy_fail_sum_mAh == doctest::Approx(0.7));  // both sides counted

  EnergyModel master_only = m;
  master_only.use_helper_fail_energy = false;
  StatsTable t2(2);
  update_on_outcome(t2, fail, master_only);
  CHECK(t2.at(1).energy_fail_sum_mAh == doctest::Approx(0.3));
}

TEST_CASE("a success on one helper leaves other helpers' ewma unchanged") {
  StatsTable t(3);
  EnergyModel m;
  update_on_outcome(t, success_on(1, 1.0, 0.1, 0.9), m);
  const double gamma1 = t.at(1).ewma_energy_mAh;
  update_on_outcome(t, success_on(2, 1.0, 0.1, 0.4), m);
  CHECK(t.at(1).ewma_energy_mAh == doctest::Approx(gamma1));
}

TEST_CASE("retry and waste models coincide when nothing fails") {
  StatsTable t(2);
  EnergyModel waste;
  waste.kind = EnergyModel::Kind::New;
  EnergyModel retry;
  retry.kind = EnergyModel::Kind::Ordinary;
  update_on_outcome(t, success_on(0, 8.0, 4.0, 0.0), waste);
  update_on_outcome(t, success_on(1, 5.0, 0.5, 2.5), waste);
  const double e_new = estimate_energy(t, 1, waste, 0.25);
  const double e_ord = estimate_energy(t, 1, retry, 0.25);
  CHECK(e_new == doctest::Approx(3.0));
  CHECK(e_ord - e_new == doctest::Approx(4.0 * 0.25).epsilon(1e-12));
}

TEST_CASE("scaling all energies preserves each model's argmin device") {
  for (auto kind : {EnergyModel::Kind::Ordinary, EnergyModel::Kind::New,
                    EnergyModel::Kind::Newest, EnergyModel::Kind::PrCompEwma}) {
    EnergyModel m;
    m.kind = kind;
    auto build = [&](double scale) {
      StatsTable t(4);
      const double worker_mAh[4] = {6.0, 2.5, 4.0, 3.5};
      for (int n = 0; n < 4; ++n) {
        update_on_outcome(t, success_on(n, 3.0, n == 0 ? worker_mAh[n] * scale : 0.2 * scale,
                                        n == 0 ? 0.0 : worker_mAh[n] * scale), m);
      }
      return t;
    };
    auto argmin = [&](const StatsTable& t) {
      int best = -1;
      double best_e = 0;
      for (int n = 1; n < 4; ++n) {
        const double e = estimate_energy(t, n, m, 0.2);
        if (best < 0 || e < best_e) {
          best = n;
          best_e = e;
        }
      }
      return best;
    };
    StatsTable base = build(1.0);
    StatsTable scaled = build(7.25);
    CHECK(argmin(base) == argmin(scaled));
    CHECK(argmin(base) == 1);
  }
}

TEST_CASE("energy model validation") {
  EnergyModel m;
  m.beta = 0.0;
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m.beta = 0.2;
  CHECK_NOTHROW(m.validate());
}
