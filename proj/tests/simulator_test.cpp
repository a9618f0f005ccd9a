#include <gtest/gtest.h>

#include "fpbs/oracle.hpp"
#include "fpbs/simulator.hpp"
#include "generators.hpp"
#include "running_example.hpp"

using namespace fpbs;
using fpbs::testing::items;
using fpbs::testing::kRunningExampleChannels;
using fpbs::testing::running_example;

namespace {

BroadcastSchedule example_schedule() {
  return fpbs_schedule(running_example(), kRunningExampleChannels, OrderingRule::FrequencyFirst);
}

// Straight average of simulate_query over one cycle of tune-ins.
double direct_mean(const BroadcastSchedule& s, const Query& q) {
  double sum = 0;
  for (int t = 1; t <= s.length(); ++t) sum += static_cast<double>(simulate_query(s, q, t).latency);
  return sum / s.length();
}

}  // namespace

TEST(SimulateQuery, Q2FromCycleStartTakesFourSlotsAndOneSwitch) {
  BroadcastSchedule s = example_schedule();
  const Query q2 = running_example()[1];
  // The index read at slot L - 1 announces slot 1 of the next cycle.
  AccessResult r = simulate_query(s, q2, s.length() - 1);
  ASSERT_EQ(r.plan.steps.size(), 3u);
  EXPECT_EQ(r.first_slot, s.length() + 1);
  EXPECT_EQ(r.completion - r.first_slot + 1, 4);
  EXPECT_EQ(r.switches, 1);
  EXPECT_EQ(r.skips, 0);
  EXPECT_EQ(r.plan.steps[0].item, ItemId(2));
  EXPECT_EQ(r.plan.steps[1].item, ItemId(3));
  EXPECT_EQ(r.plan.steps[2].item, ItemId(4));
  EXPECT_TRUE(is_feasible(r.plan, q2));
}

TEST(SimulateQuery, SingleItemAtItsAnnouncement) {
  BroadcastSchedule s(1, 5);
  for (int t = 1; t <= 5; ++t) s.place({1, t}, ItemId(t));
  s.assign(1, ItemId(4), {1, 4});
  AccessResult r = simulate_query(s, {1, 0, items({4})}, 2);  // index at 2 describes 4
  EXPECT_EQ(r.latency, 2);
  EXPECT_EQ(r.t_wait, 2);
  EXPECT_EQ(r.switches, 0);
}

TEST(SimulateQuery, RejectsItemsNotBroadcast) {
  BroadcastSchedule s = example_schedule();
  EXPECT_THROW(simulate_query(s, {9, 0, items({2, 42})}, 1), ValidationError);
  EXPECT_THROW(simulate_query(s, {9, 0, items({2})}, 0), ValidationError);
}

TEST(SimulateQuery, SkipsCellsThatWouldOverrunTheCycle) {
  // d1 at slot 3 on channel 1, d2 at slot 1 on channel 2. After d1, d2 is one
  // slot later on the other channel and its next copy is a cycle away, so the
  // client lets d1 pass and starts with d2.
  BroadcastSchedule s(2, 3);
  s.place({1, 3}, ItemId(1));
  s.place({2, 1}, ItemId(2));
  s.assign(1, ItemId(1), {1, 3});
  s.assign(1, ItemId(2), {2, 1});
  Query q{1, 0, items({1, 2})};
  AccessSimulator sim(s);
  auto wrapped = sim.retrieve_from(q, {3, 1, ItemId(1)});
  EXPECT_EQ(wrapped.back().slot, 7);
  ASSERT_EQ(sim.catch_points(q).size(), 1u);
  AccessResult r = sim.simulate(q, 1);
  EXPECT_EQ(r.first_slot, 4);
  EXPECT_EQ(r.completion, 6);
  EXPECT_EQ(r.switches, 1);
  EXPECT_EQ(r.skips, 0);
  EXPECT_TRUE(is_feasible(r.plan, q));
}

TEST(SimulateQuery, CanonicalPlanBoundsRetrieval) {
  BroadcastSchedule s = example_schedule();
  AccessSimulator sim(s);
  for (const Query& q : running_example()) {
    for (const CatchPoint& p : sim.catch_points(q)) {
      EXPECT_LT(p.plan.back().slot - p.cell.slot, s.length());
      EXPECT_TRUE(is_feasible({p.plan, p.cell.slot}, q));
      auto canonical = sim.canonical_from(q, p.cell);
      if (!canonical.empty()) {
        EXPECT_LE(p.plan.back().slot, canonical.back().slot);
      }
    }
  }
}

TEST(ExpectedAccessTime, SingleItemMatchesClosedForm) {
  for (int L = 1; L <= 9; ++L)
    for (int at = 1; at <= L; ++at) {
      BroadcastSchedule s(2, L);
      s.place({2, at}, ItemId(1));
      s.assign(1, ItemId(1), {2, at});
      auto e = expected_access_time(s, {{1, 0, items({1})}});
      // Distance from the described slot to the item is uniform on 0..L-1.
      EXPECT_DOUBLE_EQ(e.grand_mean, 2.0 + (L - 1) / 2.0) << "L=" << L;
    }
}

TEST(ExpectedAccessTime, IdenticalQueriesAgree) {
  BroadcastSchedule s = fpbs_schedule({{1, 0, items({1, 2, 3})}, {2, 1, items({1, 2, 3})}}, 2,
                                      OrderingRule::FrequencyFirst);
  auto e = expected_access_time(s, {{1, 0, items({1, 2, 3})}, {2, 1, items({1, 2, 3})}});
  EXPECT_DOUBLE_EQ(e.per_query[0].latency, e.per_query[1].latency);
}

TEST(ExpectedAccessTime, RunningExampleMatchesDirectEnumeration) {
  BroadcastSchedule s = example_schedule();
  auto e = expected_access_time(s, running_example());
  double mean = 0;
  for (std::size_t i = 0; i < 5; ++i) {
    double direct = direct_mean(s, running_example()[i]);
    EXPECT_DOUBLE_EQ(e.per_query[i].latency, direct);
    mean += direct;
  }
  EXPECT_DOUBLE_EQ(e.grand_mean, mean / 5);
  EXPECT_NEAR(e.grand_mean, 48.0 / 7.0, 1e-12);
}

TEST(SimulatorProperty, FeasibleBoundedAndNeverBelowOptimal) {
  std::mt19937_64 rng(4242);
  using fpbs::testing::uniform;
  int equal = 0, total = 0;
  for (int round = 0; round < 100; ++round) {
    auto batch = fpbs::testing::random_batch(rng, uniform(rng, 3, 15), uniform(rng, 1, 12), uniform(rng, 1, 5));
    int C = uniform(rng, 1, 4);
    BroadcastSchedule s = fpbs_schedule(batch, C, rng() % 2 ? OrderingRule::FrequencyFirst : OrderingRule::RequestNumberFirst);
    AccessSimulator sim(s);
    const Query& q = batch[rng() % batch.size()];
    for (int t = 1; t <= s.length(); ++t) {
      AccessResult r = sim.simulate(q, t);
      ASSERT_TRUE(is_feasible(r.plan, q));
      ASSERT_LE(r.completion - r.first_slot, 2 * s.length());
      ASSERT_GE(r.t_wait, 2);
      OptimalRetrieval opt = dp_optimal_retrieval(s, q, t);
      ASSERT_LE(opt.latency, r.latency);
      ++total;
      equal += opt.latency == r.latency;
    }
  }
  std::cout << "greedy matched the optimum on " << equal << " of " << total << " tune-ins\n";
}

TEST(RunOffline, SingleQueryIsOnePath) {
  auto r = run_offline({{1, 0, items({5, 6, 7, 8})}}, 3, OrderingRule::FrequencyFirst);
  ASSERT_EQ(r.per_query.size(), 1u);
  EXPECT_EQ(r.per_query[0].span, 3);
  EXPECT_DOUBLE_EQ(r.per_query[0].switches, 0.0);
  EXPECT_EQ(r.summary.conflicts, 0u);
  EXPECT_EQ(r.cycle_lengths, std::vector<int>{4});
}

TEST(RunOffline, SummaryMatchesRows) {
  auto r = run_offline(running_example(), 2, OrderingRule::FrequencyFirst);
  double sum = 0;
  for (const auto& q : r.per_query) sum += q.latency;
  EXPECT_DOUBLE_EQ(r.summary.mean_latency, sum / 5);
  EXPECT_EQ(r.summary.queries, 5u);
  EXPECT_EQ(r.summary.max_cycle_length, 7);
  EXPECT_EQ(r.summary.anchor_breaches, 0);
  EXPECT_LE(r.summary.p50_latency, r.summary.p95_latency);
  EXPECT_LE(r.summary.p95_latency, r.summary.p99_latency);
}

TEST(Percentile, NearestRank) {
  EXPECT_DOUBLE_EQ(percentile({5, 1, 3, 2, 4}, 50), 3);
  EXPECT_DOUBLE_EQ(percentile({5, 1, 3, 2, 4}, 99), 5);
  EXPECT_DOUBLE_EQ(percentile({7}, 1), 7);
  EXPECT_DOUBLE_EQ(percentile({}, 50), 0);
}

TEST(RunOnline, LargeBufferIsOneOfflineBatch) {
  std::vector<Arrival> stream;
  for (const Query& q : running_example()) stream.push_back({q, q.arrival_seq});
  auto r = run_online(stream, 100, 2, OrderingRule::FrequencyFirst);
  EXPECT_EQ(r.summary.batches, 1);
  EXPECT_EQ(r.cycle_lengths, std::vector<int>{7});
  EXPECT_EQ(r.summary.conflicts, 0u);
  // Cycle starts after the last arrival (slot 5).
  for (const auto& q : r.per_query) EXPECT_EQ(q.tune_in, 6);
}

TEST(RunOnline, CapacityOneServesEachQueryAlone) {
  std::vector<Arrival> stream;
  for (const Query& q : running_example()) stream.push_back({q, 10 * q.arrival_seq});
  auto r = run_online(stream, 1, 2, OrderingRule::FrequencyFirst);
  EXPECT_EQ(r.summary.batches, 5);
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const auto& rec = r.per_query[i];
    // A lone query is a single path read from its first slot.
    EXPECT_EQ(rec.span, static_cast<int>(stream[i].query.items.size()) - 1);
    EXPECT_DOUBLE_EQ(rec.latency, static_cast<double>(rec.tune_in - rec.arrival + rec.span));
    EXPECT_EQ(rec.tune_in, stream[i].slot + 1);  // arrivals are far apart
  }
}

TEST(RunOnline, BackToBackBatchesQueue) {
  std::vector<Arrival> stream;
  for (const Query& q : running_example()) stream.push_back({q, 1});
  auto r = run_online(stream, 1, 2, OrderingRule::FrequencyFirst);
  // Each batch waits for the previous one-cycle broadcast to end.
  std::int64_t expected_start = 2;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    EXPECT_EQ(r.per_query[i].tune_in, expected_start);
    expected_start += r.cycle_lengths[i];
  }
}

TEST(RunOnline, RejectsBadInput) {
  EXPECT_THROW(run_online({}, 0, 2, OrderingRule::FrequencyFirst), ConfigError);
  std::vector<Arrival> unordered = {{{1, 1, items({1})}, 5}, {{2, 0, items({2})}, 3}};
  EXPECT_THROW(run_online(unordered, 2, 2, OrderingRule::FrequencyFirst), ValidationError);
}
