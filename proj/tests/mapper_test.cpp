#include <gtest/gtest.h>

#include <map>
#include <set>

#include "fpbs/mapper.hpp"
#include "generators.hpp"
#include "running_example.hpp"

using namespace fpbs;
using fpbs::testing::items;
using fpbs::testing::kRunningExampleChannels;
using fpbs::testing::running_example;

namespace {

std::vector<std::set<int>> occupancy(const BroadcastSchedule& s) {
  std::vector<std::set<int>> out;
  for (const auto& slot : slot_contents(s)) {
    std::set<int> ids;
    for (ItemId d : slot) ids.insert(d.value);
    out.push_back(ids);
  }
  return out;
}

}  // namespace

TEST(ScheduleMapping, RunningExampleMatchesFinalSchedule) {
  BroadcastSchedule s = fpbs_schedule(running_example(), kRunningExampleChannels, OrderingRule::FrequencyFirst);
  EXPECT_EQ(s.length(), 7);
  EXPECT_EQ(s.channels(), 2);
  std::vector<std::set<int>> expected = {{3, 2}, {5, 3}, {1, 5}, {4, 7}, {2, 6}, {7}, {8}};
  EXPECT_EQ(occupancy(s), expected);

  // q2 reads d2 and d3 on one channel, then d4 on the other.
  auto d2 = *s.assignment(2, ItemId(2));
  auto d3 = *s.assignment(2, ItemId(3));
  auto d4 = *s.assignment(2, ItemId(4));
  EXPECT_EQ(d2.slot, 1);
  EXPECT_EQ(d3.slot, 2);
  EXPECT_EQ(d4.slot, 4);
  EXPECT_EQ(d2.channel, d3.channel);
  EXPECT_NE(d3.channel, d4.channel);

  EXPECT_TRUE(check_conflict_free(s, running_example()).clean());
}

TEST(ScheduleMapping, SinglePathFillsOneChannel) {
  BroadcastSchedule s = fpbs_schedule({{1, 0, items({1, 2, 3})}}, 2, OrderingRule::FrequencyFirst);
  EXPECT_EQ(s.length(), 3);
  for (int t = 1; t <= 3; ++t) {
    EXPECT_TRUE(s.at({1, t}).has_value());
    EXPECT_FALSE(s.at({2, t}).has_value());
  }
}

TEST(IndexChannel, RunningExampleEntries) {
  BroadcastSchedule s = fpbs_schedule(running_example(), kRunningExampleChannels, OrderingRule::FrequencyFirst);
  const auto& idx = s.index_channel();
  ASSERT_EQ(idx.size(), 7u);
  EXPECT_EQ(idx[0].described_slot, 3);
  EXPECT_EQ(idx[5].described_slot, 1);
  EXPECT_EQ(idx[6].described_slot, 2);

  // I_6 lists slot 1: d3 for q4 and q5, d2 for q1, q2 and q3.
  std::map<int, std::vector<QueryId>> listed;
  for (const auto& l : idx[5].listings) listed[l.item.value] = l.qids;
  EXPECT_EQ(listed[3], (std::vector<QueryId>{4, 5}));
  EXPECT_EQ(listed[2], (std::vector<QueryId>{1, 2, 3}));

  // Listings cover exactly the occupied cells of the described slot.
  for (const auto& e : idx) {
    std::set<int> cells;
    for (int c = 1; c <= s.channels(); ++c)
      if (s.at({c, e.described_slot})) cells.insert(c);
    std::set<int> listed_cells;
    for (const auto& l : e.listings) {
      listed_cells.insert(l.channel);
      EXPECT_EQ(s.at({l.channel, e.described_slot}), l.item);
    }
    EXPECT_EQ(cells, listed_cells);
  }
}

TEST(IndexChannel, DescribedSlotWrapsForShortCycles) {
  // Evaluated literally: (t + 2) mod L, with 0 standing for slot L.
  EXPECT_EQ(described_slot(1, 1), 1);  // 3 mod 1 = 0 -> 1
  EXPECT_EQ(described_slot(1, 2), 1);  // 3 mod 2 = 1
  EXPECT_EQ(described_slot(2, 2), 2);  // 4 mod 2 = 0 -> 2
  EXPECT_EQ(described_slot(1, 3), 3);
  EXPECT_EQ(described_slot(2, 3), 1);
  EXPECT_EQ(described_slot(3, 3), 2);
  for (int L = 1; L <= 12; ++L)
    for (int t = 1; t <= L; ++t) {
      // Reading entry t and switching for one slot lands on the described
      // slot: t + 2 in cyclic terms.
      EXPECT_EQ(described_slot(t, L), ((t + 1) % L) + 1);
    }
}

TEST(IndexChannel, EmptyDescribedSlotHasNoListings) {
  BroadcastSchedule s(2, 3);
  s.place({1, 1}, ItemId(1));
  s.place({1, 2}, ItemId(2));
  s.assign(1, ItemId(1), {1, 1});
  s.assign(1, ItemId(2), {1, 2});
  auto idx = build_index_channel(s, {{1, 0, items({1, 2})}});
  EXPECT_TRUE(idx[0].listings.empty());  // describes slot 3
  ASSERT_EQ(idx[1].listings.size(), 1u);  // describes slot 1
  EXPECT_EQ(idx[1].listings[0].qids, (std::vector<QueryId>{1}));
}

TEST(ScheduleMappingProperty, GridMatchesTreeAndIsConflictFree) {
  std::mt19937_64 rng(31337);
  for (int round = 0; round < 300; ++round) {
    using fpbs::testing::uniform;
    auto batch = fpbs::testing::random_batch(rng, uniform(rng, 2, 50), uniform(rng, 1, 80), uniform(rng, 1, 8));
    int channels = uniform(rng, 1, 8);
    auto rule = rng() % 2 ? OrderingRule::FrequencyFirst : OrderingRule::RequestNumberFirst;
    FpTreePlan plan = build_fp_tree(batch, channels, rule);
    BroadcastSchedule s = schedule_mapping(plan);

    // Every data node in exactly one cell, every cell from one node.
    std::size_t data_nodes = 0;
    std::map<int, std::multiset<int>> by_slot;
    for (const auto& level : plan.tree.levels())
      for (NodeId id : level)
        if (plan.tree.node(id).is_data()) {
          ++data_nodes;
          by_slot[plan.tree.node(id).slot].insert(plan.tree.node(id).item->value);
        }
    ASSERT_EQ(static_cast<std::size_t>(s.occupied_cells()), data_nodes);
    auto contents = slot_contents(s);
    for (int t = 1; t <= s.length(); ++t) {
      std::multiset<int> cells;
      for (ItemId d : contents[t - 1]) cells.insert(d.value);
      ASSERT_EQ(cells, by_slot[t]);
      ASSERT_EQ(std::set<int>(cells.begin(), cells.end()).size(), cells.size()) << "item repeated within a slot";
    }
    for (const auto& q : batch)
      for (ItemId d : q.items) ASSERT_EQ(s.at(*s.assignment(q.qid, d)), d);
    auto report = check_conflict_free(s, batch);
    ASSERT_TRUE(report.clean()) << "round " << round << ": q" << report.violations[0].qid;
  }
}
