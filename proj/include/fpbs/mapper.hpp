#pragma once

// Maps the finished tree onto |C| channels level by level and derives the
// index channel.

#include <algorithm>
#include <map>
#include <vector>

#include "fpbs/model.hpp"
#include "fpbs/scheduler.hpp"

namespace fpbs {

/// Channel of every live data node, indexed by NodeId (0 for non-data).
struct ChannelMap {
  std::vector<int> channel_of;
};

/// Level k of the tree becomes slot k. Within a level, a data node whose
/// parent is a data node keeps its parent's channel (each data node has at
/// most one data child, so these never collide); root children then take
/// free channels in BFS order, and data nodes behind an empty node take the
/// remaining free cells. Empty nodes occupy no cell.
inline ChannelMap assign_channels(const FpStarTree& t) {
  const int C = t.channels();
  ChannelMap m;
  m.channel_of.assign(t.arena_size(), 0);
  for (const auto& level : t.levels()) {
    std::vector<bool> used(static_cast<std::size_t>(C) + 1, false);
    std::vector<NodeId> root_children, behind_empty;
    int data = 0;
    for (NodeId id : level) {
      const TreeNode& n = t.node(id);
      if (!n.is_data()) continue;
      ++data;
      if (n.parent == kRoot) {
        root_children.push_back(id);
      } else if (t.node(n.parent).is_data()) {
        int c = m.channel_of[n.parent];
        if (used[c]) throw InvariantError("two data children share a data parent");
        used[c] = true;
        m.channel_of[id] = c;
      } else {
        behind_empty.push_back(id);
      }
    }
    if (data > C) throw InvariantError("level holds more data nodes than channels");
    int cursor = 1;
    auto next_free = [&] {
      while (cursor <= C && used[cursor]) ++cursor;
      if (cursor > C) throw InvariantError("no free channel left in level");
      used[cursor] = true;
      return cursor;
    };
    for (NodeId id : root_children) m.channel_of[id] = next_free();
    for (NodeId id : behind_empty) m.channel_of[id] = next_free();
  }
  return m;
}

/// Index entry t describes slot described_slot(t, L) and lists each cell
/// there with the queries whose canonical copy it is.
inline std::vector<IndexEntry> build_index_channel(const BroadcastSchedule& s) {
  std::map<Position, std::vector<QueryId>> owners;
  for (const auto& [key, pos] : s.assignments()) owners[pos].push_back(key.first);
  std::vector<IndexEntry> index;
  index.reserve(static_cast<std::size_t>(s.length()));
  for (int t = 1; t <= s.length(); ++t) {
    IndexEntry e;
    e.described_slot = described_slot(t, s.length());
    for (int c = 1; c <= s.channels(); ++c) {
      auto d = s.at({c, e.described_slot});
      if (!d) continue;
      IndexListing l{c, *d, {}};
      if (auto it = owners.find({c, e.described_slot}); it != owners.end()) {
        l.qids = it->second;
        std::sort(l.qids.begin(), l.qids.end());
      }
      e.listings.push_back(std::move(l));
    }
    index.push_back(std::move(e));
  }
  return index;
}

/// Variant of the above that only looks at the queries' requested items; the
/// `queries` argument selects which assignments are listed.
inline std::vector<IndexEntry> build_index_channel(const BroadcastSchedule& s, const std::vector<Query>& queries) {
  BroadcastSchedule filtered(s.channels(), s.length());
  for (int c = 1; c <= s.channels(); ++c)
    for (int t = 1; t <= s.length(); ++t)
      if (auto d = s.at({c, t})) filtered.place({c, t}, *d);
  for (const Query& q : queries)
    for (ItemId d : q.items)
      if (auto p = s.assignment(q.qid, d)) filtered.assign(q.qid, d, *p);
  return build_index_channel(filtered);
}

/// Grid, canonical assignment and index for a finished tree. L is the tree
/// height.
inline BroadcastSchedule schedule_mapping(const FpTreePlan& plan) {
  const FpStarTree& t = plan.tree;
  ChannelMap m = assign_channels(t);
  BroadcastSchedule s(t.channels(), t.height());
  for (const auto& level : t.levels())
    for (NodeId id : level)
      if (t.node(id).is_data()) s.place({m.channel_of[id], t.node(id).slot}, *t.node(id).item);
  for (const auto& row : plan.table.rows()) {
    const auto& nodes = plan.canonical.at(row.qid);
    for (std::size_t i = 0; i < row.items.size(); ++i) {
      NodeId n = nodes[i];
      if (!t.node(n).alive) throw InvariantError("canonical node was removed");
      s.assign(row.qid, row.items[i], {m.channel_of[n], t.node(n).slot});
    }
  }
  s.set_index_channel(build_index_channel(s));
  return s;
}

/// Whole pipeline: statistics, backbone, accelerating branches, mapping.
inline BroadcastSchedule fpbs_schedule(const std::vector<Query>& queries, int channel_count, OrderingRule rule) {
  return schedule_mapping(build_fp_tree(queries, channel_count, rule));
}

}  // namespace fpbs
