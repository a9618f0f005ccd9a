#pragma once

// Tree construction: the backbone holds exactly one copy of every requested
// item, built Request-Number-First; accelerating branches then replicate
// items on extra paths for queries that can be served earlier, provided the
// replica never lands within switching distance of another copy.

#include <functional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "fpbs/fp_tree.hpp"
#include "fpbs/query_table.hpp"

namespace fpbs {

struct Backbone {
  FpStarTree tree;
  std::unordered_map<ItemId, NodeId> node_of;  // item -> its backbone node
  std::vector<QueryId> handling_order;
  int height = 0;
};

/// Called after each backbone query has been handled, with the table
/// already updated.
using BackboneObserver = std::function<void(QueryId, const FpStarTree&, const QueryTable&)>;

namespace detail {

/// Appends a data node for d under `parent`. A parent that already has
/// children gets a new branch through an empty node; further empty nodes are
/// chained while the target level has no free channel. Root children sit at
/// slot 1 directly unless that level is full. `force_gap` always opens the
/// branch with an empty node.
inline NodeId append_item(FpStarTree& t, NodeId parent, ItemId d, bool backbone, bool force_gap,
                          std::vector<NodeId>* created = nullptr) {
  auto note = [&](NodeId id) {
    if (created) created->push_back(id);
    return id;
  };
  const int next = t.node(parent).slot + 1;
  bool direct;
  if (t.is_root(parent))
    direct = !t.overloaded(next);
  else
    direct = !force_gap && !t.has_children(parent) && !t.overloaded(next);
  if (direct) return note(t.add_data(parent, d, backbone));
  NodeId tail = note(t.add_empty(parent, backbone));
  while (t.overloaded(t.node(tail).slot + 1)) tail = note(t.add_empty(tail, backbone));
  return note(t.add_data(tail, d, backbone));
}

}  // namespace detail

/// Builds the backbone. The first query (Request-Number-First on the fresh
/// table) forms the initial root path; every later item goes under the
/// deepest already-placed item of any query that also requests it. The table
/// is left with every item handled.
inline Backbone create_backbone(QueryTable& table, int channel_count, const BackboneObserver& observe = {}) {
  if (channel_count < 1) throw ConfigError("channel count must be at least 1");
  Backbone bb{FpStarTree(channel_count), {}, {}, 0};
  FpStarTree& t = bb.tree;
  const auto& rows = table.rows();

  // Deepest placed node per row.
  std::vector<NodeId> row_deepest(rows.size(), kNoNode);

  auto by_rule = [&](std::size_t a, std::size_t b) {
    return precedes(rows[a].remaining_key(), rows[b].remaining_key(), OrderingRule::RequestNumberFirst);
  };
  std::set<std::size_t, decltype(by_rule)> pending(by_rule);
  for (std::size_t r = 0; r < rows.size(); ++r)
    if (rows[r].unhandled > 0) pending.insert(r);

  auto place = [&](ItemId d, NodeId parent, bool force_gap) {
    NodeId n = detail::append_item(t, parent, d, true, force_gap);
    bb.node_of.emplace(d, n);
    const int slot = t.node(n).slot;
    for (std::size_t r : table.rows_requesting(d)) {
      NodeId& deepest = row_deepest[r];
      if (deepest != kNoNode && t.node(deepest).slot >= slot)
        throw InvariantError("backbone item not below every related item");
      deepest = n;
    }
    for (std::size_t r : table.rows_requesting(d)) pending.erase(r);
    table.mark_handled(d);
    for (std::size_t r : table.rows_requesting(d))
      if (rows[r].unhandled > 0) pending.insert(r);
    return n;
  };

  // Parent for d: the deepest placed item among all queries requesting d.
  // Several distinct nodes tied at that depth belong to different branches,
  // so d then opens its own branch (force_gap) to stay two slots clear of
  // all of them; the smallest item id is the parent.
  auto choose_parent = [&](ItemId d) -> std::pair<NodeId, bool> {
    NodeId best = kNoNode;
    bool tie = false;
    for (std::size_t r : table.rows_requesting(d)) {
      NodeId n = row_deepest[r];
      if (n == kNoNode) continue;
      if (best == kNoNode || t.node(n).slot > t.node(best).slot) {
        best = n;
        tie = false;
      } else if (t.node(n).slot == t.node(best).slot && n != best) {
        tie = true;
        if (*t.node(n).item < *t.node(best).item) best = n;
      }
    }
    if (best == kNoNode) return {kRoot, false};
    return {best, tie};
  };

  if (pending.empty()) return bb;
  {
    std::size_t first = *pending.begin();
    QueryId qid = rows[first].qid;
    NodeId cur = kRoot;
    for (ItemId d : rows[first].unhandled_items()) cur = place(d, cur, false);
    bb.handling_order.push_back(qid);
    if (observe) observe(qid, t, table);
  }
  while (!pending.empty()) {
    std::size_t r = *pending.begin();
    QueryId qid = rows[r].qid;
    for (ItemId d : rows[r].unhandled_items()) {
      auto [parent, tie] = choose_parent(d);
      place(d, parent, tie);
    }
    bb.handling_order.push_back(qid);
    if (observe) observe(qid, t, table);
  }
  bb.height = t.height();
  return bb;
}

struct RangeSearchResult {
  NodeId node = kNoNode;  // existing node on a hit, else the candidate
  bool hit = false;
  // The hit sits right after the previous path node, where a replica on
  // another channel could not be reached.
  bool adjacent = false;
  int window_lo = 0;
  int window_hi = 0;
  int empty_ancestors = 0;
};

/// Looks for another node with the candidate's item in levels
/// [slot - e + 1, slot + 1], e being the candidate's chain of empty
/// ancestors (and at least 1, so a same-level copy also counts). On a hit the
/// candidate and that chain are deleted and the existing node is returned.
inline RangeSearchResult range_search(FpStarTree& t, NodeId candidate) {
  const TreeNode& c = t.node(candidate);
  if (!c.is_data()) throw InvariantError("range search needs a data node");
  RangeSearchResult r;
  r.empty_ancestors = t.empty_ancestor_count(candidate);
  r.window_lo = c.slot - std::max(r.empty_ancestors, 1) + 1;
  r.window_hi = c.slot + 1;
  const int previous_slot = t.node(c.anchor).slot;
  const ItemId d = *c.item;
  auto hit = t.find_item_in_levels(d, r.window_lo, r.window_hi, candidate);
  if (!hit) {
    r.node = candidate;
    return r;
  }
  t.remove_with_empty_ancestors(candidate);
  r.node = *hit;
  r.hit = true;
  r.adjacent = t.node(*hit).slot <= previous_slot + 1;
  return r;
}

enum class AttemptOutcome {
  Reused,    // the path already continues with this item
  Inserted,  // new replica kept
  Aliased,   // replica rejected; the path jumps to the existing copy
  Aborted,   // the query's tentative path was deleted
};

inline std::string to_string(AttemptOutcome o) {
  switch (o) {
    case AttemptOutcome::Reused: return "reused";
    case AttemptOutcome::Inserted: return "inserted";
    case AttemptOutcome::Aliased: return "aliased";
    case AttemptOutcome::Aborted: return "aborted";
  }
  return "?";
}

struct BranchAttempt {
  QueryId qid = 0;
  ItemId item;
  AttemptOutcome outcome = AttemptOutcome::Reused;
  int candidate_slot = 0;  // 0 when no candidate was created
  int empty_ancestors = 0;
  int result_slot = 0;     // slot of the node the path continues from
};

/// Finished tree plus the per-query node each (query, item) pair retrieves.
struct FpTreePlan {
  FpStarTree tree;
  QueryTable table;
  OrderingRule rule = OrderingRule::FrequencyFirst;
  int backbone_height = 0;
  std::unordered_map<ItemId, NodeId> backbone_node;
  std::vector<QueryId> backbone_order;
  std::vector<QueryId> branch_order;
  // qid -> nodes parallel to the row's sorted items
  std::unordered_map<QueryId, std::vector<NodeId>> canonical;
  std::vector<BranchAttempt> trace;
};

/// Adds accelerating branches, processing queries in `rule` order on the
/// fresh table. Each query walks from the root; an item is reused when the
/// path already continues with it, otherwise a replica is tried and checked
/// by range_search. A path that would end below the backbone height, or that
/// would reach an existing copy right next to the previous path node, is
/// deleted and the query keeps its backbone copies.
inline void create_accelerating_branch(FpTreePlan& plan, OrderingRule rule) {
  FpStarTree& t = plan.tree;
  plan.rule = rule;
  const int limit = plan.backbone_height;
  for (std::size_t r : plan.table.fresh_order(rule)) {
    const QueryRow& row = plan.table.row(r);
    plan.branch_order.push_back(row.qid);
    NodeId cur = kRoot;
    std::vector<NodeId> path;
    std::vector<NodeId> created;
    std::vector<BranchAttempt> attempts;
    bool aborted = false;
    for (ItemId d : row.items) {
      BranchAttempt a{row.qid, d};
      if (auto existing = t.reachable_child(cur, d)) {
        cur = *existing;
        a.outcome = AttemptOutcome::Reused;
      } else {
        NodeId cand = detail::append_item(t, cur, d, false, false, &created);
        a.candidate_slot = t.node(cand).slot;
        auto rs = range_search(t, cand);
        a.empty_ancestors = rs.empty_ancestors;
        cur = rs.node;
        a.outcome = rs.hit ? AttemptOutcome::Aliased : AttemptOutcome::Inserted;
        if (rs.adjacent) aborted = true;
      }
      a.result_slot = t.node(cur).slot;
      if (t.node(cur).slot > limit) aborted = true;
      if (aborted) a.outcome = AttemptOutcome::Aborted;
      attempts.push_back(a);
      path.push_back(cur);
      if (aborted) break;
    }
    if (aborted) {
      for (auto it = created.rbegin(); it != created.rend(); ++it)
        if (t.node(*it).alive) t.remove(*it);
      std::vector<NodeId> bb;
      for (ItemId d : row.items) bb.push_back(plan.backbone_node.at(d));
      plan.canonical[row.qid] = std::move(bb);
    } else {
      plan.canonical[row.qid] = std::move(path);
    }
    plan.trace.insert(plan.trace.end(), attempts.begin(), attempts.end());
  }
}

/// Stages I to III over one batch.
inline FpTreePlan build_fp_tree(const std::vector<Query>& queries, int channel_count, OrderingRule rule) {
  if (channel_count < 1) throw ConfigError("channel count must be at least 1");
  QueryTable table = statistic_and_sort(queries);
  Backbone bb = create_backbone(table, channel_count);
  table.reset();
  FpTreePlan plan{std::move(bb.tree), std::move(table), rule, bb.height, std::move(bb.node_of),
                  std::move(bb.handling_order), {}, {}, {}};
  create_accelerating_branch(plan, rule);
  return plan;
}

}  // namespace fpbs
