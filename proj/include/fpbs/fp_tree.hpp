#pragma once

// Frequent-pattern tree whose depth is a broadcast slot. Data nodes carry
// one item; empty nodes carry none and only push their subtree one slot
// later so a client has time to switch channels. Nodes live in an arena and
// are addressed by index; removed nodes stay in the arena as tombstones.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "fpbs/model.hpp"

namespace fpbs {

using NodeId = std::int32_t;
inline constexpr NodeId kRoot = 0;
inline constexpr NodeId kNoNode = -1;

struct TreeNode {
  NodeId parent = kNoNode;
  std::vector<NodeId> children;  // insertion order
  std::optional<ItemId> item;    // nullopt for the root and for empty nodes
  int slot = 0;                  // depth; the root is 0
  bool backbone = false;
  bool alive = true;
  // Nearest ancestor that is a data node or the root, skipping empty nodes.
  NodeId anchor = kNoNode;

  bool is_data() const { return item.has_value(); }
};

class FpStarTree {
 public:
  explicit FpStarTree(int channels) : channels_(channels) {
    if (channels < 1) throw ConfigError("channel count must be at least 1");
    nodes_.push_back(TreeNode{});
    level_data_.assign(1, 0);
    level_nodes_.assign(1, 1);
  }

  int channels() const { return channels_; }
  const TreeNode& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  std::size_t arena_size() const { return nodes_.size(); }

  bool is_root(NodeId id) const { return id == kRoot; }
  bool is_empty_node(NodeId id) const { return id != kRoot && !node(id).is_data(); }

  /// Data nodes at `level`.
  int data_count(int level) const {
    return level >= 0 && level < static_cast<int>(level_data_.size()) ? level_data_[level] : 0;
  }
  bool overloaded(int level) const { return data_count(level) >= channels_; }

  /// Deepest level holding a live node.
  int height() const {
    for (int l = static_cast<int>(level_nodes_.size()) - 1; l > 0; --l)
      if (level_nodes_[l] > 0) return l;
    return 0;
  }

  bool has_children(NodeId id) const { return !node(id).children.empty(); }

  NodeId add_data(NodeId parent, ItemId d, bool backbone) {
    NodeId id = add_node(parent, d, backbone);
    auto key = reach_key(nodes_[id].anchor, d);
    reach_.try_emplace(key, id);
    by_item_[d].emplace(nodes_[id].slot, id);
    ++level_data_[nodes_[id].slot];
    return id;
  }

  NodeId add_empty(NodeId parent, bool backbone) { return add_node(parent, std::nullopt, backbone); }

  /// Removes a leaf.
  void remove(NodeId id) {
    TreeNode& n = nodes_.at(static_cast<std::size_t>(id));
    if (id == kRoot || !n.alive) throw InvariantError("cannot remove root or a removed node");
    if (!n.children.empty()) throw InvariantError("only leaves can be removed");
    auto& siblings = nodes_[n.parent].children;
    siblings.erase(std::find(siblings.begin(), siblings.end(), id));
    --level_nodes_[n.slot];
    if (n.item) {
      --level_data_[n.slot];
      auto key = reach_key(n.anchor, *n.item);
      if (auto it = reach_.find(key); it != reach_.end() && it->second == id) reach_.erase(it);
      auto& slots = by_item_[*n.item];
      for (auto it = slots.lower_bound(n.slot); it != slots.end() && it->first == n.slot; ++it) {
        if (it->second == id) {
          slots.erase(it);
          break;
        }
      }
    }
    n.alive = false;
  }

  /// Removes `id` together with the unbroken chain of empty ancestors right
  /// above it (each must become a leaf in turn).
  void remove_with_empty_ancestors(NodeId id) {
    NodeId cur = id;
    while (cur != kRoot) {
      NodeId up = node(cur).parent;
      remove(cur);
      if (!is_empty_node(up) || has_children(up)) break;
      cur = up;
    }
  }

  /// Data node holding d that is a child of `parent`, possibly behind a
  /// chain of empty nodes.
  std::optional<NodeId> reachable_child(NodeId parent, ItemId d) const {
    auto it = reach_.find(reach_key(parent, d));
    if (it == reach_.end()) return std::nullopt;
    return it->second;
  }

  /// Length of the unbroken chain of empty ancestors right above `id`.
  int empty_ancestor_count(NodeId id) const {
    int n = 0;
    for (NodeId p = node(id).parent; p != kNoNode && is_empty_node(p); p = node(p).parent) ++n;
    return n;
  }

  /// A live data node holding d at a level in [lo, hi], other than `exclude`;
  /// the lowest level wins, then the smallest node id.
  std::optional<NodeId> find_item_in_levels(ItemId d, int lo, int hi, NodeId exclude = kNoNode) const {
    auto it = by_item_.find(d);
    if (it == by_item_.end()) return std::nullopt;
    std::optional<NodeId> best;
    for (auto s = it->second.lower_bound(lo); s != it->second.end() && s->first <= hi; ++s) {
      if (s->second == exclude) continue;
      if (!best || node(*best).slot > s->first || (node(*best).slot == s->first && s->second < *best)) best = s->second;
    }
    return best;
  }

  /// Live data nodes holding d, ascending slot.
  std::vector<NodeId> nodes_with_item(ItemId d) const {
    std::vector<NodeId> out;
    if (auto it = by_item_.find(d); it != by_item_.end())
      for (const auto& [slot, id] : it->second) out.push_back(id);
    return out;
  }

  /// Live nodes level by level (level 1 first), each level in BFS order.
  std::vector<std::vector<NodeId>> levels() const {
    std::vector<std::vector<NodeId>> out;
    std::vector<NodeId> frontier = node(kRoot).children;
    while (!frontier.empty()) {
      out.push_back(frontier);
      std::vector<NodeId> next;
      for (NodeId id : frontier)
        for (NodeId c : node(id).children) next.push_back(c);
      frontier = std::move(next);
    }
    return out;
  }

  std::size_t live_data_nodes() const {
    std::size_t n = 0;
    for (int c : level_data_) n += static_cast<std::size_t>(c);
    return n;
  }

 private:
  static std::uint64_t reach_key(NodeId anchor, ItemId d) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(anchor)) << 32) |
           static_cast<std::uint32_t>(d.value);
  }

  NodeId add_node(NodeId parent, std::optional<ItemId> d, bool backbone) {
    TreeNode& p = nodes_.at(static_cast<std::size_t>(parent));
    if (!p.alive) throw InvariantError("parent was removed");
    if (parent != kRoot && !p.is_data() && !p.children.empty())
      throw InvariantError("an empty node takes at most one child");
    TreeNode n;
    n.parent = parent;
    n.item = d;
    n.slot = p.slot + 1;
    n.backbone = backbone;
    n.anchor = (parent == kRoot || p.is_data()) ? parent : p.anchor;
    NodeId id = static_cast<NodeId>(nodes_.size());
    nodes_.push_back(std::move(n));
    nodes_[parent].children.push_back(id);
    int slot = nodes_[id].slot;
    if (slot >= static_cast<int>(level_nodes_.size())) {
      level_nodes_.resize(slot + 1, 0);
      level_data_.resize(slot + 1, 0);
    }
    ++level_nodes_[slot];
    return id;
  }

  int channels_;
  std::vector<TreeNode> nodes_;
  std::vector<int> level_data_;
  std::vector<int> level_nodes_;
  std::unordered_map<std::uint64_t, NodeId> reach_;
  std::unordered_map<ItemId, std::multimap<int, NodeId>> by_item_;
};

// ---------------------------------------------------------------------------
// Debug text. Tokens are "slot:dN" for backbone data nodes, "slot:dN'" for
// accelerating-branch data nodes and "slot:EMPTY" for empty nodes.

inline std::string node_token(const FpStarTree& t, NodeId id) {
  const TreeNode& n = t.node(id);
  std::string s = std::to_string(n.slot) + ":";
  if (!n.item) return s + "EMPTY";
  return s + to_string(*n.item) + (n.backbone ? "" : "'");
}

namespace detail {

inline void write_subtree(const FpStarTree& t, NodeId id, int depth, bool sort_siblings, std::string& out);

inline std::string subtree_text(const FpStarTree& t, NodeId id, int depth, bool sort_siblings) {
  std::string s;
  write_subtree(t, id, depth, sort_siblings, s);
  return s;
}

inline void write_subtree(const FpStarTree& t, NodeId id, int depth, bool sort_siblings, std::string& out) {
  if (id != kRoot) {
    out.append(static_cast<std::size_t>(2 * (depth - 1)), ' ');
    out += node_token(t, id);
    out += '\n';
  }
  std::vector<std::string> parts;
  for (NodeId c : t.node(id).children) parts.push_back(subtree_text(t, c, depth + 1, sort_siblings));
  if (sort_siblings) std::sort(parts.begin(), parts.end());
  for (auto& p : parts) out += p;
}

}  // namespace detail

/// Indented pre-order dump, children in insertion order. Stable across runs.
inline std::string serialize_tree(const FpStarTree& t) {
  std::string out;
  detail::write_subtree(t, kRoot, 0, false, out);
  return out;
}

/// Same dump with siblings sorted, for comparisons that ignore sibling order.
inline std::string canonical_tree(const FpStarTree& t) {
  std::string out;
  detail::write_subtree(t, kRoot, 0, true, out);
  return out;
}

/// One line per level: "slot: token token ...", BFS order.
inline std::string serialize_levels(const FpStarTree& t) {
  std::ostringstream os;
  auto lv = t.levels();
  for (std::size_t i = 0; i < lv.size(); ++i) {
    os << (i + 1) << ':';
    for (NodeId id : lv[i]) os << ' ' << node_token(t, id);
    os << '\n';
  }
  return os.str();
}

}  // namespace fpbs
