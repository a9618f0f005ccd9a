#pragma once

// Reference engines for checking the scheduler and the client: an exact
// retrieval optimizer, an exhaustive scheduler for tiny instances and a flat
// popularity layout used as the comparison baseline.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "fpbs/mapper.hpp"
#include "fpbs/model.hpp"
#include "fpbs/simulator.hpp"

namespace fpbs {

// ---------------------------------------------------------------------------
// Optimal retrieval.

struct OptimalRetrieval {
  std::int64_t completion = 0;
  std::int64_t first_slot = 0;
  std::int64_t latency = 0;  // completion - tune_in
  int switches = 0;
  std::vector<AccessStep> steps;
};

/// Fewest-slots retrieval of q starting at `tune_in` with no index overhead:
/// the first download may be any occurrence at or after tune_in. Among
/// plans with the earliest completion, the fewest switches wins.
inline OptimalRetrieval dp_optimal_retrieval(const BroadcastSchedule& s, const Query& q, std::int64_t tune_in) {
  const int k = static_cast<int>(q.items.size());
  if (k == 0) throw ValidationError("query " + std::to_string(q.qid) + " requests nothing");
  if (k > 16) throw ConfigError("optimal retrieval supports at most 16 items per query");
  OccurrenceTable occ(s);
  for (ItemId d : q.items)
    if (!occ.contains(d)) throw ValidationError(to_string(d) + " is not broadcast");

  const int C = s.channels();
  const std::int64_t L = s.length();
  const std::int64_t horizon = 4 * L + 2;
  const std::uint32_t full = (1u << k) - 1;
  const std::size_t subsets = std::size_t{1} << k;
  constexpr int kInf = std::numeric_limits<int>::max();

  // State: just downloaded at tune_in + dt on channel c holding subset S.
  auto index = [&](std::int64_t dt, int c, std::uint32_t S) {
    return (static_cast<std::size_t>(dt) * static_cast<std::size_t>(C) + static_cast<std::size_t>(c - 1)) * subsets + S;
  };
  std::vector<int> best(static_cast<std::size_t>(horizon) * static_cast<std::size_t>(C) * subsets, kInf);
  std::vector<std::int64_t> from(best.size(), -1);

  auto relax = [&](std::int64_t t, int c, std::uint32_t S, int sw, std::int64_t prev) {
    std::int64_t dt = t - tune_in;
    if (dt >= horizon) return;
    std::size_t i = index(dt, c, S);
    if (sw < best[i]) best[i] = sw, from[i] = prev;
  };
  for (int j = 0; j < k; ++j)
    for (int c : occ.channels_of(q.items[j])) relax(*occ.next(q.items[j], c, tune_in), c, 1u << j, 0, -1);

  for (std::int64_t dt = 0; dt < horizon; ++dt) {
    bool done = false;
    for (int c = 1; c <= C; ++c)
      if (best[index(dt, c, full)] != kInf) done = true;
    if (done) {
      int pick = 0, sw = kInf;
      for (int c = 1; c <= C; ++c)
        if (best[index(dt, c, full)] < sw) sw = best[index(dt, c, full)], pick = c;
      OptimalRetrieval r;
      r.completion = tune_in + dt;
      r.latency = dt;
      r.switches = sw;
      std::int64_t cur = static_cast<std::int64_t>(index(dt, pick, full));
      while (cur >= 0) {
        std::size_t u = static_cast<std::size_t>(cur);
        std::uint32_t S = static_cast<std::uint32_t>(u % subsets);
        std::size_t rest = u / subsets;
        int c = static_cast<int>(rest % static_cast<std::size_t>(C)) + 1;
        std::int64_t t = tune_in + static_cast<std::int64_t>(rest / static_cast<std::size_t>(C));
        std::int64_t prev = from[u];
        std::uint32_t prev_S = prev >= 0 ? static_cast<std::uint32_t>(static_cast<std::size_t>(prev) % subsets) : 0;
        int j = std::countr_zero(S & ~prev_S);
        r.steps.push_back({t, c, q.items[j]});
        cur = prev;
      }
      std::reverse(r.steps.begin(), r.steps.end());
      r.first_slot = r.steps.front().slot;
      return r;
    }
    for (int c = 1; c <= C; ++c)
      for (std::uint32_t S = 1; S < full; ++S) {
        std::size_t i = index(dt, c, S);
        if (best[i] == kInf) continue;
        const std::int64_t t = tune_in + dt;
        for (int j = 0; j < k; ++j) {
          if (S & (1u << j)) continue;
          for (int c2 : occ.channels_of(q.items[j])) {
            std::int64_t at = *occ.next(q.items[j], c2, t + (c2 == c ? 1 : 2));
            relax(at, c2, S | (1u << j), best[i] + (c2 != c), static_cast<std::int64_t>(i));
          }
        }
      }
  }
  throw InvariantError("optimal retrieval found no plan within the horizon");
}

// ---------------------------------------------------------------------------
// Exhaustive scheduling on tiny instances.

struct TinyInstance {
  std::vector<Query> queries;
  int channels = 1;
  int max_length = 1;
  int copy_cap = 2;  // copies per item

  static constexpr int kMaxCatalog = 6;
  static constexpr int kMaxQueries = 4;
  static constexpr int kMaxChannels = 3;
  static constexpr int kMaxLength = 8;
  static constexpr int kMaxQuerySize = 3;

  void validate() const {
    if (queries.empty() || static_cast<int>(queries.size()) > kMaxQueries) throw ConfigError("tiny instance: 1 to 4 queries");
    if (channels < 1 || channels > kMaxChannels) throw ConfigError("tiny instance: 1 to 3 channels");
    if (max_length < 1 || max_length > kMaxLength) throw ConfigError("tiny instance: cycle length 1 to 8");
    if (copy_cap < 1) throw ConfigError("tiny instance: copy cap must be positive");
    for (const Query& q : queries) {
      fpbs::validate(q, kMaxCatalog, kMaxQuerySize);
    }
  }
};

struct BruteForceResult {
  bool feasible = false;  // false: nothing conflict-free fits in max_length
  BroadcastSchedule schedule;
  std::int64_t total_span = 0;
  Ratio average_span;
  bool saturated = false;  // some item used every allowed copy
  std::int64_t nodes = 0;
};

/// Minimum average span over every conflict-free layout within the cap:
/// each (query, item) either reuses an existing copy of the item or places a
/// new copy in a free cell. Ties go to the shorter cycle, then to the first
/// layout found in search order.
inline BruteForceResult brute_force_schedule(const TinyInstance& inst) {
  inst.validate();
  const int C = inst.channels, Lmax = inst.max_length;
  struct Pair {
    std::size_t query;
    ItemId item;
  };
  std::vector<Pair> pairs;
  for (std::size_t qi = 0; qi < inst.queries.size(); ++qi)
    for (ItemId d : inst.queries[qi].items) pairs.push_back({qi, d});

  std::vector<std::optional<ItemId>> grid(static_cast<std::size_t>(C * Lmax));
  auto cell = [&](int c, int t) -> std::optional<ItemId>& { return grid[static_cast<std::size_t>((c - 1) * Lmax + (t - 1))]; };
  std::map<ItemId, int> copies;
  std::vector<std::vector<Position>> placed(inst.queries.size());
  std::vector<std::vector<Position>> best_assign;
  std::vector<std::optional<ItemId>> best_grid;
  std::int64_t best_total = std::numeric_limits<std::int64_t>::max();
  int max_channel = 0;
  BruteForceResult out;

  auto span_of = [](const std::vector<Position>& ps) {
    if (ps.empty()) return 0;
    auto [lo, hi] = std::minmax_element(ps.begin(), ps.end(), [](auto a, auto b) { return a.slot < b.slot; });
    return hi->slot - lo->slot;
  };
  auto bound = [&]() {
    std::int64_t b = 0;
    for (std::size_t qi = 0; qi < inst.queries.size(); ++qi)
      b += std::max<std::int64_t>(span_of(placed[qi]), static_cast<std::int64_t>(inst.queries[qi].items.size()) - 1);
    return b;
  };
  auto clean = [&](std::size_t qi, Position p) {
    for (Position o : placed[qi])
      if (o.channel != p.channel && std::abs(o.slot - p.slot) <= 1) return false;
    return true;
  };

  // Ties on span go to the shorter cycle.
  int best_length = std::numeric_limits<int>::max();
  auto used_length = [&]() {
    int len = 0;
    for (int c = 1; c <= C; ++c)
      for (int t = 1; t <= Lmax; ++t)
        if (cell(c, t)) len = std::max(len, t);
    return len;
  };
  auto dfs = [&](auto&& self, std::size_t k) -> void {
    ++out.nodes;
    const std::int64_t b = bound();
    if (b > best_total || (b == best_total && used_length() >= best_length)) return;
    if (k == pairs.size()) {
      best_total = b;
      best_length = used_length();
      best_assign = placed;
      best_grid = grid;
      return;
    }
    const Pair& pr = pairs[k];
    auto take = [&](Position p) {
      placed[pr.query].push_back(p);
      self(self, k + 1);
      placed[pr.query].pop_back();
    };
    // Reuse an existing copy.
    for (int c = 1; c <= C; ++c)
      for (int t = 1; t <= Lmax; ++t)
        if (cell(c, t) == pr.item && clean(pr.query, {c, t})) take({c, t});
    // New copy.
    if (copies[pr.item] >= inst.copy_cap) return;
    for (int c = 1; c <= std::min(C, max_channel + 1); ++c)
      for (int t = 1; t <= Lmax; ++t) {
        if (cell(c, t) || !clean(pr.query, {c, t})) continue;
        cell(c, t) = pr.item;
        ++copies[pr.item];
        int saved = max_channel;
        max_channel = std::max(max_channel, c);
        take({c, t});
        max_channel = saved;
        --copies[pr.item];
        cell(c, t).reset();
      }
  };
  dfs(dfs, 0);

  if (best_assign.empty()) return out;
  out.feasible = true;
  out.total_span = best_total;
  out.average_span = Ratio(best_total, static_cast<std::int64_t>(inst.queries.size()));
  int length = 0;
  std::map<ItemId, int> used;
  for (int c = 1; c <= C; ++c)
    for (int t = 1; t <= Lmax; ++t)
      if (best_grid[static_cast<std::size_t>((c - 1) * Lmax + (t - 1))]) length = std::max(length, t);
  // Cells no query reads are dropped.
  BroadcastSchedule s(C, length);
  for (std::size_t qi = 0; qi < inst.queries.size(); ++qi)
    for (std::size_t j = 0; j < inst.queries[qi].items.size(); ++j) {
      Position p = best_assign[qi][j];
      s.place(p, inst.queries[qi].items[j]);
      s.assign(inst.queries[qi].qid, inst.queries[qi].items[j], p);
    }
  for (int c = 1; c <= C; ++c)
    for (int t = 1; t <= length; ++t)
      if (auto d = s.at({c, t})) ++used[*d];
  for (const auto& [d, n] : used) out.saturated |= n >= inst.copy_cap;
  s.set_index_channel(build_index_channel(s));
  out.schedule = std::move(s);
  return out;
}

// ---------------------------------------------------------------------------
// Flat popularity baseline.

/// Every requested item once, most requested first (ties by id), filled slot
/// by slot across channels. An item that would sit on another channel within
/// one slot of an item it shares a query with moves one slot later on the
/// same channel until it is clear.
inline BroadcastSchedule flat_baseline_schedule(const std::vector<Query>& queries, int channel_count) {
  if (channel_count < 1) throw ConfigError("channel count must be at least 1");
  if (queries.empty()) throw ValidationError("empty request batch");
  for (const Query& q : queries) validate(q);
  std::map<ItemId, int> freq;
  std::map<ItemId, std::vector<std::size_t>> requesters;
  for (std::size_t i = 0; i < queries.size(); ++i)
    for (ItemId d : queries[i].items) ++freq[d], requesters[d].push_back(i);
  std::vector<ItemId> order;
  for (const auto& [d, f] : freq) order.push_back(d);
  std::stable_sort(order.begin(), order.end(), [&](ItemId a, ItemId b) { return freq[a] > freq[b]; });

  const int C = channel_count;
  std::map<Position, ItemId> cells;
  std::map<ItemId, Position> where;
  auto clean = [&](ItemId d, Position p) {
    for (std::size_t qi : requesters[d])
      for (ItemId e : queries[qi].items) {
        auto it = where.find(e);
        if (it == where.end()) continue;
        if (it->second.channel != p.channel && std::abs(it->second.slot - p.slot) <= 1) return false;
      }
    return true;
  };
  std::int64_t fill = 0;  // slot-major cell number
  auto at_fill = [&] { return Position{static_cast<int>(fill % C) + 1, static_cast<int>(fill / C) + 1}; };
  int length = 0;
  for (ItemId d : order) {
    while (cells.count(at_fill())) ++fill;
    Position p = at_fill();
    while (cells.count(p) || !clean(d, p)) ++p.slot;
    cells[p] = d;
    where[d] = p;
    length = std::max(length, p.slot);
  }
  BroadcastSchedule s(C, length);
  for (const auto& [p, d] : cells) s.place(p, d);
  for (const Query& q : queries)
    for (ItemId d : q.items) s.assign(q.qid, d, where[d]);
  s.set_index_channel(build_index_channel(s));
  return s;
}

}  // namespace fpbs
