#pragma once

// Core domain types for multi-channel on-demand broadcast scheduling:
// catalog items, queries, channel/slot positions, the broadcast grid with its
// index channel, and the conflict / access-time metrics shared by every
// other module.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace fpbs {

// ---------------------------------------------------------------------------
// Errors. Each maps onto one CLI exit code (see tools/fpbs_cli.cpp).

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input: bad files, missing assignments, empty
/// batches.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An internal invariant was breached (e.g. a level holds more data nodes
/// than there are channels). Always a bug.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// ---------------------------------------------------------------------------

/// Catalog item identifier, 1-based.
struct ItemId {
  std::int32_t value = 0;

  constexpr ItemId() = default;
  constexpr explicit ItemId(std::int32_t v) : value(v) {}
  constexpr auto operator<=>(const ItemId&) const = default;
};

inline std::string to_string(ItemId d) { return "d" + std::to_string(d.value); }
inline std::ostream& operator<<(std::ostream& os, ItemId d) { return os << 'd' << d.value; }

using QueryId = std::int32_t;

}  // namespace fpbs

template <>
struct std::hash<fpbs::ItemId> {
  std::size_t operator()(fpbs::ItemId d) const noexcept { return std::hash<std::int32_t>{}(d.value); }
};

namespace fpbs {

struct Query {
  QueryId qid = 0;
  std::int64_t arrival_seq = 0;
  std::vector<ItemId> items;
};

/// Drops repeated items while keeping first-occurrence order. Returns the
/// number of duplicates removed.
inline std::size_t normalize(Query& q) {
  std::unordered_set<ItemId> seen;
  std::vector<ItemId> kept;
  kept.reserve(q.items.size());
  for (ItemId d : q.items)
    if (seen.insert(d).second) kept.push_back(d);
  std::size_t removed = q.items.size() - kept.size();
  q.items = std::move(kept);
  return removed;
}

/// Throws ValidationError unless q is non-empty, duplicate-free, within the
/// catalog (when given) and within max_size (when given).
inline void validate(const Query& q, std::optional<int> catalog_size = std::nullopt,
                     std::optional<int> max_size = std::nullopt) {
  const std::string tag = "query " + std::to_string(q.qid);
  if (q.qid < 1) throw ValidationError(tag + ": qid must be positive");
  if (q.arrival_seq < 0) throw ValidationError(tag + ": negative arrival_seq");
  if (q.items.empty()) throw ValidationError(tag + ": no items requested");
  std::unordered_set<ItemId> seen;
  for (ItemId d : q.items) {
    if (d.value < 1 || (catalog_size && d.value > *catalog_size))
      throw ValidationError(tag + ": unknown item id " + std::to_string(d.value));
    if (!seen.insert(d).second) throw ValidationError(tag + ": duplicate item " + to_string(d));
  }
  if (max_size && static_cast<int>(q.items.size()) > *max_size)
    throw ValidationError(tag + ": requests more than " + std::to_string(*max_size) + " items");
}

/// A grid cell. Channels and slots are 1-based.
struct Position {
  int channel = 0;
  int slot = 0;
  constexpr auto operator<=>(const Position&) const = default;
};

/// Slot described by the index entry broadcast at `slot` in a cycle of
/// `length` slots: two slots ahead, wrapping. A wrap result of 0 maps to L.
constexpr int described_slot(int slot, int length) {
  int t = slot + 2;
  if (t > length) {
    t %= length;
    if (t == 0) t = length;
  }
  return t;
}

struct IndexListing {
  int channel = 0;
  ItemId item;
  std::vector<QueryId> qids;  // queries whose canonical copy is this cell
  bool operator==(const IndexListing&) const = default;
};

struct IndexEntry {
  int described_slot = 0;
  std::vector<IndexListing> listings;  // ascending channel
  bool operator==(const IndexEntry&) const = default;
};

/// |C| x L grid of optional items, the canonical (query, item) -> position
/// assignment and the index channel.
class BroadcastSchedule {
 public:
  BroadcastSchedule() = default;
  BroadcastSchedule(int channels, int length) : channels_(channels), length_(length) {
    if (channels < 1) throw ConfigError("schedule needs at least one channel");
    if (length < 0) throw ConfigError("negative cycle length");
    grid_.assign(static_cast<std::size_t>(channels) * static_cast<std::size_t>(length), std::nullopt);
  }

  int channels() const { return channels_; }
  int length() const { return length_; }

  bool contains(Position p) const {
    return p.channel >= 1 && p.channel <= channels_ && p.slot >= 1 && p.slot <= length_;
  }

  std::optional<ItemId> at(Position p) const {
    if (!contains(p)) return std::nullopt;
    return grid_[cell(p)];
  }

  void place(Position p, ItemId d) {
    if (!contains(p)) throw InvariantError("position outside grid");
    auto& c = grid_[cell(p)];
    if (c && *c != d) throw InvariantError("cell already holds " + to_string(*c));
    c = d;
  }

  /// Grows the cycle; new slots are empty.
  void extend(int new_length) {
    if (new_length <= length_) return;
    std::vector<std::optional<ItemId>> g(static_cast<std::size_t>(channels_) * static_cast<std::size_t>(new_length));
    for (int c = 1; c <= channels_; ++c)
      for (int s = 1; s <= length_; ++s) g[(c - 1) * static_cast<std::size_t>(new_length) + (s - 1)] = at({c, s});
    grid_ = std::move(g);
    length_ = new_length;
  }

  void assign(QueryId q, ItemId d, Position p) { assignment_[{q, d}] = p; }

  std::optional<Position> assignment(QueryId q, ItemId d) const {
    auto it = assignment_.find({q, d});
    if (it == assignment_.end()) return std::nullopt;
    return it->second;
  }

  const std::map<std::pair<QueryId, ItemId>, Position>& assignments() const { return assignment_; }

  const std::vector<IndexEntry>& index_channel() const { return index_; }
  void set_index_channel(std::vector<IndexEntry> index) { index_ = std::move(index); }

  /// Number of non-empty cells.
  int occupied_cells() const {
    return static_cast<int>(std::count_if(grid_.begin(), grid_.end(), [](const auto& c) { return c.has_value(); }));
  }

  bool operator==(const BroadcastSchedule&) const = default;

 private:
  std::size_t cell(Position p) const {
    return static_cast<std::size_t>(p.channel - 1) * static_cast<std::size_t>(length_) + static_cast<std::size_t>(p.slot - 1);
  }

  int channels_ = 0;
  int length_ = 0;
  std::vector<std::optional<ItemId>> grid_;  // channel-major
  std::map<std::pair<QueryId, ItemId>, Position> assignment_;
  std::vector<IndexEntry> index_;
};

/// One download: absolute slot (cycles repeat back to back), channel, item.
struct AccessStep {
  std::int64_t slot = 0;
  int channel = 0;
  ItemId item;
  bool operator==(const AccessStep&) const = default;
};

struct AccessPlan {
  std::vector<AccessStep> steps;
  std::int64_t tune_in_slot = 0;
};

/// True iff the plan obeys the switching rules and downloads exactly the
/// query's items.
inline bool is_feasible(const AccessPlan& plan, const Query& q) {
  for (std::size_t i = 1; i < plan.steps.size(); ++i) {
    const auto& a = plan.steps[i - 1];
    const auto& b = plan.steps[i];
    std::int64_t need = a.channel == b.channel ? 1 : 2;
    if (b.slot - a.slot < need) return false;
  }
  std::vector<ItemId> got;
  for (const auto& s : plan.steps) got.push_back(s.item);
  std::vector<ItemId> want = q.items;
  std::sort(got.begin(), got.end());
  std::sort(want.begin(), want.end());
  return got == want;
}

// ---------------------------------------------------------------------------
// Conflict verification and span metrics.

struct Violation {
  QueryId qid = 0;
  ItemId first;
  ItemId second;
  Position first_pos;
  Position second_pos;
  int gap() const { return std::abs(first_pos.slot - second_pos.slot); }
  bool operator==(const Violation&) const = default;
};

struct ConflictReport {
  std::vector<Violation> violations;
  bool clean() const { return violations.empty(); }
};

namespace detail {

inline std::vector<std::pair<Position, ItemId>> positions_of(const BroadcastSchedule& s, const Query& q) {
  std::vector<std::pair<Position, ItemId>> out;
  out.reserve(q.items.size());
  for (ItemId d : q.items) {
    auto p = s.assignment(q.qid, d);
    if (!p)
      throw ValidationError("no assignment for (q" + std::to_string(q.qid) + ", " + to_string(d) + ")");
    out.emplace_back(*p, d);
  }
  return out;
}

}  // namespace detail

/// Lists every pair of one query's items that sit on different channels in
/// the same or adjacent slots.
inline ConflictReport check_conflict_free(const BroadcastSchedule& schedule, const std::vector<Query>& queries) {
  ConflictReport report;
  for (const Query& q : queries) {
    auto pos = detail::positions_of(schedule, q);
    std::sort(pos.begin(), pos.end(),
              [](const auto& a, const auto& b) { return std::pair(a.first.slot, a.second) < std::pair(b.first.slot, b.second); });
    for (std::size_t i = 0; i < pos.size(); ++i) {
      for (std::size_t j = i + 1; j < pos.size() && pos[j].first.slot - pos[i].first.slot <= 1; ++j) {
        if (pos[i].first.channel != pos[j].first.channel)
          report.violations.push_back({q.qid, pos[i].second, pos[j].second, pos[i].first, pos[j].first});
      }
    }
  }
  return report;
}

/// max assigned slot - min assigned slot over the query's items.
inline int span_access_time(const BroadcastSchedule& schedule, const Query& q) {
  auto pos = detail::positions_of(schedule, q);
  auto [lo, hi] = std::minmax_element(pos.begin(), pos.end(),
                                      [](const auto& a, const auto& b) { return a.first.slot < b.first.slot; });
  return hi->first.slot - lo->first.slot;
}

/// Exact rational, always reduced with a positive denominator.
struct Ratio {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Ratio() = default;
  Ratio(std::int64_t n, std::int64_t d) : num(n), den(d) {
    if (den == 0) throw std::invalid_argument("zero denominator");
    if (den < 0) num = -num, den = -den;
    std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) num /= g, den /= g;
  }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Ratio&) const = default;
  std::strong_ordering operator<=>(const Ratio& o) const { return num * o.den <=> o.num * den; }
};

inline Ratio average_span(const BroadcastSchedule& schedule, const std::vector<Query>& queries) {
  if (queries.empty()) throw ValidationError("average span of an empty query set");
  std::int64_t total = 0;
  for (const Query& q : queries) total += span_access_time(schedule, q);
  return Ratio(total, static_cast<std::int64_t>(queries.size()));
}

/// Items of each slot in channel order.
inline std::vector<std::vector<ItemId>> slot_contents(const BroadcastSchedule& s) {
  std::vector<std::vector<ItemId>> out(static_cast<std::size_t>(s.length()));
  for (int t = 1; t <= s.length(); ++t)
    for (int c = 1; c <= s.channels(); ++c)
      if (auto d = s.at({c, t})) out[t - 1].push_back(*d);
  return out;
}

}  // namespace fpbs
