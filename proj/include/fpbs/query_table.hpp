#pragma once

// Request statistics: per-item access frequency, per-query item order by
// descending frequency, and the remaining-average-frequency bookkeeping that
// drives query selection while the tree is built.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "fpbs/model.hpp"

namespace fpbs {

enum class OrderingRule {
  RequestNumberFirst,  // most unhandled items, then frequency, then arrival
  FrequencyFirst,      // highest frequency, then most items, then arrival
};

inline std::string to_string(OrderingRule r) {
  return r == OrderingRule::RequestNumberFirst ? "rn" : "fre";
}

/// Selection key of one row. Frequency is kept as an exact sum/count pair so
/// that ties like 7/3 vs 7/3 compare equal.
struct SelectionKey {
  int count = 0;
  std::int64_t freq_sum = 0;
  std::int64_t arrival_seq = 0;
  QueryId qid = 0;
};

/// Strict "a is selected before b" under `rule`. qid is the last tie-break so
/// the order is total.
inline bool precedes(const SelectionKey& a, const SelectionKey& b, OrderingRule rule) {
  // sign(f_a - f_b) with f = sum / count; an exhausted row has f = 0 and
  // every live row has f >= 1.
  auto freq_cmp = [&]() -> int {
    if (a.count == 0 || b.count == 0) return (a.count != 0) - (b.count != 0);
    std::int64_t lhs = a.freq_sum * b.count;
    std::int64_t rhs = b.freq_sum * a.count;
    return (lhs > rhs) - (lhs < rhs);
  };
  int f = freq_cmp();
  if (rule == OrderingRule::RequestNumberFirst) {
    if (a.count != b.count) return a.count > b.count;
    if (f != 0) return f > 0;
  } else {
    if (f != 0) return f > 0;
    if (a.count != b.count) return a.count > b.count;
  }
  if (a.arrival_seq != b.arrival_seq) return a.arrival_seq < b.arrival_seq;
  return a.qid < b.qid;
}

struct QueryRow {
  QueryId qid = 0;
  std::int64_t arrival_seq = 0;
  std::vector<ItemId> items;  // descending frequency, stable w.r.t. request order
  std::vector<bool> handled;  // parallel to items
  int unhandled = 0;
  std::int64_t unhandled_freq_sum = 0;
  std::int64_t total_freq_sum = 0;

  std::vector<ItemId> unhandled_items() const {
    std::vector<ItemId> out;
    for (std::size_t i = 0; i < items.size(); ++i)
      if (!handled[i]) out.push_back(items[i]);
    return out;
  }
  std::vector<ItemId> handled_items() const {
    std::vector<ItemId> out;
    for (std::size_t i = 0; i < items.size(); ++i)
      if (handled[i]) out.push_back(items[i]);
    return out;
  }

  /// Remaining average frequency; 0 once every item is handled.
  double remaining_frequency() const {
    return unhandled == 0 ? 0.0 : static_cast<double>(unhandled_freq_sum) / unhandled;
  }
  double average_frequency() const {
    return items.empty() ? 0.0 : static_cast<double>(total_freq_sum) / static_cast<double>(items.size());
  }

  SelectionKey remaining_key() const { return {unhandled, unhandled_freq_sum, arrival_seq, qid}; }
  SelectionKey fresh_key() const {
    return {static_cast<int>(items.size()), total_freq_sum, arrival_seq, qid};
  }
};

class QueryTable {
 public:
  QueryTable() = default;

  const std::vector<QueryRow>& rows() const { return rows_; }
  const QueryRow& row(std::size_t i) const { return rows_[i]; }
  std::size_t size() const { return rows_.size(); }

  std::size_t row_index(QueryId qid) const {
    auto it = by_qid_.find(qid);
    if (it == by_qid_.end()) throw ValidationError("unknown query " + std::to_string(qid));
    return it->second;
  }
  const QueryRow& row_of(QueryId qid) const { return rows_[row_index(qid)]; }

  int frequency(ItemId d) const {
    auto it = item_freq_.find(d);
    return it == item_freq_.end() ? 0 : it->second;
  }
  const std::unordered_map<ItemId, int>& item_frequencies() const { return item_freq_; }

  /// Rows requesting d, ascending row index.
  const std::vector<std::size_t>& rows_requesting(ItemId d) const {
    static const std::vector<std::size_t> none;
    auto it = requesters_.find(d);
    return it == requesters_.end() ? none : it->second;
  }

  /// Marks d handled in every row that requests it; returns the touched rows.
  const std::vector<std::size_t>& mark_handled(ItemId d) {
    const auto& touched = rows_requesting(d);
    const int f = frequency(d);
    for (std::size_t r : touched) {
      QueryRow& row = rows_[r];
      for (std::size_t i = 0; i < row.items.size(); ++i) {
        if (row.items[i] == d && !row.handled[i]) {
          row.handled[i] = true;
          --row.unhandled;
          row.unhandled_freq_sum -= f;
        }
      }
    }
    return touched;
  }

  /// Back to the state straight after sorting: nothing handled.
  void reset() {
    for (auto& row : rows_) {
      std::fill(row.handled.begin(), row.handled.end(), false);
      row.unhandled = static_cast<int>(row.items.size());
      row.unhandled_freq_sum = row.total_freq_sum;
    }
  }

  /// Row indices ordered as the given rule would select them on a fresh table
  /// (request size and full average frequency).
  std::vector<std::size_t> fresh_order(OrderingRule rule) const {
    std::vector<std::size_t> idx(rows_.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return precedes(rows_[a].fresh_key(), rows_[b].fresh_key(), rule);
    });
    return idx;
  }

  std::vector<QueryId> sorted_by_size() const { return qids(fresh_order(OrderingRule::RequestNumberFirst)); }
  std::vector<QueryId> sorted_by_frequency() const { return qids(fresh_order(OrderingRule::FrequencyFirst)); }

  std::vector<Query> sorted_queries() const {
    std::vector<Query> out;
    out.reserve(rows_.size());
    for (const auto& r : rows_) out.push_back({r.qid, r.arrival_seq, r.items});
    return out;
  }

 private:
  friend QueryTable statistic_and_sort(const std::vector<Query>& queries);

  std::vector<QueryId> qids(const std::vector<std::size_t>& idx) const {
    std::vector<QueryId> out;
    for (auto i : idx) out.push_back(rows_[i].qid);
    return out;
  }

  std::vector<QueryRow> rows_;
  std::unordered_map<QueryId, std::size_t> by_qid_;
  std::unordered_map<ItemId, int> item_freq_;
  std::unordered_map<ItemId, std::vector<std::size_t>> requesters_;
};

/// Counts item frequencies over the batch and re-orders every query's items
/// by descending frequency (stable, so equal-frequency items keep their
/// request order).
inline QueryTable statistic_and_sort(const std::vector<Query>& queries) {
  if (queries.empty()) throw ValidationError("cannot schedule an empty batch");
  QueryTable t;
  t.rows_.reserve(queries.size());
  for (const Query& q : queries) {
    validate(q);
    if (!t.by_qid_.emplace(q.qid, t.rows_.size()).second)
      throw ValidationError("duplicate qid " + std::to_string(q.qid));
    for (ItemId d : q.items) ++t.item_freq_[d];
    t.rows_.push_back({q.qid, q.arrival_seq, q.items, {}, 0, 0, 0});
  }
  for (std::size_t r = 0; r < t.rows_.size(); ++r) {
    QueryRow& row = t.rows_[r];
    std::stable_sort(row.items.begin(), row.items.end(),
                     [&](ItemId a, ItemId b) { return t.item_freq_[a] > t.item_freq_[b]; });
    row.handled.assign(row.items.size(), false);
    row.unhandled = static_cast<int>(row.items.size());
    for (ItemId d : row.items) {
      row.total_freq_sum += t.item_freq_[d];
      t.requesters_[d].push_back(r);
    }
    row.unhandled_freq_sum = row.total_freq_sum;
  }
  return t;
}

/// Next query to handle among rows that still have unhandled items, or
/// nullopt once the table is exhausted.
inline std::optional<QueryId> select_next_query(const QueryTable& table, OrderingRule rule) {
  const QueryRow* best = nullptr;
  for (const auto& row : table.rows()) {
    if (row.unhandled == 0) continue;
    if (!best || precedes(row.remaining_key(), best->remaining_key(), rule)) best = &row;
  }
  if (!best) return std::nullopt;
  return best->qid;
}

}  // namespace fpbs
