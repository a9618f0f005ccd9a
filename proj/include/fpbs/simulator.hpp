#pragma once

// Client-side access on a repeating schedule. A client listens to the index
// channel from its tune-in slot, jumps to the first announced cell holding a
// needed item, then keeps taking the earliest reachable copy of any item it
// still needs. Switching channels costs one slot.
//
// Times are absolute slots starting at 1; absolute slot u shows cycle slot
// ((u - 1) mod L) + 1, and the index entry read at u describes u + 2.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "fpbs/mapper.hpp"
#include "fpbs/model.hpp"

namespace fpbs {

/// Where a query's items sit in the grid, per item and channel.
class OccurrenceTable {
 public:
  explicit OccurrenceTable(const BroadcastSchedule& s) : length_(s.length()) {
    for (int c = 1; c <= s.channels(); ++c)
      for (int t = 1; t <= s.length(); ++t)
        if (auto d = s.at({c, t})) {
          auto& per = items_[*d];
          auto it = std::find_if(per.begin(), per.end(), [&](const auto& e) { return e.channel == c; });
          if (it == per.end()) {
            per.push_back({c, {}});
            it = std::prev(per.end());
          }
          it->slots.push_back(t);
        }
    for (auto& [d, per] : items_)
      std::sort(per.begin(), per.end(), [](const auto& a, const auto& b) { return a.channel < b.channel; });
  }

  int length() const { return length_; }
  bool contains(ItemId d) const { return items_.count(d) > 0; }

  /// Channels carrying d, ascending.
  std::vector<int> channels_of(ItemId d) const {
    std::vector<int> out;
    if (auto it = items_.find(d); it != items_.end())
      for (const auto& e : it->second) out.push_back(e.channel);
    return out;
  }

  /// Earliest absolute slot >= from showing cycle slot `slot`.
  std::optional<std::int64_t> next_at(int slot, std::int64_t from) const {
    if (slot < 1 || slot > length_) return std::nullopt;
    const std::int64_t L = length_;
    std::int64_t base = ((from - 1) / L) * L;
    return base + slot >= from ? base + slot : base + L + slot;
  }

  /// Earliest absolute slot >= from at which channel c shows d, if ever.
  std::optional<std::int64_t> next(ItemId d, int c, std::int64_t from) const {
    auto it = items_.find(d);
    if (it == items_.end()) return std::nullopt;
    for (const auto& e : it->second) {
      if (e.channel != c) continue;
      const std::int64_t L = length_;
      std::int64_t base = ((from - 1) / L) * L;  // absolute slot before this cycle's slot 1
      int cycle_slot = static_cast<int>(from - base);
      auto s = std::lower_bound(e.slots.begin(), e.slots.end(), cycle_slot);
      if (s != e.slots.end()) return base + *s;
      return base + L + e.slots.front();
    }
    return std::nullopt;
  }

 private:
  struct PerChannel {
    int channel;
    std::vector<int> slots;
  };
  int length_;
  std::unordered_map<ItemId, std::vector<PerChannel>> items_;
};

/// Client state during retrieval. Channel 0 stands for the index channel.
struct ClientState {
  int current_channel = 0;
  std::int64_t current_slot = 0;
  std::vector<ItemId> needed;
  std::vector<AccessStep> downloaded;
};

/// One simulated retrieval.
struct AccessResult {
  AccessPlan plan;
  std::int64_t first_slot = 0;   // first download
  std::int64_t completion = 0;   // last download
  std::int64_t latency = 0;      // completion - tune_in
  std::int64_t t_wait = 0;       // first_slot - tune_in
  int switches = 0;              // data-channel changes
  std::int64_t skips = 0;        // idle on-channel slots between downloads
};

/// A cell a client may start from and the retrieval that follows.
struct CatchPoint {
  AccessStep cell;
  std::vector<AccessStep> plan;
};

class AccessSimulator {
 public:
  explicit AccessSimulator(const BroadcastSchedule& s) : schedule_(&s), occ_(s) {}

  const BroadcastSchedule& schedule() const { return *schedule_; }
  const OccurrenceTable& occurrences() const { return occ_; }

  /// Reads q's canonical copies in cyclic slot order starting with the copy
  /// at `first`. Empty when q has no canonical copy there.
  std::vector<AccessStep> canonical_from(const Query& q, const AccessStep& first) const {
    const std::int64_t L = schedule_->length();
    std::vector<std::pair<std::int64_t, AccessStep>> order;  // (cyclic offset, cell)
    bool found = false;
    const int first_slot = static_cast<int>((first.slot - 1) % L) + 1;
    for (ItemId d : q.items) {
      auto p = schedule_->assignment(q.qid, d);
      if (!p || schedule_->at(*p) != d) return {};
      if (d == first.item) {
        if (p->channel != first.channel || p->slot != first_slot) return {};
        found = true;
        continue;
      }
      std::int64_t offset = (p->slot - first_slot + L) % L;
      order.push_back({offset, AccessStep{0, p->channel, d}});
    }
    if (!found) return {};
    std::sort(order.begin(), order.end(), [](const auto& x, const auto& y) {
      return std::pair(x.first, x.second.channel) < std::pair(y.first, y.second.channel);
    });
    std::vector<AccessStep> steps{first};
    for (auto& [offset, cell] : order) {
      const AccessStep& prev = steps.back();
      cell.slot = *occ_.next_at(static_cast<int>((first.slot + offset - 1) % L) + 1,
                                prev.slot + (cell.channel == prev.channel ? 1 : 2));
      steps.push_back(cell);
    }
    return steps;
  }

  /// Where a client may start: per cycle slot, the first cell (one listing
  /// q before others, then lowest channel) holding a needed item from which
  /// the whole retrieval ends within one cycle, with that retrieval. Plans
  /// are in first-cycle time. A listed query can always start at its
  /// earliest canonical slot, since the canonical copies there fit in one
  /// cycle; only if no cell qualifies does every slot's first cell count.
  std::vector<CatchPoint> catch_points(const Query& q) const {
    require_items(q);
    const int L = schedule_->length();
    auto cells_at = [&](int t) {
      std::vector<AccessStep> out;
      for (int c = 1; c <= schedule_->channels(); ++c) {
        auto d = schedule_->at({c, t});
        if (!d || std::find(q.items.begin(), q.items.end(), *d) == q.items.end()) continue;
        AccessStep cell{t, c, *d};
        if (schedule_->assignment(q.qid, *d) == Position{c, t})
          out.insert(out.begin(), cell);
        else
          out.push_back(cell);
      }
      return out;
    };
    std::vector<CatchPoint> points;
    for (int t = 1; t <= L; ++t)
      for (const AccessStep& cell : cells_at(t)) {
        auto plan = retrieve_from(q, cell);
        if (plan.back().slot - t < L) {
          points.push_back({cell, std::move(plan)});
          break;
        }
      }
    if (!points.empty()) return points;
    for (int t = 1; t <= L; ++t) {
      auto cells = cells_at(t);
      if (!cells.empty()) points.push_back({cells.front(), retrieve_from(q, cells.front())});
    }
    return points;
  }

  /// Catch point reached first by a client whose first index read is at
  /// `tune_in`, and the absolute slot of that catch.
  std::pair<const CatchPoint*, std::int64_t> first_catch(const std::vector<CatchPoint>& points,
                                                         std::int64_t tune_in) const {
    const CatchPoint* pick = nullptr;
    std::int64_t at = 0;
    for (const CatchPoint& p : points) {
      std::int64_t u = *occ_.next_at(static_cast<int>(p.cell.slot), tune_in + 2);
      if (!pick || u < at) pick = &p, at = u;
    }
    return {pick, at};
  }

  /// Retrieval after the first download: repeatedly take the earliest
  /// reachable copy of any needed item (same slot: stay on the current
  /// channel, then lowest channel). When that would finish later than reading
  /// the canonical copies from the first download, the canonical plan is used.
  std::vector<AccessStep> retrieve_from(const Query& q, const AccessStep& first) const {
    std::vector<AccessStep> greedy = greedy_from(q, first);
    std::vector<AccessStep> canonical = canonical_from(q, first);
    if (!canonical.empty() && canonical.back().slot < greedy.back().slot) return canonical;
    return greedy;
  }

  std::vector<AccessStep> greedy_from(const Query& q, const AccessStep& first) const {
    ClientState st;
    st.current_channel = first.channel;
    st.current_slot = first.slot;
    st.downloaded.push_back(first);
    for (ItemId d : q.items)
      if (d != first.item) st.needed.push_back(d);
    while (!st.needed.empty()) {
      std::optional<AccessStep> best;
      std::size_t best_i = 0;
      auto better = [&](const AccessStep& a, const AccessStep& b) {
        auto key = [&](const AccessStep& x) {
          return std::tuple(x.slot, x.channel != st.current_channel, x.channel);
        };
        return key(a) < key(b);
      };
      for (std::size_t i = 0; i < st.needed.size(); ++i) {
        ItemId d = st.needed[i];
        for (int c : occ_.channels_of(d)) {
          std::int64_t from = st.current_slot + (c == st.current_channel ? 1 : 2);
          AccessStep cand{*occ_.next(d, c, from), c, d};
          if (!best || better(cand, *best)) best = cand, best_i = i;
        }
      }
      st.downloaded.push_back(*best);
      st.current_channel = best->channel;
      st.current_slot = best->slot;
      st.needed.erase(st.needed.begin() + static_cast<std::ptrdiff_t>(best_i));
    }
    return st.downloaded;
  }

  AccessResult simulate(const Query& q, std::int64_t tune_in) const {
    if (tune_in < 1) throw ValidationError("tune-in slot must be at least 1");
    auto points = catch_points(q);
    auto [point, at] = first_catch(points, tune_in);
    AccessResult r;
    r.plan.tune_in_slot = tune_in;
    for (AccessStep step : point->plan) {
      step.slot += at - point->cell.slot;
      r.plan.steps.push_back(step);
    }
    fill_metrics(r);
    return r;
  }

  static void fill_metrics(AccessResult& r) {
    const auto& steps = r.plan.steps;
    r.first_slot = steps.front().slot;
    r.completion = steps.back().slot;
    r.latency = r.completion - r.plan.tune_in_slot;
    r.t_wait = r.first_slot - r.plan.tune_in_slot;
    r.switches = 0;
    for (std::size_t i = 1; i < steps.size(); ++i) r.switches += steps[i].channel != steps[i - 1].channel;
    r.skips = (r.completion - r.first_slot - static_cast<std::int64_t>(steps.size() - 1)) - r.switches;
  }

 private:
  void require_items(const Query& q) const {
    if (q.items.empty()) throw ValidationError("query " + std::to_string(q.qid) + " requests nothing");
    for (ItemId d : q.items)
      if (!occ_.contains(d))
        throw ValidationError("query " + std::to_string(q.qid) + ": " + to_string(d) + " is not broadcast");
  }

  const BroadcastSchedule* schedule_;
  OccurrenceTable occ_;
};

inline AccessResult simulate_query(const BroadcastSchedule& s, const Query& q, std::int64_t tune_in) {
  return AccessSimulator(s).simulate(q, tune_in);
}

/// Exact averages over the L tune-in slots of one cycle.
struct QueryExpectation {
  QueryId qid = 0;
  double latency = 0;
  double t_wait = 0;
  double switches = 0;
  double skips = 0;
  std::int64_t max_tail = 0;      // largest completion - first_slot seen
  std::int64_t anchor_breaches = 0;  // tune-ins with latency > t_wait + L
};

struct ExpectedAccess {
  std::vector<QueryExpectation> per_query;
  double grand_mean = 0;
};

/// The retrieval after the first catch depends only on the caught cell, so
/// each catch point is simulated once and shared by every tune-in that
/// reaches it.
inline QueryExpectation expected_access_time(const AccessSimulator& sim, const Query& q) {
  const int L = sim.schedule().length();
  QueryExpectation e;
  e.qid = q.qid;
  struct Tail {
    std::int64_t length;
    int switches;
    std::int64_t skips;
  };
  std::vector<Tail> tails;
  const auto points = sim.catch_points(q);
  for (const CatchPoint& p : points) {
    AccessResult r;
    r.plan.steps = p.plan;
    AccessSimulator::fill_metrics(r);
    tails.push_back({r.completion - r.first_slot, r.switches, r.skips});
  }
  for (std::int64_t tune_in = 1; tune_in <= L; ++tune_in) {
    auto [point, at] = sim.first_catch(points, tune_in);
    const std::int64_t wait = at - tune_in;
    const Tail& t = tails[static_cast<std::size_t>(point - points.data())];
    e.latency += static_cast<double>(wait + t.length);
    e.t_wait += static_cast<double>(wait);
    e.switches += t.switches;
    e.skips += static_cast<double>(t.skips);
    e.max_tail = std::max(e.max_tail, t.length);
    if (t.length > L) ++e.anchor_breaches;
  }
  e.latency /= L;
  e.t_wait /= L;
  e.switches /= L;
  e.skips /= L;
  return e;
}

inline ExpectedAccess expected_access_time(const BroadcastSchedule& s, const std::vector<Query>& queries) {
  AccessSimulator sim(s);
  ExpectedAccess out;
  for (const Query& q : queries) {
    out.per_query.push_back(expected_access_time(sim, q));
    out.grand_mean += out.per_query.back().latency;
  }
  if (!queries.empty()) out.grand_mean /= static_cast<double>(queries.size());
  return out;
}

// ---------------------------------------------------------------------------
// Experiment drivers.

/// Builds a schedule for one batch.
using ScheduleFn = std::function<BroadcastSchedule(const std::vector<Query>&)>;

inline ScheduleFn fpbs_scheduler(int channel_count, OrderingRule rule) {
  return [=](const std::vector<Query>& batch) { return fpbs_schedule(batch, channel_count, rule); };
}

/// One per-query row. Offline rows average over all tune-ins (tune_in = 0).
struct QueryRecord {
  QueryId qid = 0;
  std::int64_t arrival = 0;
  std::int64_t tune_in = 0;
  double latency = 0;
  int span = 0;
  double switches = 0;
  double skips = 0;
  double t_wait = 0;
  int batch = 0;
};

struct ReportSummary {
  std::size_t queries = 0;
  double mean_latency = 0;
  double p50_latency = 0;
  double p95_latency = 0;
  double p99_latency = 0;
  double mean_span = 0;
  double mean_switches = 0;
  double mean_skips = 0;
  double mean_t_wait = 0;
  std::size_t conflicts = 0;
  int batches = 0;
  int max_cycle_length = 0;
  // Batches whose cycle is no longer than their distinct item count.
  int cycles_within_distinct = 0;
  std::int64_t anchor_breaches = 0;
};

struct ExperimentReport {
  std::vector<QueryRecord> per_query;
  std::vector<int> cycle_lengths;     // per batch
  std::vector<int> distinct_items;    // per batch
  ReportSummary summary;
};

/// Nearest-rank percentile of an unsorted sample.
inline double percentile(std::vector<double> v, double p) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(v.size())));
  return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

/// Recomputes the per-query aggregates from the rows; batch-level fields are
/// left alone.
inline void summarize(ExperimentReport& r) {
  ReportSummary& s = r.summary;
  s.queries = r.per_query.size();
  std::vector<double> lat;
  double span = 0, sw = 0, sk = 0, wait = 0, total = 0;
  for (const auto& q : r.per_query) {
    lat.push_back(q.latency);
    total += q.latency;
    span += q.span;
    sw += q.switches;
    sk += q.skips;
    wait += q.t_wait;
  }
  const double n = r.per_query.empty() ? 1.0 : static_cast<double>(r.per_query.size());
  s.mean_latency = total / n;
  s.mean_span = span / n;
  s.mean_switches = sw / n;
  s.mean_skips = sk / n;
  s.mean_t_wait = wait / n;
  s.p50_latency = percentile(lat, 50);
  s.p95_latency = percentile(lat, 95);
  s.p99_latency = percentile(lat, 99);
}

namespace detail {

inline int distinct_count(const std::vector<Query>& batch) {
  std::vector<ItemId> all;
  for (const auto& q : batch) all.insert(all.end(), q.items.begin(), q.items.end());
  std::sort(all.begin(), all.end());
  return static_cast<int>(std::unique(all.begin(), all.end()) - all.begin());
}

inline void note_batch(ExperimentReport& r, const BroadcastSchedule& s, const std::vector<Query>& batch) {
  r.cycle_lengths.push_back(s.length());
  r.distinct_items.push_back(distinct_count(batch));
  r.summary.conflicts += check_conflict_free(s, batch).violations.size();
  r.summary.batches += 1;
  r.summary.max_cycle_length = std::max(r.summary.max_cycle_length, s.length());
  if (s.length() <= r.distinct_items.back()) ++r.summary.cycles_within_distinct;
}

}  // namespace detail

/// Schedules the whole batch at once and reports the exact expectation over
/// uniform tune-in.
inline ExperimentReport run_offline(const std::vector<Query>& queries, const ScheduleFn& scheduler) {
  ExperimentReport r;
  BroadcastSchedule s = scheduler(queries);
  detail::note_batch(r, s, queries);
  AccessSimulator sim(s);
  for (const Query& q : queries) {
    QueryExpectation e = expected_access_time(sim, q);
    r.per_query.push_back({q.qid, 0, 0, e.latency, span_access_time(s, q), e.switches, e.skips, e.t_wait, 1});
    r.summary.anchor_breaches += e.anchor_breaches;
  }
  summarize(r);
  return r;
}

inline ExperimentReport run_offline(const std::vector<Query>& queries, int channel_count, OrderingRule rule) {
  return run_offline(queries, fpbs_scheduler(channel_count, rule));
}

/// A request together with its arrival slot.
struct Arrival {
  Query query;
  std::int64_t slot = 0;
};

/// Requests queue FCFS; a full buffer is scheduled as one cycle, which
/// starts the slot after the buffer fills or when the previous batch's
/// broadcast ends, whichever is later. The cycle repeats until every client
/// of its batch is done. Waiting clients already hear the index for the
/// batch's first slot, so each starts by catching from cycle slot 1. A
/// trailing partial batch is flushed once the stream ends.
inline ExperimentReport run_online(const std::vector<Arrival>& stream, int buffer_capacity, const ScheduleFn& scheduler) {
  if (buffer_capacity < 1) throw ConfigError("buffer capacity must be at least 1");
  for (std::size_t i = 1; i < stream.size(); ++i)
    if (stream[i].query.arrival_seq < stream[i - 1].query.arrival_seq || stream[i].slot < stream[i - 1].slot)
      throw ValidationError("arrival stream is not ordered");
  ExperimentReport r;
  std::int64_t previous_end = 0;
  int batch_no = 0;
  for (std::size_t begin = 0; begin < stream.size(); begin += static_cast<std::size_t>(buffer_capacity)) {
    std::size_t end = std::min(stream.size(), begin + static_cast<std::size_t>(buffer_capacity));
    std::vector<Query> batch;
    for (std::size_t i = begin; i < end; ++i) batch.push_back(stream[i].query);
    ++batch_no;
    BroadcastSchedule s = scheduler(batch);
    detail::note_batch(r, s, batch);
    const std::int64_t L = s.length();
    const std::int64_t start = std::max(stream[end - 1].slot + 1, previous_end);
    // In simulator time, slot 1 of the batch's first cycle is absolute 2L + 1
    // and the index read two slots earlier announces it.
    const std::int64_t cycle_one = 2 * L + 1;
    AccessSimulator sim(s);
    std::int64_t longest = 0;
    for (std::size_t i = begin; i < end; ++i) {
      const Query& q = stream[i].query;
      AccessResult a = sim.simulate(q, cycle_one - 2);
      const std::int64_t done = a.completion - cycle_one;  // slots after cycle start
      longest = std::max(longest, done);
      const std::int64_t wait = start - stream[i].slot + (a.first_slot - cycle_one);
      if (a.completion - a.first_slot > L) ++r.summary.anchor_breaches;
      r.per_query.push_back({q.qid, stream[i].slot, start, static_cast<double>(start + done - stream[i].slot),
                             span_access_time(s, q), static_cast<double>(a.switches), static_cast<double>(a.skips),
                             static_cast<double>(wait), batch_no});
    }
    previous_end = start + L * ((longest + L) / L);
  }
  summarize(r);
  return r;
}

inline ExperimentReport run_online(const std::vector<Arrival>& stream, int buffer_capacity, int channel_count,
                                   OrderingRule rule) {
  return run_online(stream, buffer_capacity, fpbs_scheduler(channel_count, rule));
}

}  // namespace fpbs
