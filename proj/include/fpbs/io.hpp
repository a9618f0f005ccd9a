#pragma once

// Text form of a schedule and the CSV reports.
//
//   FPBS-SCHEDULE 1
//   channels 2 length 7
//   C1 d3 d5 d1 d4 d2 d7 d8
//   C2 d2 d3 d5 d7 d6 -- --
//   I1 3: d1@1(4,5) d5@2(1,3)
//   Q2 d2@2:1 d3@2:2 d4@1:4
//
// C lines hold one token per slot, "--" for an empty cell. I<t> lines give
// the slot described by index entry t and each listed cell as
// item@channel(qids). Q lines give the canonical item@channel:slot per query.

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fpbs/model.hpp"
#include "fpbs/simulator.hpp"
#include "fpbs/workload.hpp"

namespace fpbs {

inline constexpr const char* kScheduleMagic = "FPBS-SCHEDULE 1";
inline constexpr const char* kEmptyCell = "--";

inline void write_schedule(std::ostream& out, const BroadcastSchedule& s) {
  out << kScheduleMagic << '\n';
  out << "channels " << s.channels() << " length " << s.length() << '\n';
  for (int c = 1; c <= s.channels(); ++c) {
    out << 'C' << c;
    for (int t = 1; t <= s.length(); ++t) {
      auto d = s.at({c, t});
      out << ' ' << (d ? to_string(*d) : kEmptyCell);
    }
    out << '\n';
  }
  const auto& index = s.index_channel();
  for (std::size_t t = 0; t < index.size(); ++t) {
    out << 'I' << t + 1 << ' ' << index[t].described_slot << ':';
    for (const auto& l : index[t].listings) {
      out << ' ' << to_string(l.item) << '@' << l.channel << '(';
      for (std::size_t i = 0; i < l.qids.size(); ++i) out << (i ? "," : "") << l.qids[i];
      out << ')';
    }
    out << '\n';
  }
  QueryId current = 0;
  bool open = false;
  for (const auto& [key, pos] : s.assignments()) {
    if (!open || key.first != current) {
      if (open) out << '\n';
      out << 'Q' << key.first;
      current = key.first;
      open = true;
    }
    out << ' ' << to_string(key.second) << '@' << pos.channel << ':' << pos.slot;
  }
  if (open) out << '\n';
}

inline std::string schedule_to_string(const BroadcastSchedule& s) {
  std::ostringstream os;
  write_schedule(os, s);
  return os.str();
}

namespace detail {

inline int parse_positive(const std::string& tok, int lineno, const char* what) {
  int v = 0;
  if (!parse_int(tok, v) || v < 1)
    throw ValidationError("line " + std::to_string(lineno) + ": bad " + what + " '" + tok + "'");
  return v;
}

inline ItemId parse_item(const std::string& tok, int lineno) {
  if (tok.size() < 2 || tok[0] != 'd') throw ValidationError("line " + std::to_string(lineno) + ": bad item '" + tok + "'");
  return ItemId(parse_positive(tok.substr(1), lineno, "item"));
}

inline std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string t; is >> t;) out.push_back(t);
  return out;
}

}  // namespace detail

/// Inverse of write_schedule.
inline BroadcastSchedule read_schedule(std::istream& in) {
  std::string line;
  int lineno = 1;
  if (!std::getline(in, line) || detail::trim(line) != kScheduleMagic)
    throw ValidationError("line 1: not a schedule file");
  ++lineno;
  if (!std::getline(in, line)) throw ValidationError("line 2: missing dimensions");
  auto head = detail::split_ws(line);
  if (head.size() != 4 || head[0] != "channels" || head[2] != "length")
    throw ValidationError("line 2: expected 'channels C length L'");
  const int C = detail::parse_positive(head[1], lineno, "channel count");
  int L = 0;
  if (!detail::parse_int(head[3], L) || L < 0) throw ValidationError("line 2: bad length");
  BroadcastSchedule s(C, L);
  std::vector<IndexEntry> index;
  std::vector<bool> seen_channel(static_cast<std::size_t>(C) + 1, false);
  while (std::getline(in, line)) {
    ++lineno;
    auto toks = detail::split_ws(line);
    if (toks.empty()) continue;
    auto bad = [&](const std::string& why) { throw ValidationError("line " + std::to_string(lineno) + ": " + why); };
    const char kind = toks[0][0];
    const std::string rest = toks[0].substr(1);
    if (kind == 'C') {
      int c = detail::parse_positive(rest, lineno, "channel");
      if (c > C) bad("channel out of range");
      if (seen_channel[c]) bad("channel listed twice");
      seen_channel[c] = true;
      if (static_cast<int>(toks.size()) != L + 1) bad("expected " + std::to_string(L) + " cells");
      for (int t = 1; t <= L; ++t)
        if (toks[t] != kEmptyCell) s.place({c, t}, detail::parse_item(toks[t], lineno));
    } else if (kind == 'I') {
      int t = detail::parse_positive(rest, lineno, "index slot");
      if (t != static_cast<int>(index.size()) + 1 || toks.size() < 2 || toks[1].back() != ':') bad("malformed index entry");
      IndexEntry e;
      e.described_slot = detail::parse_positive(toks[1].substr(0, toks[1].size() - 1), lineno, "described slot");
      for (std::size_t i = 2; i < toks.size(); ++i) {
        const std::string& tok = toks[i];
        auto at = tok.find('@'), lp = tok.find('('), rp = tok.find(')');
        if (at == std::string::npos || lp == std::string::npos || rp != tok.size() - 1 || lp < at) bad("malformed listing '" + tok + "'");
        IndexListing l;
        l.item = detail::parse_item(tok.substr(0, at), lineno);
        l.channel = detail::parse_positive(tok.substr(at + 1, lp - at - 1), lineno, "channel");
        std::stringstream qs(tok.substr(lp + 1, rp - lp - 1));
        for (std::string q; std::getline(qs, q, ',');) l.qids.push_back(detail::parse_positive(q, lineno, "qid"));
        e.listings.push_back(std::move(l));
      }
      index.push_back(std::move(e));
    } else if (kind == 'Q') {
      QueryId q = detail::parse_positive(rest, lineno, "qid");
      for (std::size_t i = 1; i < toks.size(); ++i) {
        const std::string& tok = toks[i];
        auto at = tok.find('@'), colon = tok.find(':');
        if (at == std::string::npos || colon == std::string::npos || colon < at) bad("malformed assignment '" + tok + "'");
        ItemId d = detail::parse_item(tok.substr(0, at), lineno);
        Position p{detail::parse_positive(tok.substr(at + 1, colon - at - 1), lineno, "channel"),
                   detail::parse_positive(tok.substr(colon + 1), lineno, "slot")};
        s.assign(q, d, p);
      }
    } else {
      bad("unknown record '" + toks[0] + "'");
    }
  }
  s.set_index_channel(std::move(index));
  return s;
}

inline BroadcastSchedule schedule_from_string(const std::string& text) {
  std::istringstream is(text);
  return read_schedule(is);
}

/// Problems beyond data conflicts that make a schedule unusable:
/// assignments pointing at cells without the item, requested items without
/// an assignment, and an index channel that disagrees with the grid.
inline std::vector<std::string> structural_problems(const BroadcastSchedule& s, const std::vector<Query>& queries) {
  std::vector<std::string> out;
  for (const auto& [key, pos] : s.assignments())
    if (s.at(pos) != key.second)
      out.push_back("q" + std::to_string(key.first) + " reads " + to_string(key.second) + " from a cell that does not hold it");
  for (const Query& q : queries)
    for (ItemId d : q.items)
      if (!s.assignment(q.qid, d)) out.push_back("q" + std::to_string(q.qid) + " has no copy of " + to_string(d));
  if (s.index_channel() != build_index_channel(s)) out.push_back("index channel does not match the grid");
  return out;
}

// ---------------------------------------------------------------------------
// CSV.

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline constexpr const char* kPerQueryHeader = "qid,arrival,tune_in,latency,span,switches,skips,t_wait,batch";

inline void write_per_query_csv(std::ostream& out, const ExperimentReport& r) {
  out << kPerQueryHeader << '\n';
  for (const auto& q : r.per_query)
    out << q.qid << ',' << q.arrival << ',' << q.tune_in << ',' << fmt_double(q.latency) << ',' << q.span << ','
        << fmt_double(q.switches) << ',' << fmt_double(q.skips) << ',' << fmt_double(q.t_wait) << ',' << q.batch << '\n';
}

/// Summary columns after the caller's leading columns.
inline constexpr const char* kSummaryMetrics =
    "queries,batches,max_cycle_length,conflicts,mean_latency,p50_latency,p95_latency,p99_latency,"
    "mean_span,mean_switches,mean_skips,mean_t_wait,cycles_within_distinct,anchor_breaches";

inline std::string summary_metrics(const ReportSummary& s) {
  std::ostringstream os;
  os << s.queries << ',' << s.batches << ',' << s.max_cycle_length << ',' << s.conflicts << ',' << fmt_double(s.mean_latency)
     << ',' << fmt_double(s.p50_latency) << ',' << fmt_double(s.p95_latency) << ',' << fmt_double(s.p99_latency) << ','
     << fmt_double(s.mean_span) << ',' << fmt_double(s.mean_switches) << ',' << fmt_double(s.mean_skips) << ','
     << fmt_double(s.mean_t_wait) << ',' << s.cycles_within_distinct << ',' << s.anchor_breaches;
  return os.str();
}

}  // namespace fpbs
