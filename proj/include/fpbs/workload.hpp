#pragma once

// Synthetic request workloads and the plain-text workload format
// "qid,arrival_seq,item;item;...".

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "fpbs/model.hpp"

namespace fpbs {

struct WorkloadSpec {
  int catalog_size = 500;
  int users = 5000;
  int max_request_size = 10;
  double zipf_skew = 0.8;  // 0 is uniform
  std::uint64_t seed = 1;
  std::int64_t arrival_horizon = 0;  // online arrivals spread over [1, horizon]; 0 means `users`

  void validate() const {
    if (catalog_size < 1) throw ConfigError("catalog size must be positive");
    if (users < 1) throw ConfigError("user count must be positive");
    if (max_request_size < 1) throw ConfigError("maximum request size must be positive");
    if (max_request_size > catalog_size) throw ConfigError("maximum request size exceeds the catalog");
    if (!(zipf_skew >= 0) || !std::isfinite(zipf_skew)) throw ConfigError("zipf skew must be a finite non-negative number");
    if (arrival_horizon < 0) throw ConfigError("arrival horizon must not be negative");
  }

  std::int64_t horizon() const { return arrival_horizon > 0 ? arrival_horizon : users; }
};

/// Item d_i has weight 1 / i^skew. Each query's size is uniform in
/// [1, q_max] and its items are drawn by weight without replacement.
inline std::vector<Query> generate_workload(const WorkloadSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::vector<double> weights(static_cast<std::size_t>(spec.catalog_size));
  for (int i = 0; i < spec.catalog_size; ++i) weights[i] = 1.0 / std::pow(static_cast<double>(i + 1), spec.zipf_skew);
  std::discrete_distribution<int> pick(weights.begin(), weights.end());
  std::uniform_int_distribution<int> size(1, spec.max_request_size);
  std::vector<Query> out;
  out.reserve(static_cast<std::size_t>(spec.users));
  for (int q = 1; q <= spec.users; ++q) {
    Query query{q, q - 1, {}};
    const int k = size(rng);
    std::unordered_set<int> seen;
    while (static_cast<int>(query.items.size()) < k) {
      int i = pick(rng) + 1;
      if (seen.insert(i).second) query.items.emplace_back(i);
    }
    out.push_back(std::move(query));
  }
  return out;
}

/// Arrival slots for the online mode: uniform over [1, horizon], sorted and
/// handed out in arrival_seq order. Drawn from a stream separate from the
/// request contents.
inline std::vector<std::int64_t> arrival_slots(const WorkloadSpec& spec, std::size_t count) {
  spec.validate();
  std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32), 0xa77u};
  std::mt19937_64 rng(seq);
  std::uniform_int_distribution<std::int64_t> slot(1, spec.horizon());
  std::vector<std::int64_t> out(count);
  for (auto& s : out) s = slot(rng);
  std::sort(out.begin(), out.end());
  return out;
}

struct IngestResult {
  std::vector<Query> queries;
  std::size_t duplicates_removed = 0;
};

namespace detail {

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
bool parse_int(const std::string& s, T& out) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

}  // namespace detail

/// Reads one query per line. Blank lines and lines starting with '#' are
/// skipped. Items may be written as "7" or "d7". Repeated items within a
/// line are dropped and counted. With a catalog size, ids above it are
/// rejected.
inline IngestResult parse_workload(std::istream& in, std::optional<int> catalog_size = std::nullopt) {
  IngestResult r;
  std::set<QueryId> qids;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    std::string text = detail::trim(line);
    if (text.empty() || text[0] == '#') continue;
    auto fail = [&](const std::string& why) {
      throw ValidationError("line " + std::to_string(lineno) + ": " + why);
    };
    auto c1 = text.find(',');
    auto c2 = c1 == std::string::npos ? c1 : text.find(',', c1 + 1);
    if (c2 == std::string::npos) fail("expected qid,arrival_seq,items");
    Query q;
    if (!detail::parse_int(detail::trim(text.substr(0, c1)), q.qid)) fail("bad qid");
    if (!detail::parse_int(detail::trim(text.substr(c1 + 1, c2 - c1 - 1)), q.arrival_seq)) fail("bad arrival_seq");
    std::stringstream items(text.substr(c2 + 1));
    std::string tok;
    while (std::getline(items, tok, ';')) {
      tok = detail::trim(tok);
      if (!tok.empty() && (tok[0] == 'd' || tok[0] == 'D')) tok.erase(0, 1);
      int id = 0;
      if (!detail::parse_int(tok, id)) fail("bad item '" + tok + "'");
      if (id < 1 || (catalog_size && id > *catalog_size)) fail("unknown item id " + std::to_string(id));
      q.items.emplace_back(id);
    }
    if (!qids.insert(q.qid).second) fail("repeated qid " + std::to_string(q.qid));
    r.duplicates_removed += normalize(q);
    try {
      validate(q, catalog_size);
    } catch (const ValidationError& e) {
      fail(e.what());
    }
    r.queries.push_back(std::move(q));
  }
  if (r.queries.empty()) throw ValidationError("workload is empty");
  std::stable_sort(r.queries.begin(), r.queries.end(),
                   [](const Query& a, const Query& b) { return a.arrival_seq < b.arrival_seq; });
  return r;
}

inline IngestResult ingest_workload(const std::string& path, std::optional<int> catalog_size = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open workload " + path);
  return parse_workload(in, catalog_size);
}

inline void write_workload(std::ostream& out, const std::vector<Query>& queries) {
  for (const Query& q : queries) {
    out << q.qid << ',' << q.arrival_seq << ',';
    for (std::size_t i = 0; i < q.items.size(); ++i) out << (i ? ";" : "") << q.items[i].value;
    out << '\n';
  }
}

}  // namespace fpbs
