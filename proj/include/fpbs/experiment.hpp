#pragma once

// Experiment configuration, sweeps and report files.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fpbs/io.hpp"
#include "fpbs/mapper.hpp"
#include "fpbs/oracle.hpp"
#include "fpbs/simulator.hpp"
#include "fpbs/workload.hpp"

namespace fpbs {

/// Bad command-line usage: unknown variant, axis or option value.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Variant {
  std::string name;
  bool baseline = false;
  OrderingRule rule = OrderingRule::FrequencyFirst;
  bool online = false;
};

inline const std::vector<std::string>& variant_names() {
  static const std::vector<std::string> names = {"fpbs-rn", "fpbs-fre", "fpbs-rn-online", "fpbs-fre-online",
                                                 "flat-baseline"};
  return names;
}

inline Variant parse_variant(const std::string& name) {
  if (name == "fpbs-rn") return {name, false, OrderingRule::RequestNumberFirst, false};
  if (name == "fpbs-fre") return {name, false, OrderingRule::FrequencyFirst, false};
  if (name == "fpbs-rn-online") return {name, false, OrderingRule::RequestNumberFirst, true};
  if (name == "fpbs-fre-online") return {name, false, OrderingRule::FrequencyFirst, true};
  if (name == "flat-baseline") return {name, true, OrderingRule::FrequencyFirst, false};
  throw UsageError("unknown variant '" + name + "'");
}

inline ScheduleFn scheduler_for(const Variant& v, int channel_count) {
  if (v.baseline) return [channel_count](const std::vector<Query>& b) { return flat_baseline_schedule(b, channel_count); };
  return fpbs_scheduler(channel_count, v.rule);
}

inline const std::vector<std::string>& sweep_axes() {
  static const std::vector<std::string> axes = {"catalog", "users", "qmax", "channels", "buffer", "seed"};
  return axes;
}

struct ExperimentConfig {
  std::string variant = "fpbs-fre";
  std::string mode = "offline";  // an -online variant runs online regardless
  WorkloadSpec workload;
  std::string workload_path;  // ingest instead of generating when set
  int channels = 6;
  int buffer = 3000;
  std::string axis;  // empty: a single point
  std::vector<std::int64_t> values;

  bool online() const { return mode == "online" || parse_variant(variant).online; }

  void validate() const {
    parse_variant(variant);
    if (mode != "offline" && mode != "online") throw UsageError("mode must be offline or online");
    if (channels < 1) throw ConfigError("channel count must be at least 1");
    if (buffer < 1) throw ConfigError("buffer capacity must be at least 1");
    if (!axis.empty()) {
      if (std::find(sweep_axes().begin(), sweep_axes().end(), axis) == sweep_axes().end())
        throw UsageError("unknown sweep axis '" + axis + "'");
      if (values.empty()) throw UsageError("sweep axis given without values");
    }
    if (workload_path.empty()) workload.validate();
  }

  /// The configuration of one sweep point.
  ExperimentConfig at(std::int64_t value) const {
    ExperimentConfig c = *this;
    c.axis.clear();
    c.values.clear();
    const int v = static_cast<int>(value);
    if (axis == "catalog") c.workload.catalog_size = v;
    else if (axis == "users") c.workload.users = v;
    else if (axis == "qmax") c.workload.max_request_size = v;
    else if (axis == "channels") c.channels = v;
    else if (axis == "buffer") c.buffer = v;
    else if (axis == "seed") c.workload.seed = static_cast<std::uint64_t>(value);
    return c;
  }
};

/// key=value lines, enough to rebuild the configuration.
inline std::string config_echo(const ExperimentConfig& c) {
  std::ostringstream os;
  char zipf[64];
  std::snprintf(zipf, sizeof zipf, "%.17g", c.workload.zipf_skew);
  os << "variant=" << c.variant << '\n'
     << "mode=" << c.mode << '\n'
     << "catalog=" << c.workload.catalog_size << '\n'
     << "users=" << c.workload.users << '\n'
     << "qmax=" << c.workload.max_request_size << '\n'
     << "zipf=" << zipf << '\n'
     << "seed=" << c.workload.seed << '\n'
     << "horizon=" << c.workload.arrival_horizon << '\n'
     << "workload=" << c.workload_path << '\n'
     << "channels=" << c.channels << '\n'
     << "buffer=" << c.buffer << '\n'
     << "axis=" << c.axis << '\n'
     << "values=";
  for (std::size_t i = 0; i < c.values.size(); ++i) os << (i ? "," : "") << c.values[i];
  os << '\n';
  return os.str();
}

inline ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig c;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    std::string text = detail::trim(line);
    if (text.empty() || text[0] == '#') continue;
    auto eq = text.find('=');
    auto bad = [&](const std::string& why) {
      throw ConfigError("config line " + std::to_string(lineno) + ": " + why);
    };
    if (eq == std::string::npos) bad("expected key=value");
    const std::string key = text.substr(0, eq), value = text.substr(eq + 1);
    auto integer = [&]() {
      std::int64_t v = 0;
      if (!detail::parse_int(value, v)) bad("bad number for " + key);
      return v;
    };
    if (key == "variant") c.variant = value;
    else if (key == "mode") c.mode = value;
    else if (key == "catalog") c.workload.catalog_size = static_cast<int>(integer());
    else if (key == "users") c.workload.users = static_cast<int>(integer());
    else if (key == "qmax") c.workload.max_request_size = static_cast<int>(integer());
    else if (key == "zipf") {
      try {
        std::size_t used = 0;
        c.workload.zipf_skew = std::stod(value, &used);
        if (used != value.size()) bad("bad number for zipf");
      } catch (const std::logic_error&) {
        bad("bad number for zipf");
      }
    } else if (key == "seed") {
      std::uint64_t v = 0;
      if (!detail::parse_int(value, v)) bad("bad seed");
      c.workload.seed = v;
    } else if (key == "horizon") c.workload.arrival_horizon = integer();
    else if (key == "workload") c.workload_path = value;
    else if (key == "channels") c.channels = static_cast<int>(integer());
    else if (key == "buffer") c.buffer = static_cast<int>(integer());
    else if (key == "axis") c.axis = value;
    else if (key == "values") {
      c.values.clear();
      std::stringstream vs(value);
      for (std::string v; std::getline(vs, v, ',');) {
        std::int64_t x = 0;
        if (!detail::parse_int(detail::trim(v), x)) bad("bad sweep value '" + v + "'");
        c.values.push_back(x);
      }
    } else bad("unknown key '" + key + "'");
  }
  return c;
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string config_hash(const ExperimentConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(config_echo(c))));
  return buf;
}

struct PointResult {
  ExperimentConfig config;  // the single-point configuration
  ExperimentReport report;
  double seconds = 0;       // wall time, reported apart from the CSVs
};

inline std::vector<Query> load_workload(const ExperimentConfig& c) {
  if (c.workload_path.empty()) return generate_workload(c.workload);
  return ingest_workload(c.workload_path, c.workload.catalog_size).queries;
}

inline PointResult run_point(const ExperimentConfig& c) {
  c.validate();
  PointResult out{c, {}, 0};
  std::vector<Query> queries = load_workload(c);
  const auto start = std::chrono::steady_clock::now();
  ScheduleFn scheduler = scheduler_for(parse_variant(c.variant), c.channels);
  if (c.online()) {
    auto slots = arrival_slots(c.workload, queries.size());
    std::vector<Arrival> stream;
    stream.reserve(queries.size());
    for (std::size_t i = 0; i < queries.size(); ++i) stream.push_back({queries[i], slots[i]});
    out.report = run_online(stream, c.buffer, scheduler);
  } else {
    out.report = run_offline(queries, scheduler);
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (out.report.summary.conflicts != 0)
    throw InvariantError("schedule with " + std::to_string(out.report.summary.conflicts) + " conflicts");
  return out;
}

/// One point per sweep value, in the given order; a config without an axis
/// is one point.
inline std::vector<PointResult> run_experiment(const ExperimentConfig& c) {
  c.validate();
  std::vector<PointResult> out;
  if (c.axis.empty()) {
    out.push_back(run_point(c));
    return out;
  }
  for (std::int64_t v : c.values) out.push_back(run_point(c.at(v)));
  return out;
}

inline constexpr const char* kSummaryLead = "config_hash,variant,mode,catalog,users,qmax,channels,buffer,seed";

inline std::string summary_row(const PointResult& p) {
  const ExperimentConfig& c = p.config;
  std::ostringstream os;
  os << config_hash(c) << ',' << c.variant << ',' << (c.online() ? "online" : "offline") << ',' << c.workload.catalog_size
     << ',' << c.workload.users << ',' << c.workload.max_request_size << ',' << c.channels << ',' << c.buffer << ','
     << c.workload.seed << ',' << summary_metrics(p.report.summary);
  return os.str();
}

/// Name of a point's per-query file.
inline std::string detail_name(const ExperimentConfig& sweep, std::size_t i) {
  if (sweep.axis.empty()) return "per_query.csv";
  return "per_query_" + sweep.axis + "_" + std::to_string(sweep.values[i]) + ".csv";
}

/// Writes config.txt, summary.csv, one per-query CSV per point and
/// timing.csv into `dir`. Everything but timing.csv depends only on the
/// configuration.
inline void write_outputs(const std::filesystem::path& dir, const ExperimentConfig& sweep,
                          const std::vector<PointResult>& points) {
  std::filesystem::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("config.txt");
    f << config_echo(sweep);
  }
  {
    auto f = open("summary.csv");
    f << kSummaryLead << ',' << kSummaryMetrics << '\n';
    for (const auto& p : points) f << summary_row(p) << '\n';
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto f = open(detail_name(sweep, i));
    write_per_query_csv(f, points[i].report);
  }
  {
    auto f = open("timing.csv");
    f << "config_hash,runtime_seconds\n";
    for (const auto& p : points) f << config_hash(p.config) << ',' << fmt_double(p.seconds) << '\n';
  }
}

}  // namespace fpbs
