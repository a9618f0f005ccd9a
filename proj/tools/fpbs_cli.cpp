// fpbs: generate workloads, build and verify schedules, run experiments.
//
// Exit codes: 0 success, 1 usage, 2 invalid input or configuration,
// 3 internal invariant breach.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "fpbs/fpbs.hpp"

namespace {

struct Options {
  std::optional<int> catalog, users, qmax, channels, buffer;
  std::optional<double> zipf;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> horizon;
  std::optional<std::string> rule, mode, variant, workload;
  std::string config_path;
  std::string out;
  std::string axis;
  std::vector<std::int64_t> values;
};

void add_workload_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--catalog", o.catalog, "catalog size |D|")->check(CLI::PositiveNumber);
  cmd->add_option("--users", o.users, "number of requests n")->check(CLI::PositiveNumber);
  cmd->add_option("--qmax", o.qmax, "largest request size")->check(CLI::PositiveNumber);
  cmd->add_option("--zipf", o.zipf, "popularity skew (0 = uniform, default 0.8)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--seed", o.seed, "random seed");
}

void add_experiment_flags(CLI::App* cmd, Options& o) {
  add_workload_flags(cmd, o);
  cmd->add_option("--workload", o.workload, "read requests from this file instead of generating them");
  cmd->add_option("--channels", o.channels, "data channels |C|")->check(CLI::PositiveNumber);
  cmd->add_option("--buffer", o.buffer, "online buffer capacity")->check(CLI::PositiveNumber);
  cmd->add_option("--rule", o.rule, "branch ordering rule")->check(CLI::IsMember({"rn", "fre"}));
  cmd->add_option("--mode", o.mode, "offline or online batching")->check(CLI::IsMember({"offline", "online"}));
  cmd->add_option("--variant", o.variant, "fpbs-rn, fpbs-fre, fpbs-rn-online, fpbs-fre-online or flat-baseline");
  cmd->add_option("--horizon", o.horizon, "online arrivals spread over this many slots (default: users)");
  cmd->add_option("--config", o.config_path, "start from a config.txt written by an earlier run");
}

fpbs::ExperimentConfig build_config(const Options& o) {
  fpbs::ExperimentConfig c;
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw fpbs::ConfigError("cannot open config " + o.config_path);
    c = fpbs::parse_config(in);
  }
  if (o.catalog) c.workload.catalog_size = *o.catalog;
  if (o.users) c.workload.users = *o.users;
  if (o.qmax) c.workload.max_request_size = *o.qmax;
  if (o.zipf) c.workload.zipf_skew = *o.zipf;
  if (o.seed) c.workload.seed = *o.seed;
  if (o.horizon) c.workload.arrival_horizon = *o.horizon;
  if (o.workload) c.workload_path = *o.workload;
  if (o.channels) c.channels = *o.channels;
  if (o.buffer) c.buffer = *o.buffer;
  if (o.mode) c.mode = *o.mode;
  if (o.variant) {
    c.variant = *o.variant;
  } else if (o.rule || o.mode) {
    std::string rule = o.rule.value_or(c.variant.rfind("fpbs-rn", 0) == 0 ? "rn" : "fre");
    c.variant = "fpbs-" + rule + (c.mode == "online" ? "-online" : "");
  }
  if (!o.axis.empty()) {
    c.axis = o.axis;
    c.values = o.values;
  }
  return c;
}

std::ostream& output(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path, std::ios::binary);
  if (!file) throw fpbs::ConfigError("cannot write " + path);
  return file;
}

int cmd_generate(const Options& o) {
  fpbs::ExperimentConfig c = build_config(o);
  auto queries = fpbs::generate_workload(c.workload);
  std::ofstream f;
  fpbs::write_workload(output(o.out, f), queries);
  return 0;
}

int cmd_schedule(const Options& o) {
  fpbs::ExperimentConfig c = build_config(o);
  c.validate();
  auto queries = fpbs::load_workload(c);
  fpbs::Variant v = fpbs::parse_variant(c.variant);
  fpbs::BroadcastSchedule s = fpbs::scheduler_for(v, c.channels)(queries);
  auto report = fpbs::check_conflict_free(s, queries);
  if (!report.clean()) throw fpbs::InvariantError("scheduler produced a conflicting schedule");
  std::ofstream f;
  fpbs::write_schedule(output(o.out, f), s);
  return 0;
}

int cmd_run(const Options& o, bool sweep) {
  fpbs::ExperimentConfig c = build_config(o);
  if (sweep && c.axis.empty()) throw fpbs::UsageError("sweep needs --axis and --values");
  if (o.out.empty()) throw fpbs::UsageError("--out directory is required");
  auto points = fpbs::run_experiment(c);
  fpbs::write_outputs(o.out, c, points);
  for (const auto& p : points) std::cout << fpbs::summary_row(p) << '\n';
  return 0;
}

int cmd_verify(const std::string& schedule_path, const std::string& workload_path) {
  std::ifstream in(schedule_path);
  if (!in) throw fpbs::ValidationError("cannot open schedule " + schedule_path);
  fpbs::BroadcastSchedule s = fpbs::read_schedule(in);
  auto queries = fpbs::ingest_workload(workload_path).queries;
  auto problems = fpbs::structural_problems(s, queries);
  for (const auto& p : problems) std::cout << "structure: " << p << '\n';
  std::size_t conflicts = 0;
  if (problems.empty()) {
    auto report = fpbs::check_conflict_free(s, queries);
    conflicts = report.violations.size();
    for (const auto& v : report.violations)
      std::cout << "conflict: q" << v.qid << ' ' << v.first << "@" << v.first_pos.channel << ':' << v.first_pos.slot
                << ' ' << v.second << "@" << v.second_pos.channel << ':' << v.second_pos.slot << '\n';
    std::cout << "average span: " << fpbs::average_span(s, queries).value() << '\n';
  }
  std::cout << "channels " << s.channels() << " length " << s.length() << " queries " << queries.size() << '\n';
  const bool ok = problems.empty() && conflicts == 0;
  std::cout << (ok ? "OK" : "INVALID") << '\n';
  return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conflict-avoiding multi-channel broadcast scheduling"};
  app.require_subcommand(1);
  Options o;
  std::string schedule_path, verify_workload;

  auto* gen = app.add_subcommand("generate", "write a synthetic workload");
  add_workload_flags(gen, o);
  gen->add_option("--out", o.out, "output file (default stdout)");

  auto* sched = app.add_subcommand("schedule", "build one schedule for a whole workload");
  add_experiment_flags(sched, o);
  sched->add_option("--out", o.out, "output file (default stdout)");

  auto* sim = app.add_subcommand("simulate", "run one experiment point");
  add_experiment_flags(sim, o);
  sim->add_option("--out", o.out, "output directory")->required();

  auto* sweep = app.add_subcommand("sweep", "run one experiment per value of an axis");
  add_experiment_flags(sweep, o);
  sweep->add_option("--axis", o.axis, "catalog, users, qmax, channels, buffer or seed");
  sweep->add_option("--values", o.values, "comma-separated axis values")->delimiter(',');
  sweep->add_option("--out", o.out, "output directory")->required();

  auto* verify = app.add_subcommand("verify", "check a schedule file against a workload");
  verify->add_option("--schedule", schedule_path, "schedule file")->required();
  verify->add_option("--workload", verify_workload, "workload file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return cmd_generate(o);
    if (sched->parsed()) return cmd_schedule(o);
    if (sim->parsed()) return cmd_run(o, false);
    if (sweep->parsed()) return cmd_run(o, true);
    if (verify->parsed()) return cmd_verify(schedule_path, verify_workload);
  } catch (const fpbs::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const fpbs::ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const fpbs::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const fpbs::InvariantError& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "file error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
  return 1;
}
