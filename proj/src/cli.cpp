#include "alforge/cli.hpp"
#include "alforge/benchgen.hpp"
#include "alforge/config.hpp"
#include "alforge/text.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

namespace alforge::cli {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig:
      return kExitUsage;
    case ErrorCode::DivergedLoss:
    case ErrorCode::ZeroAccuracy:
    case ErrorCode::NonUnitInput:
    case ErrorCode::NotAProbabilityVector:
    case ErrorCode::NoPositivePairs:
      return kExitNumeric;
    default:
      return kExitData;
  }
}

std::vector<ComparisonRow> compare(const std::vector<driver::Summary>& summaries) {
  std::vector<ComparisonRow> rows;
  for (const driver::Summary& s : summaries) {
    ComparisonRow r;
    const auto parsed = acquisition::parse_strategy(s.strategy);
    r.strategy = parsed ? std::string(acquisition::display_name(*parsed)) : s.strategy;
    r.accuracy = s.final_accuracy;
    r.cost = s.final_cost;
    r.cost_per_accuracy = driver::cost_per_accuracy(s.final_cost, s.final_accuracy);
    rows.push_back(r);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const ComparisonRow& a, const ComparisonRow& b) {
    if (a.cost_per_accuracy != b.cost_per_accuracy) return a.cost_per_accuracy < b.cost_per_accuracy;
    return a.strategy < b.strategy;
  });
  return rows;
}

void write_comparison_text(std::ostream& out, const std::vector<ComparisonRow>& rows) {
  std::size_t width = std::string("Strategy").size();
  for (const ComparisonRow& r : rows) width = std::max(width, r.strategy.size());
  out << std::left << std::setw(static_cast<int>(width)) << "Strategy" << std::right << "  " << std::setw(8) << "Acc."
      << "  " << std::setw(8) << "Cost" << "  " << std::setw(10) << "Cost/Acc." << '\n';
  for (const ComparisonRow& r : rows) {
    out << std::left << std::setw(static_cast<int>(width)) << r.strategy << std::right << "  " << std::setw(8)
        << text::format_fixed(r.accuracy, 2) << "  " << std::setw(8) << r.cost << "  " << std::setw(10)
        << text::format_fixed(r.cost_per_accuracy, 2) << '\n';
  }
}

void write_comparison_csv(std::ostream& out, const std::vector<ComparisonRow>& rows) {
  out << "strategy,accuracy,cost,cost_per_accuracy\n";
  for (const ComparisonRow& r : rows)
    out << '"' << r.strategy << "\"," << text::format_fixed(r.accuracy, 2) << ',' << r.cost << ','
        << text::format_fixed(r.cost_per_accuracy, 2) << '\n';
}

void configure_logging() {
  static bool configured = false;
  if (!configured) {
    auto logger = spdlog::stderr_logger_mt("al_forge");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    configured = true;
  }
  const char* env = std::getenv("AL_FORGE_LOG");
  const std::string level = env ? env : "info";
  if (level == "error") spdlog::set_level(spdlog::level::err);
  else if (level == "debug") spdlog::set_level(spdlog::level::debug);
  else spdlog::set_level(spdlog::level::info);
}

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  out << body;
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
}

void log_resolved(const std::vector<config::Section>& sections) {
  spdlog::info("resolved config:\n{}", config::to_text(sections));
}

std::string strategy_list() { return "random, least_confidence, entropy, random_cl, distance_cl"; }

struct BenchgenArgs {
  std::string config, out;
  std::vector<std::string> sets;
  std::optional<int> k, dim, n_id, n_ambiguous, n_ood, n_test, committee_size;
  std::optional<double> separation, ood_offset;
  std::optional<std::uint64_t> seed;
};

struct RunArgs {
  std::string config, strategy, dataset, test, metrics, summary;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<int> initial_id, per_stage_id, target_id;
};

struct CompareArgs {
  std::vector<std::string> summaries;
  std::string csv;
};

template <class T>
void put(config::Entries& e, const std::string& key, const std::optional<T>& v) {
  if (v) e[key] = std::to_string(*v);
}

void put_double(config::Entries& e, const std::string& key, const std::optional<double>& v) {
  if (v) e[key] = text::format_double(*v);
}

int cmd_benchgen(const BenchgenArgs& a, std::ostream& out) {
  config::Entries e;
  if (!a.config.empty()) e = config::read_file(a.config);
  for (const std::string& s : a.sets) config::apply_override(e, s);
  put(e, "benchmark.num_classes", a.k);
  put(e, "benchmark.dim", a.dim);
  put(e, "benchmark.n_id", a.n_id);
  put(e, "benchmark.n_ambiguous", a.n_ambiguous);
  put(e, "benchmark.n_ood", a.n_ood);
  put(e, "benchmark.n_test", a.n_test);
  put(e, "benchmark.committee_size", a.committee_size);
  put_double(e, "benchmark.class_separation", a.separation);
  put_double(e, "benchmark.ood_offset", a.ood_offset);
  put(e, "benchmark.seed", a.seed);
  const benchgen::BenchmarkSpec spec = config::benchmark_from(e, true);
  spec.validate();
  log_resolved(config::resolved(spec));

  const benchgen::Benchmark bench = benchgen::assemble(spec);
  const benchgen::Manifest m = benchgen::write_benchmark(bench, spec, a.out);
  out << "wrote " << a.out << " (" << m.entries.at("counts.in_distribution") << " iD, "
      << m.entries.at("counts.ambiguous") << " ambiguous, " << m.entries.at("counts.out_of_distribution")
      << " OoD; digest " << m.entries.at("files.dataset_digest") << ")\n";
  out << "wrote " << benchgen::test_path_for(a.out) << " (" << m.entries.at("counts.test") << " test samples)\n";
  out << "wrote " << benchgen::manifest_path_for(a.out) << '\n';
  return kExitOk;
}

int cmd_run(const RunArgs& a, std::ostream& out, std::ostream& err) {
  config::Entries e;
  if (!a.config.empty()) e = config::read_file(a.config);
  for (const std::string& s : a.sets) config::apply_override(e, s);
  if (!a.strategy.empty()) {
    if (!acquisition::parse_strategy(a.strategy)) {
      err << "error: unknown strategy `" << a.strategy << "`; valid strategies: " << strategy_list() << '\n';
      return kExitUsage;
    }
    e["experiment.strategy"] = a.strategy;
  }
  put(e, "experiment.seed", a.seed);
  put(e, "experiment.initial_id", a.initial_id);
  put(e, "experiment.per_stage_id", a.per_stage_id);
  put(e, "experiment.target_id", a.target_id);
  if (!a.dataset.empty()) e["data.dataset"] = a.dataset;
  if (!a.test.empty()) e["data.test"] = a.test;
  if (!a.metrics.empty()) e["output.metrics"] = a.metrics;
  if (!a.summary.empty()) e["output.summary"] = a.summary;
  const config::RunConfig cfg = config::run_config_from(e);
  log_resolved(config::resolved(cfg));

  Dataset pool, test;
  if (!cfg.dataset.empty()) {
    pool = load_dataset(cfg.dataset);
    test = load_dataset(cfg.test);
  } else {
    benchgen::Benchmark bench = benchgen::assemble(*cfg.benchmark);
    pool = std::move(bench.pool);
    test = std::move(bench.test);
  }
  const auto series = driver::run_experiment(pool, test, cfg.experiment);

  std::ostringstream csv;
  driver::write_metrics_csv(csv, series);
  write_text(cfg.metrics_path, csv.str());
  const driver::Summary s = driver::summarize(cfg.experiment.strategy, series);
  write_text(cfg.summary_path, driver::summary_json(s));
  out << acquisition::display_name(cfg.experiment.strategy) << ": accuracy " << text::format_fixed(s.final_accuracy, 2)
      << "%, cost " << s.final_cost << ", cost/acc " << text::format_fixed(s.cost_per_accuracy, 2)
      << (s.exhausted ? " (pool exhausted)" : "") << '\n';
  return kExitOk;
}

int cmd_compare(const CompareArgs& a, std::ostream& out) {
  if (a.summaries.size() < 2) throw Error(ErrorCode::InvalidConfig, "compare needs at least two summaries");
  std::vector<driver::Summary> summaries;
  for (const std::string& path : a.summaries) {
    try {
      summaries.push_back(driver::parse_summary(read_text(path)));
    } catch (const Error& e) {
      throw Error(ErrorCode::InvalidConfig, path + ": " + e.what());
    }
  }
  const auto rows = compare(summaries);
  write_comparison_text(out, rows);
  if (!a.csv.empty()) {
    std::ostringstream csv;
    write_comparison_csv(csv, rows);
    write_text(a.csv, csv.str());
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Active learning on contaminated unlabeled pools", "al_forge"};
  app.require_subcommand(1);

  BenchgenArgs bg;
  CLI::App* benchgen_cmd = app.add_subcommand("benchgen", "Generate a synthetic benchmark pool, test set and manifest");
  benchgen_cmd->add_option("--out", bg.out, "Dataset path; test set and manifest are written next to it")->required();
  benchgen_cmd->add_option("--config", bg.config, "Config file with a [benchmark] section (a manifest works too)");
  benchgen_cmd->add_option("--set", bg.sets, "Override, e.g. benchmark.dim=8");
  benchgen_cmd->add_option("--k", bg.k, "Number of iD classes");
  benchgen_cmd->add_option("--dim", bg.dim, "Feature dimension");
  benchgen_cmd->add_option("--n-id", bg.n_id, "iD samples");
  benchgen_cmd->add_option("--n-ambiguous", bg.n_ambiguous, "Ambiguous samples");
  benchgen_cmd->add_option("--n-ood", bg.n_ood, "OoD samples");
  benchgen_cmd->add_option("--n-test", bg.n_test, "Held-out iD test samples");
  benchgen_cmd->add_option("--committee-size", bg.committee_size, "Committee members");
  benchgen_cmd->add_option("--separation", bg.separation, "Minimum distance between class means");
  benchgen_cmd->add_option("--ood-offset", bg.ood_offset, "Displacement of OoD means beyond the iD region");
  benchgen_cmd->add_option("--seed", bg.seed, "Seed");

  RunArgs ra;
  CLI::App* run_cmd = app.add_subcommand("run", "Run one active-learning experiment");
  run_cmd->add_option("--config", ra.config, "Experiment config file");
  run_cmd->add_option("--set", ra.sets, "Override, e.g. finetune.epochs=10");
  run_cmd->add_option("--strategy", ra.strategy, "One of: " + strategy_list());
  run_cmd->add_option("--seed", ra.seed, "Experiment seed");
  run_cmd->add_option("--dataset", ra.dataset, "Pool dataset file");
  run_cmd->add_option("--test", ra.test, "Test dataset file (default: <stem>.test.ds)");
  run_cmd->add_option("--metrics", ra.metrics, "Metrics CSV output");
  run_cmd->add_option("--summary", ra.summary, "JSON summary output");
  run_cmd->add_option("--initial-id", ra.initial_id, "Labeled iD samples after bootstrap");
  run_cmd->add_option("--per-stage-id", ra.per_stage_id, "iD samples acquired per stage");
  run_cmd->add_option("--target-id", ra.target_id, "Stop once this many iD samples are labeled");

  CompareArgs ca;
  CLI::App* compare_cmd = app.add_subcommand("compare", "Tabulate run summaries by Cost/Acc.");
  compare_cmd->add_option("summaries", ca.summaries, "Summary JSON files")->required();
  compare_cmd->add_option("--csv", ca.csv, "Also write the table as CSV");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    configure_logging();
    if (*benchgen_cmd) return cmd_benchgen(bg, out);
    if (*run_cmd) return cmd_run(ra, out, err);
    return cmd_compare(ca, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  }
}

}  // namespace alforge::cli
