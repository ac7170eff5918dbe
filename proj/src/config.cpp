#include "alforge/config.hpp"
#include "alforge/text.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <set>
#include <sstream>

namespace alforge::config {

namespace pt = boost::property_tree;

namespace {

Entries flatten(const pt::ptree& tree) {
  Entries out;
  for (const auto& [section, body] : tree) {
    if (body.empty())
      throw Error(ErrorCode::InvalidConfig, "key `" + section + "` must sit inside a [section]");
    for (const auto& [key, value] : body) out[section + "." + key] = std::string(text::trim(value.data()));
  }
  return out;
}

std::pair<std::string, std::string> split_key(const std::string& full) {
  const auto dot = full.find('.');
  if (dot == std::string::npos) return {"", full};
  return {full.substr(0, dot), full.substr(dot + 1)};
}

[[noreturn]] void unknown(const std::string& full) {
  throw Error(ErrorCode::InvalidConfig, "unknown config key `" + full + "`");
}

const std::set<std::string> kTrainSections = {"representation_initial", "representation_continue", "finetune",
                                              "baseline"};

learner::TrainConfig& train_section(driver::ExperimentConfig& e, const std::string& section) {
  if (section == "representation_initial") return e.representation_initial;
  if (section == "representation_continue") return e.representation_continue;
  if (section == "finetune") return e.finetune;
  return e.baseline;
}

void set_experiment_field(driver::ExperimentConfig& e, const std::string& key, const std::string& v,
                          const std::string& full) {
  using namespace text;
  if (key == "strategy") {
    const auto s = acquisition::parse_strategy(trim(v));
    if (!s)
      throw Error(ErrorCode::InvalidConfig,
                  full + ": unknown strategy `" + v + "` (expected random, least_confidence, entropy, random_cl or "
                                                      "distance_cl)");
    e.strategy = *s;
  } else if (key == "initial_id") e.initial_id = parse_int(v, full);
  else if (key == "per_stage_id") e.per_stage_id = parse_int(v, full);
  else if (key == "target_id") e.target_id = parse_int(v, full);
  else if (key == "seed") e.seed = parse_u64(v, full);
  else if (key == "tau") e.loss.tau = parse_double(v, full);
  else if (key == "kmeans_n_init") e.kmeans_n_init = parse_int(v, full);
  else if (key == "kmeans_max_iter") e.kmeans_max_iter = parse_int(v, full);
  else if (key == "baseline_free_bootstrap") e.baseline_free_bootstrap = parse_bool(v, full);
  else if (key == "refresh_radius_per_sample") e.refresh_radius_per_sample = parse_bool(v, full);
  else unknown(full);
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

}  // namespace

Entries parse_text(const std::string& text) {
  std::istringstream in(text);
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("config: ") + e.what());
  }
  return flatten(tree);
}

Entries read_file(const std::string& path) {
  pt::ptree tree;
  try {
    pt::read_ini(path, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("config: ") + e.what());
  }
  return flatten(tree);
}

void apply_override(Entries& entries, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const std::string key(text::trim(std::string_view(assignment).substr(0, eq)));
  if (eq == std::string::npos || key.find('.') == std::string::npos)
    throw Error(ErrorCode::InvalidConfig, "override `" + assignment + "` must look like section.key=value");
  entries[key] = std::string(text::trim(std::string_view(assignment).substr(eq + 1)));
}

std::vector<std::pair<std::string, std::string>> train_entries(const learner::TrainConfig& c) {
  using text::format_double;
  return {
      {"epochs", std::to_string(c.epochs)},
      {"batch_size_unlabeled", std::to_string(c.batch_size_unlabeled)},
      {"batch_size_labeled", std::to_string(c.batch_size_labeled)},
      {"learning_rate", format_double(c.learning_rate)},
      {"momentum", format_double(c.momentum)},
      {"weight_decay", format_double(c.weight_decay)},
      {"augment_noise_sigma", format_double(c.augment_noise_sigma)},
      {"augment_mask_prob", format_double(c.augment_mask_prob)},
      {"label_smoothing", format_double(c.label_smoothing)},
  };
}

bool set_train_field(learner::TrainConfig& c, const std::string& key, const std::string& v) {
  using namespace text;
  if (key == "epochs") c.epochs = parse_int(v, key);
  else if (key == "batch_size_unlabeled") c.batch_size_unlabeled = parse_int(v, key);
  else if (key == "batch_size_labeled") c.batch_size_labeled = parse_int(v, key);
  else if (key == "learning_rate") c.learning_rate = parse_double(v, key);
  else if (key == "momentum") c.momentum = parse_double(v, key);
  else if (key == "weight_decay") c.weight_decay = parse_double(v, key);
  else if (key == "augment_noise_sigma") c.augment_noise_sigma = parse_double(v, key);
  else if (key == "augment_mask_prob") c.augment_mask_prob = parse_double(v, key);
  else if (key == "label_smoothing") c.label_smoothing = parse_double(v, key);
  else return false;
  return true;
}

benchgen::BenchmarkSpec benchmark_from(const Entries& entries, bool accept_manifest) {
  benchgen::BenchmarkSpec spec;
  for (const auto& [full, value] : entries) {
    const auto [section, key] = split_key(full);
    if (section == "benchmark") {
      try {
        if (!benchgen::set_spec_field(spec, key, value)) unknown(full);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidConfig && std::string(e.what()).rfind(key, 0) == 0)
          throw Error(ErrorCode::InvalidConfig, "benchmark." + std::string(e.what()));
        throw;
      }
    } else if (!(accept_manifest && (section == "counts" || section == "files"))) {
      unknown(full);
    }
  }
  return spec;
}

RunConfig run_config_from(const Entries& entries) {
  RunConfig cfg;
  Entries bench;
  for (const auto& [full, value] : entries) {
    const auto [section, key] = split_key(full);
    if (section == "data") {
      if (key == "dataset") cfg.dataset = value;
      else if (key == "test") cfg.test = value;
      else unknown(full);
    } else if (section == "output") {
      if (key == "metrics") cfg.metrics_path = value;
      else if (key == "summary") cfg.summary_path = value;
      else unknown(full);
    } else if (section == "experiment") {
      set_experiment_field(cfg.experiment, key, value, full);
    } else if (kTrainSections.count(section)) {
      try {
        if (!set_train_field(train_section(cfg.experiment, section), key, value)) unknown(full);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidConfig && std::string(e.what()).rfind(key, 0) == 0)
          throw Error(ErrorCode::InvalidConfig, section + "." + e.what());
        throw;
      }
    } else if (section == "benchmark") {
      bench[full] = value;
    } else {
      unknown(full);
    }
  }
  if (!bench.empty()) cfg.benchmark = benchmark_from(bench);
  if (cfg.dataset.empty() && !cfg.benchmark)
    throw Error(ErrorCode::InvalidConfig, "data.dataset is required unless a [benchmark] section is given");
  if (cfg.test.empty() && !cfg.dataset.empty()) cfg.test = benchgen::test_path_for(cfg.dataset);
  cfg.experiment.validate();
  return cfg;
}

std::vector<Section> resolved(const RunConfig& cfg) {
  const driver::ExperimentConfig& e = cfg.experiment;
  std::vector<Section> out;
  if (!cfg.dataset.empty()) out.push_back({"data", {{"dataset", cfg.dataset}, {"test", cfg.test}}});
  if (cfg.benchmark) out.push_back(resolved(*cfg.benchmark).front());
  out.push_back({"output", {{"metrics", cfg.metrics_path}, {"summary", cfg.summary_path}}});
  out.push_back({"experiment",
                 {{"strategy", std::string(acquisition::to_string(e.strategy))},
                  {"initial_id", std::to_string(e.initial_id)},
                  {"per_stage_id", std::to_string(e.per_stage_id)},
                  {"target_id", std::to_string(e.target_id)},
                  {"seed", std::to_string(e.seed)},
                  {"tau", text::format_double(e.loss.tau)},
                  {"kmeans_n_init", std::to_string(e.kmeans_n_init)},
                  {"kmeans_max_iter", std::to_string(e.kmeans_max_iter)},
                  {"baseline_free_bootstrap", bool_text(e.baseline_free_bootstrap)},
                  {"refresh_radius_per_sample", bool_text(e.refresh_radius_per_sample)}}});
  out.push_back({"representation_initial", train_entries(e.representation_initial)});
  out.push_back({"representation_continue", train_entries(e.representation_continue)});
  out.push_back({"finetune", train_entries(e.finetune)});
  out.push_back({"baseline", train_entries(e.baseline)});
  return out;
}

std::vector<Section> resolved(const benchgen::BenchmarkSpec& spec) {
  return {{"benchmark", benchgen::spec_entries(spec)}};
}

std::string to_text(const std::vector<Section>& sections) {
  std::ostringstream out;
  for (std::size_t i = 0; i < sections.size(); ++i) {
    if (i) out << '\n';
    out << '[' << sections[i].first << "]\n";
    for (const auto& [k, v] : sections[i].second) out << k << " = " << v << '\n';
  }
  return out.str();
}

}  // namespace alforge::config
