#include "alforge/driver.hpp"
#include "alforge/text.hpp"

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <ostream>

namespace alforge::driver {

using acquisition::Strategy;

namespace {
// Seed-derivation tags, one per random phase.
constexpr std::uint64_t kTagRepresentationInit = 10;
constexpr std::uint64_t kTagRepresentationContinue = 11;
constexpr std::uint64_t kTagKMeans = 12;
constexpr std::uint64_t kTagAcquire = 13;
constexpr std::uint64_t kTagFinetune = 14;
constexpr std::uint64_t kTagBaseline = 15;

learner::TrainConfig seeded(learner::TrainConfig c, std::uint64_t seed) {
  c.seed = seed;
  return c;
}
}  // namespace

// --- oracle -----------------------------------------------------------------

SimulatedOracle::SimulatedOracle(const Dataset& data) : data_(&data), annotated_(data.size(), false) {}

const Truth& SimulatedOracle::read_truth(SampleId id) {
  truth_log_.push_back(id);
  return data_->truth(id);
}

LabeledExample SimulatedOracle::annotate(SampleId id) {
  if (id < 0 || static_cast<std::size_t>(id) >= data_->size())
    throw Error(ErrorCode::UnknownId, "no sample with id " + std::to_string(id));
  if (annotated_[static_cast<std::size_t>(id)])
    throw Error(ErrorCode::AlreadyAnnotated, "sample " + std::to_string(id) + " was already annotated");
  const Truth& t = read_truth(id);
  annotated_[static_cast<std::size_t>(id)] = true;
  ++calls_;
  ledger_.record(t.category);
  return LabeledExample{id, t.in_distribution() ? t.cls : data_->num_classes() + 1};
}

std::optional<LabeledExample> SimulatedOracle::draw_free_in_distribution(SampleId id) {
  if (id < 0 || static_cast<std::size_t>(id) >= data_->size())
    throw Error(ErrorCode::UnknownId, "no sample with id " + std::to_string(id));
  if (annotated_[static_cast<std::size_t>(id)])
    throw Error(ErrorCode::AlreadyAnnotated, "sample " + std::to_string(id) + " was already annotated");
  if (!data_->truth(id).in_distribution()) {
    truth_log_.push_back(id);
    return std::nullopt;
  }
  return annotate(id);
}

// --- config -----------------------------------------------------------------

learner::TrainConfig ExperimentConfig::default_representation_initial() {
  learner::TrainConfig c;
  c.epochs = 20;
  c.batch_size_unlabeled = 256;
  c.batch_size_labeled = 64;
  c.learning_rate = 0.05;
  return c;
}

learner::TrainConfig ExperimentConfig::default_representation_continue() {
  learner::TrainConfig c = default_representation_initial();
  c.epochs = 1;
  c.learning_rate = 0.01;
  return c;
}

learner::TrainConfig ExperimentConfig::default_finetune() {
  learner::TrainConfig c;
  c.epochs = 30;
  c.batch_size_labeled = 32;
  c.learning_rate = 0.02;
  return c;
}

learner::TrainConfig ExperimentConfig::default_baseline() { return default_finetune(); }

void ExperimentConfig::validate() const {
  if (initial_id < 1) throw Error(ErrorCode::InvalidConfig, "initial_id must be >= 1");
  if (per_stage_id < 1) throw Error(ErrorCode::InvalidConfig, "per_stage_id must be >= 1");
  if (target_id < initial_id) throw Error(ErrorCode::InvalidConfig, "target_id must be >= initial_id");
  if (kmeans_n_init < 1) throw Error(ErrorCode::InvalidConfig, "kmeans_n_init must be >= 1");
  if (kmeans_max_iter < 1) throw Error(ErrorCode::InvalidConfig, "kmeans_max_iter must be >= 1");
  if (!(loss.tau > 0.0)) throw Error(ErrorCode::InvalidConfig, "tau must be > 0");
  representation_initial.validate();
  representation_continue.validate();
  finetune.validate();
  baseline.validate();
}

// --- metrics ----------------------------------------------------------------

double evaluate_accuracy(const learner::EncoderParams& params, const Dataset& test) {
  if (test.empty()) throw Error(ErrorCode::EmptyTestSet, "test set is empty");
  if (test.dim() != params.arch.input_dim)
    throw Error(ErrorCode::DimensionMismatch, "test dimension does not match the model");
  const int k = test.num_classes();
  if (params.arch.num_outputs < k)
    throw Error(ErrorCode::DimensionMismatch, "classifier has fewer outputs than test classes");
  const Matrix logits = learner::forward(params, test.inputs(), false, true).logits;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const Truth& t = test.truth(static_cast<SampleId>(i));
    if (!t.in_distribution())
      throw Error(ErrorCode::ClassOutOfRange, "test sample " + std::to_string(i) + " is not in-distribution");
    Eigen::Index arg = 0;
    logits.col(static_cast<Eigen::Index>(i)).head(k).maxCoeff(&arg);
    if (static_cast<int>(arg) + 1 == t.cls) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(test.size());
}

double cost_per_accuracy(std::int64_t cost, double accuracy_percent) {
  if (!(accuracy_percent > 0.0)) throw Error(ErrorCode::ZeroAccuracy, "accuracy must be positive");
  return std::round(static_cast<double>(cost) / accuracy_percent * 100.0) / 100.0;
}

learner::EncoderParams initial_representation(const Dataset& pool, const ExperimentConfig& cfg) {
  const learner::Architecture arch = learner::default_architecture(pool.dim(), pool.num_classes() + 1);
  const std::uint64_t seed = derive_seed(cfg.seed, {kTagRepresentationInit});
  const learner::EncoderParams init = learner::EncoderParams::random(arch, seed);
  return learner::train_representation(PoolState::all_unlabeled(pool.size()), pool.inputs(),
                                       seeded(cfg.representation_initial, seed), init, cfg.loss)
      .params;
}

// --- experiment -------------------------------------------------------------

Experiment::Experiment(const Dataset& pool, const Dataset& test, ExperimentConfig cfg,
                       std::optional<learner::EncoderParams> stage0)
    : data_(&pool),
      test_(&test),
      cfg_(std::move(cfg)),
      oracle_(pool),
      pool_(PoolState::all_unlabeled(pool.size())),
      representation_(std::move(stage0)) {
  cfg_.validate();
  if (pool.empty()) throw Error(ErrorCode::PoolExhausted, "unlabeled pool is empty");
  if (test.num_classes() != pool.num_classes() || test.dim() != pool.dim())
    throw Error(ErrorCode::DimensionMismatch, "test set does not match the pool");
}

std::int64_t Experiment::labeled_id() const {
  const int aux = data_->num_classes() + 1;
  return std::count_if(pool_.labeled.begin(), pool_.labeled.end(),
                       [aux](const LabeledExample& e) { return e.label != aux; });
}

bool Experiment::done() const { return exhausted_ || (bootstrapped_ && labeled_id() >= cfg_.target_id); }

void Experiment::refresh_clusters() {
  features_ = learner::representations(*representation_, data_->inputs());
  std::vector<SampleId> ids(data_->size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<SampleId>(i);
  clustering::KMeansOptions opts;
  opts.k = data_->num_classes() + 1;
  opts.seed = derive_seed(cfg_.seed, {kTagKMeans, static_cast<std::uint64_t>(pool_.stage)});
  opts.n_init = cfg_.kmeans_n_init;
  opts.max_iter = cfg_.kmeans_max_iter;
  clusters_ = clustering::kmeans_fit(ids, features_, opts);
}

acquisition::AcquisitionResult Experiment::acquire(int n_id, bool first) {
  acquisition::AcquisitionRequest req;
  req.n_id = n_id;
  req.strategy = cfg_.strategy;
  req.seed = derive_seed(cfg_.seed, {kTagAcquire, static_cast<std::uint64_t>(pool_.stage)});

  switch (cfg_.strategy) {
    case Strategy::DistanceCL: {
      acquisition::DistanceClOptions opts;
      opts.refresh_radius_per_sample = cfg_.refresh_radius_per_sample;
      return acquisition::acquire_distance_cl(*clusters_, pool_, features_, req, oracle_, opts);
    }
    case Strategy::RandomCL:
      return acquisition::acquire_random_cl(*clusters_, pool_, req, oracle_);
    default:
      break;
  }

  const std::vector<SampleId> stream =
      acquisition::acquire_uncertainty(pool_, first ? nullptr : &classifier_, data_->inputs(), req);
  if (!(first && cfg_.baseline_free_bootstrap)) return acquisition::consume_stream(stream, n_id, oracle_);

  acquisition::AcquisitionResult r;
  for (SampleId id : stream) {
    if (r.id_found >= n_id) break;
    if (auto e = oracle_.draw_free_in_distribution(id)) {
      r.annotated.push_back(*e);
      ++r.id_found;
    }
  }
  r.exhausted = r.id_found < n_id;
  return r;
}

void Experiment::train_classifier() {
  const int k = data_->num_classes();
  const std::uint64_t stage = static_cast<std::uint64_t>(pool_.stage);
  if (acquisition::uses_clusters(cfg_.strategy)) {
    classifier_ = learner::finetune_classifier(*representation_, pool_.labeled, data_->inputs(), k,
                                               seeded(cfg_.finetune, derive_seed(cfg_.seed, {kTagFinetune, stage})))
                      .params;
  } else {
    classifier_ = learner::train_supervised_baseline(
                      learner::default_architecture(data_->dim(), k + 1), pool_.labeled, data_->inputs(), k,
                      seeded(cfg_.baseline, derive_seed(cfg_.seed, {kTagBaseline, stage})))
                      .params;
  }
}

StageMetrics Experiment::complete_stage(const acquisition::AcquisitionResult& acquired) {
  const int stage = static_cast<int>(oracle_.ledger().stages().size()) - 1;
  pool_ = pool_update(pool_, acquired.annotated);
  if (!acquired.annotated.empty() || stage == 0) train_classifier();
  if (acquired.exhausted) exhausted_ = true;

  StageMetrics m;
  m.stage = stage;
  m.labeled_id = labeled_id();
  m.queried = oracle_.ledger().stages().back();
  m.cumulative_cost = oracle_.ledger().cumulative_cost();
  m.test_accuracy = evaluate_accuracy(classifier_, *test_);
  m.labeled_size = pool_.labeled.size();
  m.unlabeled_size = pool_.unlabeled.size();
  m.exhausted = acquired.exhausted;
  spdlog::info("{} stage {}: labeled_id={} queried={}/{}/{} cost={} acc={:.2f}{}",
               acquisition::to_string(cfg_.strategy), m.stage, m.labeled_id, m.queried.in_distribution,
               m.queried.ambiguous, m.queried.out_of_distribution, m.cumulative_cost, m.test_accuracy,
               m.exhausted ? " (pool exhausted)" : "");
  return m;
}

StageMetrics Experiment::bootstrap() {
  if (bootstrapped_) throw Error(ErrorCode::InvalidConfig, "bootstrap already ran");
  oracle_.ledger().open_stage();
  if (acquisition::uses_clusters(cfg_.strategy)) {
    if (!representation_) representation_ = initial_representation(*data_, cfg_);
    refresh_clusters();
  }
  const acquisition::AcquisitionResult acquired = acquire(cfg_.initial_id, true);
  if (acquired.exhausted)
    throw Error(ErrorCode::PoolExhausted, "pool ran out after " + std::to_string(acquired.id_found) + " of " +
                                              std::to_string(cfg_.initial_id) + " initial iD samples");
  bootstrapped_ = true;
  return complete_stage(acquired);
}

StageMetrics Experiment::run_stage() {
  if (!bootstrapped_) throw Error(ErrorCode::InvalidConfig, "run_stage before bootstrap");
  if (done()) throw Error(ErrorCode::InvalidConfig, "experiment already reached its target");
  oracle_.ledger().open_stage();
  if (acquisition::uses_clusters(cfg_.strategy)) {
    const std::uint64_t seed =
        derive_seed(cfg_.seed, {kTagRepresentationContinue, static_cast<std::uint64_t>(pool_.stage)});
    representation_ = learner::train_representation(pool_, data_->inputs(), seeded(cfg_.representation_continue, seed),
                                                    *representation_, cfg_.loss)
                          .params;
    refresh_clusters();
  }
  const int want = static_cast<int>(std::min<std::int64_t>(cfg_.per_stage_id, cfg_.target_id - labeled_id()));
  return complete_stage(acquire(want, false));
}

std::vector<StageMetrics> run_experiment(const Dataset& pool, const Dataset& test, const ExperimentConfig& cfg,
                                         const StageObserver& observer, std::optional<learner::EncoderParams> stage0) {
  Experiment exp(pool, test, cfg, std::move(stage0));
  std::vector<StageMetrics> series;
  series.push_back(exp.bootstrap());
  if (observer) observer(series.back());
  while (!exp.done()) {
    series.push_back(exp.run_stage());
    if (observer) observer(series.back());
  }
  return series;
}

// --- outputs ----------------------------------------------------------------

void write_metrics_csv(std::ostream& out, const std::vector<StageMetrics>& series) {
  out << "stage,labeled_id,queried_id,queried_ambiguous,queried_ood,cumulative_cost,test_accuracy\n";
  for (const StageMetrics& m : series) {
    out << m.stage << ',' << m.labeled_id << ',' << m.queried.in_distribution << ',' << m.queried.ambiguous << ','
        << m.queried.out_of_distribution << ',' << m.cumulative_cost << ',' << text::format_fixed(m.test_accuracy, 4)
        << '\n';
  }
}

Summary summarize(Strategy strategy, const std::vector<StageMetrics>& series) {
  if (series.empty()) throw Error(ErrorCode::InvalidConfig, "empty metrics series");
  const StageMetrics& last = series.back();
  Summary s;
  s.strategy = std::string(acquisition::to_string(strategy));
  s.final_accuracy = last.test_accuracy;
  s.final_cost = last.cumulative_cost;
  s.cost_per_accuracy = cost_per_accuracy(last.cumulative_cost, last.test_accuracy);
  s.labeled_id = last.labeled_id;
  s.stages = static_cast<int>(series.size());
  s.exhausted = last.exhausted;
  return s;
}

std::string summary_json(const Summary& s) {
  nlohmann::ordered_json j;
  j["strategy"] = s.strategy;
  j["final_accuracy"] = s.final_accuracy;
  j["final_cost"] = s.final_cost;
  j["cost_per_accuracy"] = s.cost_per_accuracy;
  j["labeled_id"] = s.labeled_id;
  j["stages"] = s.stages;
  j["exhausted"] = s.exhausted;
  return j.dump(2) + "\n";
}

Summary parse_summary(const std::string& text) {
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    Summary s;
    s.strategy = j.at("strategy").get<std::string>();
    s.final_accuracy = j.at("final_accuracy").get<double>();
    s.final_cost = j.at("final_cost").get<std::int64_t>();
    s.cost_per_accuracy = cost_per_accuracy(s.final_cost, s.final_accuracy);
    s.labeled_id = j.value("labeled_id", std::int64_t{0});
    s.stages = j.value("stages", 0);
    s.exhausted = j.value("exhausted", false);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("malformed summary: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("malformed summary: ") + e.what());
  }
}

}  // namespace alforge::driver
