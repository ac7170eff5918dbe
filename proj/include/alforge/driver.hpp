#pragma once

// Simulated annotator and the stage loop:
// acquire -> annotate -> update pools -> retrain -> evaluate -> record.

#include "alforge/acquisition.hpp"
#include "alforge/clustering.hpp"
#include "alforge/core.hpp"
#include "alforge/learner.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace alforge::driver {

/// Answers queries from the hidden ground truth and charges each one to the
/// ledger. Every truth read is logged so tests can check that nothing but the
/// oracle looks at labels.
class SimulatedOracle : public acquisition::Oracle {
 public:
  explicit SimulatedOracle(const Dataset& data);

  LabeledExample annotate(SampleId id) override;
  int num_classes() const override { return data_->num_classes(); }

  /// Free bootstrap for baselines: an iD sample is annotated and charged as
  /// usual; a non-iD sample is passed over, uncharged and unlabeled.
  std::optional<LabeledExample> draw_free_in_distribution(SampleId id);

  AnnotationLedger& ledger() { return ledger_; }
  const AnnotationLedger& ledger() const { return ledger_; }
  std::size_t calls() const { return calls_; }
  /// Ids whose truth was read, in order.
  const std::vector<SampleId>& truth_log() const { return truth_log_; }

 private:
  const Truth& read_truth(SampleId id);

  const Dataset* data_;
  AnnotationLedger ledger_;
  std::vector<bool> annotated_;
  std::size_t calls_ = 0;
  std::vector<SampleId> truth_log_;
};

struct StageMetrics {
  int stage = 0;
  std::int64_t labeled_id = 0;
  StageCounts queried;  // this stage only
  std::int64_t cumulative_cost = 0;
  double test_accuracy = 0.0;  // percent
  std::size_t labeled_size = 0;
  std::size_t unlabeled_size = 0;
  bool exhausted = false;
};

struct ExperimentConfig {
  acquisition::Strategy strategy = acquisition::Strategy::DistanceCL;
  int initial_id = 100;
  int per_stage_id = 10;
  int target_id = 300;

  // Seeds inside these are ignored; every phase derives its own from `seed`.
  learner::TrainConfig representation_initial = default_representation_initial();
  learner::TrainConfig representation_continue = default_representation_continue();
  learner::TrainConfig finetune = default_finetune();
  learner::TrainConfig baseline = default_baseline();
  learner::LossConfig loss;

  int kmeans_n_init = 10;
  int kmeans_max_iter = 300;
  bool baseline_free_bootstrap = true;
  bool refresh_radius_per_sample = false;
  std::uint64_t seed = 0;

  static learner::TrainConfig default_representation_initial();
  static learner::TrainConfig default_representation_continue();
  static learner::TrainConfig default_finetune();
  static learner::TrainConfig default_baseline();
  void validate() const;
};

/// Percentage of test samples whose argmax over the K iD logits (lowest index
/// on ties) matches the class. The auxiliary logit is ignored.
double evaluate_accuracy(const learner::EncoderParams& params, const Dataset& test);

/// cost / accuracy rounded to two decimals.
double cost_per_accuracy(std::int64_t cost, double accuracy_percent);

/// Stage-0 representation: contrastive training on the whole unlabeled pool.
/// Pure function of the pool inputs and config, so runs sharing a seed may
/// share it.
learner::EncoderParams initial_representation(const Dataset& pool, const ExperimentConfig& cfg);

class Experiment {
 public:
  /// `pool` and `test` must outlive the experiment. `stage0` optionally
  /// supplies a precomputed initial_representation for the same config.
  Experiment(const Dataset& pool, const Dataset& test, ExperimentConfig cfg,
             std::optional<learner::EncoderParams> stage0 = std::nullopt);

  /// Annotates until initial_id iD samples are labeled, trains the first
  /// classifier and returns the stage-0 row. Throws PoolExhausted.
  StageMetrics bootstrap();
  /// One acquisition round. On exhaustion the partial row has `exhausted`.
  StageMetrics run_stage();
  bool done() const;

  const PoolState& pool() const { return pool_; }
  const SimulatedOracle& oracle() const { return oracle_; }
  const learner::EncoderParams& classifier() const { return classifier_; }
  std::int64_t labeled_id() const;

 private:
  acquisition::AcquisitionResult acquire(int n_id, bool first);
  void refresh_clusters();
  void train_classifier();
  StageMetrics complete_stage(const acquisition::AcquisitionResult& acquired);

  const Dataset* data_;
  const Dataset* test_;
  ExperimentConfig cfg_;
  SimulatedOracle oracle_;
  PoolState pool_;
  std::optional<learner::EncoderParams> representation_;
  learner::EncoderParams classifier_;
  std::optional<clustering::ClusterModel> clusters_;
  Matrix features_;
  bool bootstrapped_ = false;
  bool exhausted_ = false;
};

using StageObserver = std::function<void(const StageMetrics&)>;

/// Bootstrap, then stages until the target or exhaustion. Includes stage 0.
std::vector<StageMetrics> run_experiment(const Dataset& pool, const Dataset& test, const ExperimentConfig& cfg,
                                         const StageObserver& observer = {},
                                         std::optional<learner::EncoderParams> stage0 = std::nullopt);

void write_metrics_csv(std::ostream& out, const std::vector<StageMetrics>& series);

struct Summary {
  std::string strategy;  // CLI spelling
  double final_accuracy = 0.0;
  std::int64_t final_cost = 0;
  double cost_per_accuracy = 0.0;
  std::int64_t labeled_id = 0;
  int stages = 0;
  bool exhausted = false;
};

Summary summarize(acquisition::Strategy strategy, const std::vector<StageMetrics>& series);
std::string summary_json(const Summary& s);
/// Throws InvalidConfig on malformed input.
Summary parse_summary(const std::string& text);

}  // namespace alforge::driver
