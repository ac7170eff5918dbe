#pragma once

// Domain types shared by every module: samples, pools, the annotation
// ledger and the error type.

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace alforge {

using SampleId = std::int64_t;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class ErrorCode {
  AnnotatedNotInUnlabeled,
  DuplicateAnnotation,
  DimensionMismatch,
  NonUnitInput,
  NoPositivePairs,
  DivergedLoss,
  InsufficientLabels,
  TooFewPoints,
  BadClusterIndex,
  NotAProbabilityVector,
  PoolExhausted,
  NoLabeledData,
  NoEligibleClusters,
  PlacementFailure,
  BudgetExhausted,
  MalformedHeader,
  MalformedRow,
  BadCategoryCode,
  ClassOutOfRange,
  BadSampleId,
  AlreadyAnnotated,
  UnknownId,
  EmptyTestSet,
  ZeroAccuracy,
  InvalidConfig,
  Io,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

enum class Category : int { InDistribution = 0, Ambiguous = 1, OutOfDistribution = 2 };
enum class Origin { Generated, Ingested };

const char* to_string(Category c);

/// Hidden ground truth. `cls` is 1..K for iD samples and -1 otherwise.
struct Truth {
  Category category = Category::InDistribution;
  int cls = -1;

  bool in_distribution() const { return category == Category::InDistribution; }
  friend bool operator==(const Truth&, const Truth&) = default;
};

struct Sample {
  SampleId id = 0;
  Vector x;
  Truth truth;
  Origin origin = Origin::Generated;
};

/// A pool of samples with dense ids 0..n-1. Column `id` of `inputs()` is the
/// feature vector of sample `id`.
class Dataset {
 public:
  Dataset() = default;
  Dataset(int num_classes, Matrix inputs, std::vector<Truth> truth, Origin origin = Origin::Generated);

  int num_classes() const { return num_classes_; }
  int dim() const { return static_cast<int>(inputs_.rows()); }
  std::size_t size() const { return truth_.size(); }
  bool empty() const { return truth_.empty(); }

  const Matrix& inputs() const { return inputs_; }
  const Truth& truth(SampleId id) const;
  Origin origin() const { return origin_; }
  Sample sample(SampleId id) const;

  std::size_t count(Category c) const;

 private:
  int num_classes_ = 0;
  Matrix inputs_;
  std::vector<Truth> truth_;
  Origin origin_ = Origin::Generated;
};

struct LabeledExample {
  SampleId id = 0;
  int label = 0;  // 1..K, or K+1 for the auxiliary non-iD class

  friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

/// Disjoint labeled / unlabeled pools. Mutated only through pool_update.
struct PoolState {
  std::vector<LabeledExample> labeled;
  std::set<SampleId> unlabeled;
  int stage = 0;
  std::size_t initial_size = 0;

  static PoolState all_unlabeled(std::size_t n);
};

PoolState pool_update(const PoolState& pool, std::span<const LabeledExample> annotated);

struct StageCounts {
  std::int64_t in_distribution = 0;
  std::int64_t ambiguous = 0;
  std::int64_t out_of_distribution = 0;

  std::int64_t total() const { return in_distribution + ambiguous + out_of_distribution; }
  std::int64_t non_id() const { return ambiguous + out_of_distribution; }
};

class AnnotationLedger {
 public:
  AnnotationLedger() = default;
  explicit AnnotationLedger(std::vector<StageCounts> stages) : stages_(std::move(stages)) {}

  void open_stage() { stages_.emplace_back(); }
  /// Charges one query to the current stage, opening one if none exists.
  void record(Category c);

  const std::vector<StageCounts>& stages() const { return stages_; }
  std::int64_t cumulative_cost() const;

 private:
  std::vector<StageCounts> stages_;
};

struct LedgerTotals {
  std::int64_t cost = 0;
  std::int64_t id_count = 0;
  std::int64_t non_id_count = 0;
  friend bool operator==(const LedgerTotals&, const LedgerTotals&) = default;
};

LedgerTotals ledger_totals(const AnnotationLedger& ledger);

// Line-oriented text format: header `n d K`, then `id category class v_1 .. v_d`.
void write_dataset(std::ostream& out, const Dataset& data);
Dataset read_dataset(std::istream& in);
void save_dataset(const std::string& path, const Dataset& data);
Dataset load_dataset(const std::string& path);

/// 64-bit FNV-1a over raw bytes; used as a content digest.
std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t file_digest(const std::string& path);
std::string hex_digest(std::uint64_t h);

}  // namespace alforge
