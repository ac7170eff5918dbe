#include "alforge/core.hpp"

#include <unordered_set>

namespace alforge {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::AnnotatedNotInUnlabeled: return "AnnotatedNotInUnlabeled";
    case ErrorCode::DuplicateAnnotation: return "DuplicateAnnotation";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonUnitInput: return "NonUnitInput";
    case ErrorCode::NoPositivePairs: return "NoPositivePairs";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::InsufficientLabels: return "InsufficientLabels";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::BadClusterIndex: return "BadClusterIndex";
    case ErrorCode::NotAProbabilityVector: return "NotAProbabilityVector";
    case ErrorCode::PoolExhausted: return "PoolExhausted";
    case ErrorCode::NoLabeledData: return "NoLabeledData";
    case ErrorCode::NoEligibleClusters: return "NoEligibleClusters";
    case ErrorCode::PlacementFailure: return "PlacementFailure";
    case ErrorCode::BudgetExhausted: return "BudgetExhausted";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::BadCategoryCode: return "BadCategoryCode";
    case ErrorCode::ClassOutOfRange: return "ClassOutOfRange";
    case ErrorCode::BadSampleId: return "BadSampleId";
    case ErrorCode::AlreadyAnnotated: return "AlreadyAnnotated";
    case ErrorCode::UnknownId: return "UnknownId";
    case ErrorCode::EmptyTestSet: return "EmptyTestSet";
    case ErrorCode::ZeroAccuracy: return "ZeroAccuracy";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

const char* to_string(Category c) {
  switch (c) {
    case Category::InDistribution: return "iD";
    case Category::Ambiguous: return "ambiguous";
    case Category::OutOfDistribution: return "OoD";
  }
  return "?";
}

Dataset::Dataset(int num_classes, Matrix inputs, std::vector<Truth> truth, Origin origin)
    : num_classes_(num_classes), inputs_(std::move(inputs)), truth_(std::move(truth)), origin_(origin) {
  if (num_classes_ < 1) throw Error(ErrorCode::InvalidConfig, "dataset needs K >= 1");
  if (static_cast<std::size_t>(inputs_.cols()) != truth_.size())
    throw Error(ErrorCode::DimensionMismatch, "inputs have " + std::to_string(inputs_.cols()) +
                                                  " columns but " + std::to_string(truth_.size()) + " truth tags");
  for (std::size_t i = 0; i < truth_.size(); ++i) {
    const Truth& t = truth_[i];
    if (t.in_distribution() ? (t.cls < 1 || t.cls > num_classes_) : t.cls != -1)
      throw Error(ErrorCode::ClassOutOfRange, "sample " + std::to_string(i) + " has class " + std::to_string(t.cls));
  }
}

const Truth& Dataset::truth(SampleId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= truth_.size())
    throw Error(ErrorCode::UnknownId, "sample id " + std::to_string(id));
  return truth_[static_cast<std::size_t>(id)];
}

Sample Dataset::sample(SampleId id) const {
  return Sample{id, inputs_.col(id), truth(id), origin_};
}

std::size_t Dataset::count(Category c) const {
  std::size_t n = 0;
  for (const Truth& t : truth_) n += (t.category == c);
  return n;
}

PoolState PoolState::all_unlabeled(std::size_t n) {
  PoolState p;
  for (std::size_t i = 0; i < n; ++i) p.unlabeled.insert(p.unlabeled.end(), static_cast<SampleId>(i));
  p.initial_size = n;
  return p;
}

PoolState pool_update(const PoolState& pool, std::span<const LabeledExample> annotated) {
  std::unordered_set<SampleId> seen;
  for (const LabeledExample& e : annotated) {
    if (!seen.insert(e.id).second)
      throw Error(ErrorCode::DuplicateAnnotation, "sample " + std::to_string(e.id) + " annotated twice");
    if (!pool.unlabeled.contains(e.id))
      throw Error(ErrorCode::AnnotatedNotInUnlabeled, "sample " + std::to_string(e.id));
  }
  PoolState next = pool;
  for (const LabeledExample& e : annotated) {
    next.unlabeled.erase(e.id);
    next.labeled.push_back(e);
  }
  ++next.stage;
  return next;
}

void AnnotationLedger::record(Category c) {
  if (stages_.empty()) open_stage();
  StageCounts& s = stages_.back();
  switch (c) {
    case Category::InDistribution: ++s.in_distribution; break;
    case Category::Ambiguous: ++s.ambiguous; break;
    case Category::OutOfDistribution: ++s.out_of_distribution; break;
  }
}

std::int64_t AnnotationLedger::cumulative_cost() const {
  std::int64_t total = 0;
  for (const StageCounts& s : stages_) total += s.total();
  return total;
}

LedgerTotals ledger_totals(const AnnotationLedger& ledger) {
  LedgerTotals t;
  for (const StageCounts& s : ledger.stages()) {
    t.id_count += s.in_distribution;
    t.non_id_count += s.non_id();
  }
  t.cost = t.id_count + t.non_id_count;
  return t;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex_digest(std::uint64_t h) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) s[static_cast<std::size_t>(i)] = digits[h & 0xF];
  return s;
}

}  // namespace alforge
