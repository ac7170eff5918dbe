#pragma once

// Acquisition strategies. Nothing here can see ground truth: strategies work
// on truth-free inputs and representations, and learn categories only from
// the labels an Oracle hands back.

#include "alforge/clustering.hpp"
#include "alforge/core.hpp"
#include "alforge/learner.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace alforge::acquisition {

enum class Strategy { Random, LeastConfidence, Entropy, RandomCL, DistanceCL };

inline constexpr Strategy kAllStrategies[] = {Strategy::Random, Strategy::LeastConfidence, Strategy::Entropy,
                                              Strategy::RandomCL, Strategy::DistanceCL};

/// CLI spelling: random, least_confidence, entropy, random_cl, distance_cl.
std::string_view to_string(Strategy s);
std::optional<Strategy> parse_strategy(std::string_view name);
/// Display name as used in result tables, e.g. "Distance (CL)".
std::string_view display_name(Strategy s);
bool uses_clusters(Strategy s);

struct AcquisitionRequest {
  int n_id = 10;
  Strategy strategy = Strategy::DistanceCL;
  std::uint64_t seed = 0;
};

/// Annotation service. Each call is one paid query.
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual LabeledExample annotate(SampleId id) = 0;
  /// K; the auxiliary label is K+1.
  virtual int num_classes() const = 0;
};

struct AcquisitionResult {
  std::vector<LabeledExample> annotated;  // in query order
  bool exhausted = false;                 // ran out of candidates before n_id iD samples
  int id_found = 0;
};

// --- uncertainty scores -----------------------------------------------------

double score_entropy(const Vector& p);
double score_least_confidence(const Vector& p);

/// Drops candidates whose argmax (lowest index on ties) is the auxiliary
/// class. `probs` holds one softmax column per candidate.
std::vector<SampleId> aux_filter(std::span<const SampleId> candidates, const Matrix& probs);
std::vector<SampleId> aux_filter(std::span<const SampleId> candidates, const learner::EncoderParams& params,
                                 const Matrix& inputs);

/// Candidate order for Random / LeastConfidence / Entropy. Without a model
/// (`params == nullptr`) the order is seeded-random over all unlabeled ids and
/// no filtering happens.
std::vector<SampleId> acquire_uncertainty(const PoolState& pool, const learner::EncoderParams* params,
                                          const Matrix& inputs, const AcquisitionRequest& request);

/// Queries the stream in order until `n_id` iD samples are confirmed.
AcquisitionResult consume_stream(std::span<const SampleId> stream, int n_id, Oracle& oracle);

// --- cluster-based strategies -----------------------------------------------

/// Cluster with the highest fraction of labeled non-iD members (label
/// `aux_label`); clusters without labeled members score 0; ties go to the
/// lower index.
int exclude_nonid_cluster(const clustering::ClusterModel& model, std::span<const LabeledExample> labeled,
                          int aux_label);

struct ClusterQuota {
  std::vector<int> counts;
  int total() const;
};

/// Largest-remainder apportionment of `batch` proportional to `sizes`, ties
/// in remainder to the lower index. When `batch` exceeds the total size every
/// cluster gets its full size.
ClusterQuota compute_quotas(std::span<const std::size_t> sizes, int batch);

struct DistanceClOptions {
  /// Tighten a cluster's radius as soon as a non-iD pick is annotated
  /// instead of between outer passes.
  bool refresh_radius_per_sample = false;
};

/// Cluster-distance acquisition. `features` holds the representation of every
/// sample id the model was fit on (column = id).
AcquisitionResult acquire_distance_cl(const clustering::ClusterModel& model, const PoolState& pool,
                                      const Matrix& features, const AcquisitionRequest& request, Oracle& oracle,
                                      const DistanceClOptions& options = {});

/// Seeded-uniform picks per cluster under the same quotas and exclusion.
AcquisitionResult acquire_random_cl(const clustering::ClusterModel& model, const PoolState& pool,
                                    const AcquisitionRequest& request, Oracle& oracle);

}  // namespace alforge::acquisition
