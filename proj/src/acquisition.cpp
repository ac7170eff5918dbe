#include "alforge/acquisition.hpp"
#include "alforge/rng.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace alforge::acquisition {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::Random: return "random";
    case Strategy::LeastConfidence: return "least_confidence";
    case Strategy::Entropy: return "entropy";
    case Strategy::RandomCL: return "random_cl";
    case Strategy::DistanceCL: return "distance_cl";
  }
  return "?";
}

std::string_view display_name(Strategy s) {
  switch (s) {
    case Strategy::Random: return "Random";
    case Strategy::LeastConfidence: return "Least Confidence";
    case Strategy::Entropy: return "Entropy";
    case Strategy::RandomCL: return "Random (CL)";
    case Strategy::DistanceCL: return "Distance (CL)";
  }
  return "?";
}

std::optional<Strategy> parse_strategy(std::string_view name) {
  for (Strategy s : kAllStrategies)
    if (to_string(s) == name) return s;
  return std::nullopt;
}

bool uses_clusters(Strategy s) { return s == Strategy::RandomCL || s == Strategy::DistanceCL; }

namespace {

void check_probability(const Vector& p) {
  if (p.size() == 0) throw Error(ErrorCode::NotAProbabilityVector, "empty vector");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (!(p(i) >= 0.0) || !std::isfinite(p(i)))
      throw Error(ErrorCode::NotAProbabilityVector, "component " + std::to_string(i) + " is negative or non-finite");
    sum += p(i);
  }
  if (std::abs(sum - 1.0) > 1e-6) throw Error(ErrorCode::NotAProbabilityVector, "components sum to " + std::to_string(sum));
}

Matrix gather(const Matrix& inputs, std::span<const SampleId> ids) {
  Matrix out(inputs.rows(), static_cast<Eigen::Index>(ids.size()));
  for (std::size_t i = 0; i < ids.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = inputs.col(ids[i]);
  return out;
}

}  // namespace

double score_entropy(const Vector& p) {
  check_probability(p);
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (p(i) > 0.0) h -= p(i) * std::log(p(i));
  return std::clamp(h, 0.0, std::log(static_cast<double>(p.size())));
}

double score_least_confidence(const Vector& p) {
  check_probability(p);
  return 1.0 - p.maxCoeff();
}

std::vector<SampleId> aux_filter(std::span<const SampleId> candidates, const Matrix& probs) {
  if (static_cast<std::size_t>(probs.cols()) != candidates.size())
    throw Error(ErrorCode::DimensionMismatch, "one probability column per candidate required");
  std::vector<SampleId> kept;
  const Eigen::Index aux = probs.rows() - 1;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    Eigen::Index arg = 0;
    probs.col(static_cast<Eigen::Index>(i)).maxCoeff(&arg);  // first maximum on ties
    if (arg != aux) kept.push_back(candidates[i]);
  }
  return kept;
}

std::vector<SampleId> aux_filter(std::span<const SampleId> candidates, const learner::EncoderParams& params,
                                 const Matrix& inputs) {
  if (candidates.empty()) return {};
  return aux_filter(candidates, learner::predict_batch(params, gather(inputs, candidates)));
}

std::vector<SampleId> acquire_uncertainty(const PoolState& pool, const learner::EncoderParams* params,
                                          const Matrix& inputs, const AcquisitionRequest& request) {
  if (uses_clusters(request.strategy))
    throw Error(ErrorCode::InvalidConfig, "acquire_uncertainty handles random, least_confidence and entropy only");
  std::vector<SampleId> ids(pool.unlabeled.begin(), pool.unlabeled.end());
  Rng rng(request.seed);
  if (params == nullptr) {
    rng.shuffle(ids);
    return ids;
  }
  if (ids.empty()) return ids;
  const Matrix probs = learner::predict_batch(*params, gather(inputs, ids));
  std::vector<SampleId> kept;
  std::vector<double> scores;
  const Eigen::Index aux = probs.rows() - 1;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const Vector p = probs.col(static_cast<Eigen::Index>(i));
    Eigen::Index arg = 0;
    p.maxCoeff(&arg);
    if (arg == aux) continue;
    kept.push_back(ids[i]);
    if (request.strategy == Strategy::Entropy) scores.push_back(score_entropy(p));
    if (request.strategy == Strategy::LeastConfidence) scores.push_back(score_least_confidence(p));
  }
  if (request.strategy == Strategy::Random) {
    rng.shuffle(kept);
    return kept;
  }
  std::vector<std::size_t> order(kept.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return kept[a] < kept[b];
  });
  std::vector<SampleId> out;
  out.reserve(order.size());
  for (std::size_t i : order) out.push_back(kept[i]);
  return out;
}

AcquisitionResult consume_stream(std::span<const SampleId> stream, int n_id, Oracle& oracle) {
  AcquisitionResult r;
  const int k = oracle.num_classes();
  for (SampleId id : stream) {
    if (r.id_found >= n_id) break;
    LabeledExample e = oracle.annotate(id);
    if (e.label <= k) ++r.id_found;
    r.annotated.push_back(e);
  }
  r.exhausted = r.id_found < n_id;
  return r;
}

int exclude_nonid_cluster(const clustering::ClusterModel& model, std::span<const LabeledExample> labeled,
                          int aux_label) {
  if (labeled.empty()) throw Error(ErrorCode::NoLabeledData, "no labeled examples to locate the non-iD cluster");
  std::vector<long long> non_id(static_cast<std::size_t>(model.k()), 0), total(static_cast<std::size_t>(model.k()), 0);
  for (const LabeledExample& e : labeled) {
    const int c = model.cluster_of(e.id);
    if (c < 0) continue;
    ++total[static_cast<std::size_t>(c)];
    if (e.label == aux_label) ++non_id[static_cast<std::size_t>(c)];
  }
  // Compare fractions by cross-multiplication; empty clusters count as 0/1.
  int best = 0;
  for (int c = 1; c < model.k(); ++c) {
    const auto uc = static_cast<std::size_t>(c), ub = static_cast<std::size_t>(best);
    const long long tc = std::max(total[uc], 1LL), tb = std::max(total[ub], 1LL);
    if (non_id[uc] * tb > non_id[ub] * tc) best = c;
  }
  return best;
}

int ClusterQuota::total() const { return std::accumulate(counts.begin(), counts.end(), 0); }

ClusterQuota compute_quotas(std::span<const std::size_t> sizes, int batch) {
  if (batch < 1) throw Error(ErrorCode::InvalidConfig, "batch must be >= 1");
  const std::size_t total = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  if (total == 0) throw Error(ErrorCode::NoEligibleClusters, "no cluster has unlabeled members");
  ClusterQuota q;
  q.counts.assign(sizes.size(), 0);
  if (static_cast<std::size_t>(batch) >= total) {
    for (std::size_t i = 0; i < sizes.size(); ++i) q.counts[i] = static_cast<int>(sizes[i]);
    return q;
  }
  const auto b = static_cast<unsigned long long>(batch);
  std::vector<unsigned long long> remainder(sizes.size());
  int assigned = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const unsigned long long num = b * sizes[i];
    q.counts[i] = static_cast<int>(num / total);
    remainder[i] = num % total;
    assigned += q.counts[i];
  }
  std::vector<std::size_t> order(sizes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) { return remainder[a] > remainder[c]; });
  for (std::size_t i = 0; assigned < batch; ++i, ++assigned) ++q.counts[order[i]];
  return q;
}

namespace {

/// Outer-pass driver shared by both cluster strategies. `fill(c, quota, annotate)`
/// picks `quota` candidates from cluster c, removing them from the candidate
/// list and annotating each through `annotate`.
template <class Fill>
AcquisitionResult cluster_passes(const clustering::ClusterModel& model, const PoolState& pool,
                                 const AcquisitionRequest& request, Oracle& oracle,
                                 std::vector<std::vector<SampleId>>& candidates, std::vector<LabeledExample>& labeled,
                                 Fill&& fill) {
  if (request.n_id < 1) throw Error(ErrorCode::InvalidConfig, "n_id must be >= 1");
  const int k = model.k();
  const int aux = oracle.num_classes() + 1;
  candidates.assign(static_cast<std::size_t>(k), {});
  for (SampleId id : pool.unlabeled) {
    const int c = model.cluster_of(id);
    if (c >= 0) candidates[static_cast<std::size_t>(c)].push_back(id);
  }
  labeled = pool.labeled;

  AcquisitionResult result;
  auto annotate = [&](SampleId id) {
    LabeledExample e = oracle.annotate(id);
    if (e.label < aux) ++result.id_found;
    result.annotated.push_back(e);
    labeled.push_back(e);
    return e;
  };

  while (result.id_found < request.n_id) {
    const int residual = request.n_id - result.id_found;
    bool any_non_id = false;
    for (const LabeledExample& e : labeled) any_non_id = any_non_id || (e.label == aux && model.cluster_of(e.id) >= 0);
    const int excluded = any_non_id ? exclude_nonid_cluster(model, labeled, aux) : -1;
    std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
    for (int c = 0; c < k; ++c)
      if (c != excluded) sizes[static_cast<std::size_t>(c)] = candidates[static_cast<std::size_t>(c)].size();
    if (std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}) == 0) {
      result.exhausted = true;
      break;
    }
    const ClusterQuota quota = compute_quotas(sizes, residual);
    spdlog::debug("cluster pass residual={} excluded={}", residual, excluded);
    for (int c = 0; c < k; ++c) {
      const int q = quota.counts[static_cast<std::size_t>(c)];
      if (q > 0) fill(c, q, annotate);
    }
  }
  return result;
}

}  // namespace

AcquisitionResult acquire_distance_cl(const clustering::ClusterModel& model, const PoolState& pool,
                                      const Matrix& features, const AcquisitionRequest& request, Oracle& oracle,
                                      const DistanceClOptions& options) {
  const int aux = oracle.num_classes() + 1;
  // Distance of every clustered sample to its own centroid.
  std::vector<double> delta(model.cluster_by_id_.size(), 0.0);
  for (std::size_t i = 0; i < model.ids.size(); ++i) {
    const SampleId id = model.ids[i];
    if (id >= features.cols())
      throw Error(ErrorCode::DimensionMismatch, "feature matrix lacks a column for sample " + std::to_string(id));
    delta[static_cast<std::size_t>(id)] = (features.col(id) - model.centroids.col(model.assignment[i])).norm();
  }
  std::vector<std::vector<SampleId>> candidates;
  std::vector<LabeledExample> labeled;
  auto fill = [&](int c, int quota, auto& annotate) {
    double radius = std::numeric_limits<double>::infinity();
    for (const LabeledExample& e : labeled)
      if (e.label == aux && model.cluster_of(e.id) == c) radius = std::min(radius, delta[static_cast<std::size_t>(e.id)]);
    auto& cands = candidates[static_cast<std::size_t>(c)];
    std::vector<SampleId> picked;
    for (int n = 0; n < quota && !cands.empty(); ++n) {
      std::size_t best = cands.size();
      bool inside = false;
      for (std::size_t i = 0; i < cands.size(); ++i) {
        const double d = delta[static_cast<std::size_t>(cands[i])];
        const bool in = d <= radius;
        if (best == cands.size() || (in && !inside)) {
          best = i;
          inside = in;
          continue;
        }
        if (in != inside) continue;
        const double bd = delta[static_cast<std::size_t>(cands[best])];
        // Candidates are id-sorted, so strict comparisons keep the lower id on ties.
        if (inside ? d > bd : d < bd) best = i;
      }
      const SampleId id = cands[best];
      spdlog::debug("distance_cl pick cluster={} id={} delta={:.4f} radius={:.4f}", c, id,
                    delta[static_cast<std::size_t>(id)], radius);
      cands.erase(cands.begin() + static_cast<std::ptrdiff_t>(best));
      if (options.refresh_radius_per_sample) {
        if (annotate(id).label == aux) radius = std::min(radius, delta[static_cast<std::size_t>(id)]);
      } else {
        picked.push_back(id);
      }
    }
    for (SampleId id : picked) annotate(id);
  };
  return cluster_passes(model, pool, request, oracle, candidates, labeled, fill);
}

AcquisitionResult acquire_random_cl(const clustering::ClusterModel& model, const PoolState& pool,
                                    const AcquisitionRequest& request, Oracle& oracle) {
  Rng rng(request.seed);
  std::vector<std::vector<SampleId>> candidates;
  std::vector<LabeledExample> labeled;
  auto fill = [&](int c, int quota, auto& annotate) {
    auto& cands = candidates[static_cast<std::size_t>(c)];
    std::vector<SampleId> picked;
    for (int n = 0; n < quota && !cands.empty(); ++n) {
      const std::size_t j = rng.index(cands.size());
      picked.push_back(cands[j]);
      cands.erase(cands.begin() + static_cast<std::ptrdiff_t>(j));
    }
    for (SampleId id : picked) annotate(id);
  };
  return cluster_passes(model, pool, request, oracle, candidates, labeled, fill);
}

}  // namespace alforge::acquisition
