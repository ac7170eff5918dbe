#include "alforge/clustering.hpp"
#include "alforge/rng.hpp"

#include <limits>

namespace alforge::clustering {

namespace {

struct LloydState {
  std::vector<int> assignment;
  std::vector<double> dist2;  // squared distance to the assigned centroid
};

void assign(const Matrix& features, const Matrix& centroids, LloydState& st) {
  const Eigen::Index n = features.cols();
  st.assignment.assign(static_cast<std::size_t>(n), 0);
  st.dist2.assign(static_cast<std::size_t>(n), 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < centroids.cols(); ++c) {
      const double d = (features.col(i) - centroids.col(c)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    st.assignment[static_cast<std::size_t>(i)] = best;
    st.dist2[static_cast<std::size_t>(i)] = best_d;
  }
}

// Moves the farthest point into each empty cluster. Returns true if anything moved.
bool repair_empty(const Matrix& features, Matrix& centroids, LloydState& st) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(centroids.cols()), 0);
  for (int a : st.assignment) ++counts[static_cast<std::size_t>(a)];
  bool moved = false;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] != 0) continue;
    std::size_t far = 0;
    double far_d = -1.0;
    for (std::size_t i = 0; i < st.dist2.size(); ++i) {
      if (counts[static_cast<std::size_t>(st.assignment[i])] > 1 && st.dist2[i] > far_d) {
        far_d = st.dist2[i];
        far = i;
      }
    }
    if (far_d <= 0.0) continue;  // every point sits on a centroid; cannot split further
    --counts[static_cast<std::size_t>(st.assignment[far])];
    ++counts[c];
    st.assignment[far] = static_cast<int>(c);
    st.dist2[far] = 0.0;
    centroids.col(static_cast<Eigen::Index>(c)) = features.col(static_cast<Eigen::Index>(far));
    moved = true;
  }
  return moved;
}

double objective(const LloydState& st) {
  double j = 0.0;
  for (double d : st.dist2) j += d;
  return j;
}

double update_means(const Matrix& features, const LloydState& st, Matrix& centroids) {
  Matrix sums = Matrix::Zero(centroids.rows(), centroids.cols());
  std::vector<std::size_t> counts(static_cast<std::size_t>(centroids.cols()), 0);
  for (std::size_t i = 0; i < st.assignment.size(); ++i) {
    sums.col(st.assignment[i]) += features.col(static_cast<Eigen::Index>(i));
    ++counts[static_cast<std::size_t>(st.assignment[i])];
  }
  double movement = 0.0;
  for (Eigen::Index c = 0; c < centroids.cols(); ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0) continue;
    const Vector mean = sums.col(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
    movement = std::max(movement, (mean - centroids.col(c)).norm());
    centroids.col(c) = mean;
  }
  return movement;
}

Matrix kmeans_pp(const Matrix& features, int k, Rng& rng) {
  const std::size_t n = static_cast<std::size_t>(features.cols());
  Matrix centroids(features.rows(), k);
  std::vector<char> chosen(n, 0);
  std::size_t first = rng.index(n);
  centroids.col(0) = features.col(static_cast<Eigen::Index>(first));
  chosen[first] = 1;
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = (features.col(static_cast<Eigen::Index>(i)) - centroids.col(0)).squaredNorm();
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (double d : d2) total += d;
    std::size_t pick = n;
    if (total > 0.0) {
      const double r = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (d2[i] > 0.0 && acc > r) {
          pick = i;
          break;
        }
      }
      if (pick == n)  // round-off at the tail
        for (std::size_t i = n; i-- > 0;)
          if (d2[i] > 0.0) {
            pick = i;
            break;
          }
    } else {
      for (std::size_t i = 0; i < n; ++i)
        if (!chosen[i]) {
          pick = i;
          break;
        }
    }
    chosen[pick] = 1;
    centroids.col(c) = features.col(static_cast<Eigen::Index>(pick));
    for (std::size_t i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], (features.col(static_cast<Eigen::Index>(i)) - centroids.col(c)).squaredNorm());
  }
  return centroids;
}

void index_ids(ClusterModel& m) {
  SampleId max_id = -1;
  for (SampleId id : m.ids) max_id = std::max(max_id, id);
  m.cluster_by_id_.assign(static_cast<std::size_t>(max_id + 1), -1);
  for (std::size_t i = 0; i < m.ids.size(); ++i) m.cluster_by_id_[static_cast<std::size_t>(m.ids[i])] = m.assignment[i];
}

void check_inputs(std::span<const SampleId> ids, const Matrix& features, int k) {
  if (static_cast<std::size_t>(features.cols()) != ids.size())
    throw Error(ErrorCode::DimensionMismatch, "one feature column per id required");
  if (k < 1) throw Error(ErrorCode::InvalidConfig, "k must be >= 1");
  if (ids.size() < static_cast<std::size_t>(k))
    throw Error(ErrorCode::TooFewPoints, std::to_string(ids.size()) + " points for k = " + std::to_string(k));
  for (SampleId id : ids)
    if (id < 0) throw Error(ErrorCode::UnknownId, "negative sample id");
}

}  // namespace

int ClusterModel::cluster_of(SampleId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= cluster_by_id_.size()) return -1;
  return cluster_by_id_[static_cast<std::size_t>(id)];
}

ClusterModel lloyd_from(std::span<const SampleId> ids, const Matrix& features, Matrix centroids, int max_iter,
                        double tol) {
  check_inputs(ids, features, static_cast<int>(centroids.cols()));
  ClusterModel m;
  LloydState st;
  assign(features, centroids, st);
  repair_empty(features, centroids, st);
  m.objective_history.push_back(objective(st));
  for (int iter = 0; iter < max_iter; ++iter) {
    const double movement = update_means(features, st, centroids);
    assign(features, centroids, st);
    const bool repaired = repair_empty(features, centroids, st);
    m.objective_history.push_back(objective(st));
    if (movement < tol && !repaired) break;
  }
  m.centroids = std::move(centroids);
  m.ids.assign(ids.begin(), ids.end());
  m.assignment = st.assignment;
  m.sizes.assign(static_cast<std::size_t>(m.centroids.cols()), 0);
  for (int a : m.assignment) ++m.sizes[static_cast<std::size_t>(a)];
  m.objective = m.objective_history.back();
  index_ids(m);
  return m;
}

ClusterModel kmeans_fit(std::span<const SampleId> ids, const Matrix& features, const KMeansOptions& opts) {
  check_inputs(ids, features, opts.k);
  if (opts.n_init < 1 || opts.max_iter < 0) throw Error(ErrorCode::InvalidConfig, "n_init >= 1 and max_iter >= 0 required");
  ClusterModel best;
  bool have = false;
  for (int run = 0; run < opts.n_init; ++run) {
    Rng rng(derive_seed(opts.seed, {static_cast<std::uint64_t>(run)}));
    ClusterModel m = lloyd_from(ids, features, kmeans_pp(features, opts.k, rng), opts.max_iter, opts.tol);
    if (!have || m.objective < best.objective) {
      best = std::move(m);
      have = true;
    }
  }
  return best;
}

double centroid_distance(const ClusterModel& model, int k, const Vector& h) {
  if (k < 0 || k >= model.k()) throw Error(ErrorCode::BadClusterIndex, "cluster " + std::to_string(k));
  if (h.size() != model.centroids.rows())
    throw Error(ErrorCode::DimensionMismatch, "vector dimension differs from centroid dimension");
  return (model.centroids.col(k) - h).norm();
}

Dataset centroids_as_dataset(const ClusterModel& model, int num_classes) {
  std::vector<Truth> truth(static_cast<std::size_t>(model.k()), Truth{Category::OutOfDistribution, -1});
  return Dataset(num_classes, model.centroids, std::move(truth));
}

}  // namespace alforge::clustering
