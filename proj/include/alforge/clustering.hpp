#pragma once

#include "alforge/core.hpp"

#include <span>
#include <vector>

namespace alforge::clustering {

struct KMeansOptions {
  int k = 2;
  std::uint64_t seed = 0;
  int max_iter = 300;
  double tol = 1e-6;
  /// Independent k-means++ restarts; the lowest final objective wins.
  int n_init = 10;
};

/// Fitted k-means model. Cluster indices are 0-based.
struct ClusterModel {
  Matrix centroids;               // dim x k
  std::vector<SampleId> ids;      // clustered samples, in input order
  std::vector<int> assignment;    // parallel to ids
  std::vector<std::size_t> sizes; // per cluster
  double objective = 0.0;         // sum of squared distances
  std::vector<double> objective_history;  // after every assignment step of the winning run

  int k() const { return static_cast<int>(centroids.cols()); }
  /// Cluster of a clustered sample, -1 if the id was not clustered.
  int cluster_of(SampleId id) const;

  std::vector<int> cluster_by_id_;  // dense lookup, -1 for absent ids
};

/// Lloyd's algorithm with k-means++ seeding. `features` has one column per id.
/// Ties in nearest-centroid assignment go to the lower cluster index.
ClusterModel kmeans_fit(std::span<const SampleId> ids, const Matrix& features, const KMeansOptions& opts);

/// A single Lloyd run from explicit initial centroids.
ClusterModel lloyd_from(std::span<const SampleId> ids, const Matrix& features, Matrix centroids, int max_iter,
                        double tol);

/// Euclidean distance from centroid k to h.
double centroid_distance(const ClusterModel& model, int k, const Vector& h);

/// Centroids as a dataset (all rows tagged OoD, class -1) for debugging dumps.
Dataset centroids_as_dataset(const ClusterModel& model, int num_classes);

}  // namespace alforge::clustering
