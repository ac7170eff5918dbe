#pragma once

// Synthetic contaminated pools: Gaussian iD classes, ambiguous samples made by
// interpolating two iD samples and keeping only those a committee of
// classifiers disagrees on moderately, and two OoD sources.

#include "alforge/core.hpp"
#include "alforge/learner.hpp"
#include "alforge/rng.hpp"

#include <map>
#include <utility>
#include <string>
#include <vector>

namespace alforge::benchgen {

struct BenchmarkSpec {
  int num_classes = 8;
  int dim = 16;
  int n_id = 4000;
  int n_ambiguous = 1000;
  int n_ood = 1000;
  int n_test = 2000;
  double class_separation = 5.0;
  double ood_offset = 10.0;
  /// Number of displaced OoD Gaussian components.
  int ood_components = 1;
  int committee_size = 10;
  double interp_lambda = 0.7;
  /// Candidates on which the committee casts a single class are dropped.
  int min_distinct_votes = 2;
  /// Candidates on which the committee casts more classes than this are dropped.
  int max_distinct_votes = 3;
  bool cross_class_only = true;
  std::uint64_t seed = 0;
  learner::TrainConfig committee_train = default_committee_train();

  static learner::TrainConfig default_committee_train();
  void validate() const;
};

struct Committee {
  std::vector<learner::EncoderParams> members;

  /// One 1-based class vote per member for every column of `x`.
  std::vector<std::vector<int>> votes(const Matrix& x) const;
  static int distinct(const std::vector<int>& votes);
};

/// iD component means (dim x K), pairwise at least class_separation apart.
Matrix place_class_means(const BenchmarkSpec& spec, Rng& rng);

struct Component {
  Matrix inputs;            // dim x n
  std::vector<Truth> truth;  // parallel to columns
};

/// n samples split evenly across classes (remainder to the lowest classes).
Component gen_id(const BenchmarkSpec& spec, const Matrix& means, int n, Rng& rng);

Committee committee_train(const Component& id_samples, const BenchmarkSpec& spec);

struct AmbiguousResult {
  Component samples;
  std::size_t attempts = 0;
  bool budget_exhausted = false;
};

AmbiguousResult gen_ambiguous(const BenchmarkSpec& spec, const Component& id_samples, const Committee& committee,
                              Rng& rng);

/// Means of the displaced OoD Gaussian components.
Matrix ood_means(const BenchmarkSpec& spec, const Matrix& class_means, Rng& rng);

/// Half from displaced Gaussians (odd remainder there), half uniform over the
/// iD bounding box scaled by 1.5 about its center.
Component gen_ood(const BenchmarkSpec& spec, const Matrix& class_means, const Component& id_samples, Rng& rng);

struct Benchmark {
  Dataset pool;
  Dataset test;  // iD only, same class distributions
  Matrix class_means;
  Matrix ood_component_means;
  std::size_t ambiguous_attempts = 0;
};

/// Builds the full shuffled pool and held-out test set. Throws
/// BudgetExhausted if the ambiguous quota cannot be met.
Benchmark assemble(const BenchmarkSpec& spec);

struct Manifest {
  std::map<std::string, std::string> entries;  // flat "section.key" -> value
};

/// Writes `<stem>.ds`, `<stem>.test.ds` and `<stem>.manifest` for `out_path`
/// (the dataset path; `.ds` is stripped to form the stem). Returns the manifest.
Manifest write_benchmark(const Benchmark& bench, const BenchmarkSpec& spec, const std::string& out_path);

std::string manifest_path_for(const std::string& dataset_path);
std::string test_path_for(const std::string& dataset_path);

/// Spec fields as ordered (key, value) text pairs; doubles round-trip exactly.
std::vector<std::pair<std::string, std::string>> spec_entries(const BenchmarkSpec& spec);
/// Sets one field from its text form. Returns false for an unknown key and
/// throws InvalidConfig for an unparsable value.
bool set_spec_field(BenchmarkSpec& spec, const std::string& key, const std::string& value);

/// Loads a dataset file produced elsewhere (e.g. precomputed embeddings).
Dataset ingest_embeddings(const std::string& path);

}  // namespace alforge::benchgen
