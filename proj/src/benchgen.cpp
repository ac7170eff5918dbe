#include "alforge/benchgen.hpp"
#include "alforge/text.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>

namespace alforge::benchgen {

learner::TrainConfig BenchmarkSpec::default_committee_train() {
  learner::TrainConfig c;
  c.epochs = 2;
  c.batch_size_labeled = 64;
  c.learning_rate = 0.02;
  c.weight_decay = 1e-4;
  c.label_smoothing = 0.1;
  return c;
}

void BenchmarkSpec::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw Error(ErrorCode::InvalidConfig, field + " " + why);
  };
  if (num_classes < 2) fail("num_classes", "must be >= 2");
  if (dim < 1) fail("dim", "must be >= 1");
  if (n_id < 1) fail("n_id", "must be > 0");
  if (n_ambiguous < 1) fail("n_ambiguous", "must be > 0");
  if (n_ood < 1) fail("n_ood", "must be > 0");
  if (n_test < 1) fail("n_test", "must be > 0");
  if (n_id < num_classes) fail("n_id", "must be at least num_classes");
  if (!(class_separation > 0.0)) fail("class_separation", "must be > 0");
  if (!(ood_offset > 0.0)) fail("ood_offset", "must be > 0");
  if (ood_components < 1) fail("ood_components", "must be >= 1");
  if (committee_size < 1) fail("committee_size", "must be >= 1");
  if (!(interp_lambda > 0.5 && interp_lambda < 1.0)) fail("interp_lambda", "must be in (0.5, 1)");
  if (min_distinct_votes < 1) fail("min_distinct_votes", "must be >= 1");
  if (max_distinct_votes < min_distinct_votes) fail("max_distinct_votes", "must be >= min_distinct_votes");
  committee_train.validate();
}

std::vector<std::vector<int>> Committee::votes(const Matrix& x) const {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(x.cols()));
  for (const learner::EncoderParams& m : members) {
    const Matrix probs = learner::predict_batch(m, x);
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      Eigen::Index arg = 0;
      probs.col(c).maxCoeff(&arg);
      out[static_cast<std::size_t>(c)].push_back(static_cast<int>(arg) + 1);
    }
  }
  return out;
}

int Committee::distinct(const std::vector<int>& votes) {
  return static_cast<int>(std::set<int>(votes.begin(), votes.end()).size());
}

namespace {

Vector random_unit(int dim, Rng& rng) {
  Vector u(dim);
  do {
    for (int i = 0; i < dim; ++i) u(i) = rng.normal();
  } while (u.norm() == 0.0);
  return u / u.norm();
}

Component concat(std::initializer_list<const Component*> parts) {
  Eigen::Index cols = 0, rows = 0;
  for (const Component* p : parts) {
    cols += p->inputs.cols();
    rows = std::max(rows, p->inputs.rows());
  }
  Component out{Matrix(rows, cols), {}};
  Eigen::Index at = 0;
  for (const Component* p : parts) {
    out.inputs.middleCols(at, p->inputs.cols()) = p->inputs;
    at += p->inputs.cols();
    out.truth.insert(out.truth.end(), p->truth.begin(), p->truth.end());
  }
  return out;
}

}  // namespace

Matrix place_class_means(const BenchmarkSpec& spec, Rng& rng) {
  const int k = spec.num_classes;
  const int d = spec.dim;
  // Uniform in a ball whose volume leaves room for K well-separated points.
  const double radius = spec.class_separation * std::max(0.8, std::pow(static_cast<double>(k), 1.0 / d));
  Matrix means(d, k);
  constexpr int kAttempts = 1000;
  for (int c = 0; c < k; ++c) {
    bool placed = false;
    for (int attempt = 0; attempt < kAttempts && !placed; ++attempt) {
      const Vector m = random_unit(d, rng) * radius * std::pow(rng.uniform(), 1.0 / d);
      placed = true;
      for (int j = 0; j < c && placed; ++j) placed = (means.col(j) - m).norm() >= spec.class_separation;
      if (placed) means.col(c) = m;
    }
    if (!placed)
      throw Error(ErrorCode::PlacementFailure, "could not place class " + std::to_string(c + 1) + " at separation " +
                                                   text::format_double(spec.class_separation));
  }
  return means;
}

Component gen_id(const BenchmarkSpec& spec, const Matrix& means, int n, Rng& rng) {
  const int k = static_cast<int>(means.cols());
  Component out{Matrix(means.rows(), n), {}};
  out.truth.reserve(static_cast<std::size_t>(n));
  int col = 0;
  for (int c = 0; c < k; ++c) {
    const int count = n / k + (c < n % k ? 1 : 0);
    for (int i = 0; i < count; ++i, ++col) {
      for (Eigen::Index r = 0; r < means.rows(); ++r) out.inputs(r, col) = means(r, c) + rng.normal();
      out.truth.push_back(Truth{Category::InDistribution, c + 1});
    }
  }
  (void)spec;
  return out;
}

Committee committee_train(const Component& id_samples, const BenchmarkSpec& spec) {
  std::vector<LabeledExample> examples;
  std::set<int> classes;
  for (std::size_t i = 0; i < id_samples.truth.size(); ++i) {
    if (!id_samples.truth[i].in_distribution()) continue;
    examples.push_back(LabeledExample{static_cast<SampleId>(i), id_samples.truth[i].cls});
    classes.insert(id_samples.truth[i].cls);
  }
  if (classes.size() < 2) throw Error(ErrorCode::InsufficientLabels, "committee needs at least two iD classes");
  Committee committee;
  const learner::Architecture arch = learner::default_architecture(spec.dim, spec.num_classes);
  for (int m = 1; m <= spec.committee_size; ++m) {
    learner::TrainConfig cfg = spec.committee_train;
    cfg.seed = spec.seed + static_cast<std::uint64_t>(m);
    const learner::EncoderParams init = learner::EncoderParams::random(arch, cfg.seed);
    committee.members.push_back(learner::train_classifier(init, id_samples.inputs, examples, cfg).params);
  }
  return committee;
}

AmbiguousResult gen_ambiguous(const BenchmarkSpec& spec, const Component& id_samples, const Committee& committee,
                              Rng& rng) {
  const std::size_t n = id_samples.truth.size();
  if (n < 2) throw Error(ErrorCode::InsufficientLabels, "need iD samples to interpolate");
  const std::size_t budget = 100 * static_cast<std::size_t>(spec.n_ambiguous);
  const std::size_t want = static_cast<std::size_t>(spec.n_ambiguous);
  const double lambda = spec.interp_lambda;
  AmbiguousResult r;
  r.samples.inputs.resize(id_samples.inputs.rows(), spec.n_ambiguous);
  std::size_t kept = 0;
  constexpr Eigen::Index kChunk = 256;
  Matrix chunk(id_samples.inputs.rows(), kChunk);
  while (kept < want && r.attempts < budget) {
    const Eigen::Index m = static_cast<Eigen::Index>(std::min<std::size_t>(kChunk, budget - r.attempts));
    for (Eigen::Index c = 0; c < m; ++c) {
      const std::size_t a = rng.index(n);
      std::size_t b = rng.index(n);
      if (spec.cross_class_only) {
        std::size_t guard = 0;
        while (id_samples.truth[b].cls == id_samples.truth[a].cls && guard++ < 10000) b = rng.index(n);
      }
      chunk.col(c) = lambda * id_samples.inputs.col(static_cast<Eigen::Index>(a)) +
                     (1.0 - lambda) * id_samples.inputs.col(static_cast<Eigen::Index>(b));
    }
    const auto votes = committee.votes(chunk.leftCols(m));
    for (Eigen::Index c = 0; c < m && kept < want; ++c) {
      ++r.attempts;
      const int distinct = Committee::distinct(votes[static_cast<std::size_t>(c)]);
      if (distinct < spec.min_distinct_votes || distinct > spec.max_distinct_votes) continue;
      r.samples.inputs.col(static_cast<Eigen::Index>(kept++)) = chunk.col(c);
      r.samples.truth.push_back(Truth{Category::Ambiguous, -1});
    }
  }
  r.samples.inputs.conservativeResize(Eigen::NoChange, static_cast<Eigen::Index>(kept));
  r.budget_exhausted = kept < want;
  return r;
}

Matrix ood_means(const BenchmarkSpec& spec, const Matrix& class_means, Rng& rng) {
  const Vector center = class_means.rowwise().mean();
  double spread = 0.0;
  for (Eigen::Index c = 0; c < class_means.cols(); ++c) spread = std::max(spread, (class_means.col(c) - center).norm());
  const int components = spec.ood_components;
  Matrix out(spec.dim, components);
  for (int c = 0; c < components; ++c) out.col(c) = center + (spread + spec.ood_offset) * random_unit(spec.dim, rng);
  return out;
}

Component gen_ood(const BenchmarkSpec& spec, const Matrix& class_means, const Component& id_samples, Rng& rng) {
  const int n_uniform = spec.n_ood / 2;
  const int n_gauss = spec.n_ood - n_uniform;
  const Matrix means = ood_means(spec, class_means, rng);
  Component out{Matrix(spec.dim, spec.n_ood), {}};
  for (int i = 0; i < n_gauss; ++i) {
    const Eigen::Index c = i % means.cols();
    for (int r = 0; r < spec.dim; ++r) out.inputs(r, i) = means(r, c) + rng.normal();
    out.truth.push_back(Truth{Category::OutOfDistribution, -1});
  }
  const Vector lo = id_samples.inputs.rowwise().minCoeff();
  const Vector hi = id_samples.inputs.rowwise().maxCoeff();
  const Vector mid = 0.5 * (lo + hi);
  const Vector half = 0.75 * (hi - lo);  // 1.5x the box, about its center
  for (int i = n_gauss; i < spec.n_ood; ++i) {
    for (int r = 0; r < spec.dim; ++r) out.inputs(r, i) = rng.uniform(mid(r) - half(r), mid(r) + half(r));
    out.truth.push_back(Truth{Category::OutOfDistribution, -1});
  }
  return out;
}

Benchmark assemble(const BenchmarkSpec& spec) {
  spec.validate();
  Rng mean_rng(derive_seed(spec.seed, {1}));
  Rng id_rng(derive_seed(spec.seed, {2}));
  Rng amb_rng(derive_seed(spec.seed, {3}));
  Rng ood_rng(derive_seed(spec.seed, {4}));
  Rng test_rng(derive_seed(spec.seed, {5}));
  Rng shuffle_rng(derive_seed(spec.seed, {6}));

  Benchmark bench;
  bench.class_means = place_class_means(spec, mean_rng);
  const Component id = gen_id(spec, bench.class_means, spec.n_id, id_rng);
  const Committee committee = committee_train(id, spec);
  AmbiguousResult amb = gen_ambiguous(spec, id, committee, amb_rng);
  bench.ambiguous_attempts = amb.attempts;
  if (amb.budget_exhausted)
    throw Error(ErrorCode::BudgetExhausted, "kept " + std::to_string(amb.samples.truth.size()) + " of " +
                                                std::to_string(spec.n_ambiguous) + " ambiguous samples after " +
                                                std::to_string(amb.attempts) + " attempts");
  // gen_ood draws its Gaussian means first, so ood_means with a fresh copy of
  // the same stream reproduces them.
  Rng ood_mean_rng = ood_rng;
  bench.ood_component_means = ood_means(spec, bench.class_means, ood_mean_rng);
  const Component ood = gen_ood(spec, bench.class_means, id, ood_rng);

  Component all = concat({&id, &amb.samples, &ood});
  std::vector<std::size_t> perm(all.truth.size());
  std::iota(perm.begin(), perm.end(), 0);
  shuffle_rng.shuffle(perm);
  Matrix x(all.inputs.rows(), all.inputs.cols());
  std::vector<Truth> truth(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    x.col(static_cast<Eigen::Index>(i)) = all.inputs.col(static_cast<Eigen::Index>(perm[i]));
    truth[i] = all.truth[perm[i]];
  }
  bench.pool = Dataset(spec.num_classes, std::move(x), std::move(truth));
  Component test = gen_id(spec, bench.class_means, spec.n_test, test_rng);
  bench.test = Dataset(spec.num_classes, std::move(test.inputs), std::move(test.truth));
  return bench;
}

std::vector<std::pair<std::string, std::string>> spec_entries(const BenchmarkSpec& s) {
  using text::format_double;
  const learner::TrainConfig& t = s.committee_train;
  return {
      {"num_classes", std::to_string(s.num_classes)},
      {"dim", std::to_string(s.dim)},
      {"n_id", std::to_string(s.n_id)},
      {"n_ambiguous", std::to_string(s.n_ambiguous)},
      {"n_ood", std::to_string(s.n_ood)},
      {"n_test", std::to_string(s.n_test)},
      {"class_separation", format_double(s.class_separation)},
      {"ood_offset", format_double(s.ood_offset)},
      {"ood_components", std::to_string(s.ood_components)},
      {"committee_size", std::to_string(s.committee_size)},
      {"interp_lambda", format_double(s.interp_lambda)},
      {"min_distinct_votes", std::to_string(s.min_distinct_votes)},
      {"max_distinct_votes", std::to_string(s.max_distinct_votes)},
      {"cross_class_only", s.cross_class_only ? "true" : "false"},
      {"seed", std::to_string(s.seed)},
      {"committee_epochs", std::to_string(t.epochs)},
      {"committee_batch_size", std::to_string(t.batch_size_labeled)},
      {"committee_learning_rate", format_double(t.learning_rate)},
      {"committee_momentum", format_double(t.momentum)},
      {"committee_weight_decay", format_double(t.weight_decay)},
      {"committee_label_smoothing", format_double(t.label_smoothing)},
  };
}

bool set_spec_field(BenchmarkSpec& s, const std::string& key, const std::string& v) {
  using namespace text;
  learner::TrainConfig& t = s.committee_train;
  if (key == "num_classes") s.num_classes = parse_int(v, key);
  else if (key == "dim") s.dim = parse_int(v, key);
  else if (key == "n_id") s.n_id = parse_int(v, key);
  else if (key == "n_ambiguous") s.n_ambiguous = parse_int(v, key);
  else if (key == "n_ood") s.n_ood = parse_int(v, key);
  else if (key == "n_test") s.n_test = parse_int(v, key);
  else if (key == "class_separation") s.class_separation = parse_double(v, key);
  else if (key == "ood_offset") s.ood_offset = parse_double(v, key);
  else if (key == "ood_components") s.ood_components = parse_int(v, key);
  else if (key == "committee_size") s.committee_size = parse_int(v, key);
  else if (key == "interp_lambda") s.interp_lambda = parse_double(v, key);
  else if (key == "min_distinct_votes") s.min_distinct_votes = parse_int(v, key);
  else if (key == "max_distinct_votes") s.max_distinct_votes = parse_int(v, key);
  else if (key == "cross_class_only") s.cross_class_only = parse_bool(v, key);
  else if (key == "seed") s.seed = parse_u64(v, key);
  else if (key == "committee_epochs") t.epochs = parse_int(v, key);
  else if (key == "committee_batch_size") t.batch_size_labeled = parse_int(v, key);
  else if (key == "committee_learning_rate") t.learning_rate = parse_double(v, key);
  else if (key == "committee_momentum") t.momentum = parse_double(v, key);
  else if (key == "committee_weight_decay") t.weight_decay = parse_double(v, key);
  else if (key == "committee_label_smoothing") t.label_smoothing = parse_double(v, key);
  else return false;
  return true;
}

namespace {
std::string stem_of(const std::string& path) {
  constexpr std::string_view ext = ".ds";
  if (path.size() > ext.size() && path.compare(path.size() - ext.size(), ext.size(), ext) == 0)
    return path.substr(0, path.size() - ext.size());
  return path;
}

std::string base_name(const std::string& path) {
  const auto slash = path.find_last_of('/');
  return slash == std::string::npos ? path : path.substr(slash + 1);
}
}  // namespace

std::string manifest_path_for(const std::string& dataset_path) { return stem_of(dataset_path) + ".manifest"; }
std::string test_path_for(const std::string& dataset_path) { return stem_of(dataset_path) + ".test.ds"; }

Manifest write_benchmark(const Benchmark& bench, const BenchmarkSpec& spec, const std::string& out_path) {
  const std::string test_path = test_path_for(out_path);
  const std::string manifest_path = manifest_path_for(out_path);
  save_dataset(out_path, bench.pool);
  save_dataset(test_path, bench.test);

  Manifest m;
  std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> sections;
  sections.push_back({"counts",
                      {{"in_distribution", std::to_string(bench.pool.count(Category::InDistribution))},
                       {"ambiguous", std::to_string(bench.pool.count(Category::Ambiguous))},
                       {"out_of_distribution", std::to_string(bench.pool.count(Category::OutOfDistribution))},
                       {"total", std::to_string(bench.pool.size())},
                       {"test", std::to_string(bench.test.size())},
                       {"ambiguous_attempts", std::to_string(bench.ambiguous_attempts)}}});
  sections.push_back({"benchmark", spec_entries(spec)});
  sections.push_back({"files",
                      {{"dataset", base_name(out_path)},
                       {"dataset_digest", hex_digest(file_digest(out_path))},
                       {"test", base_name(test_path)},
                       {"test_digest", hex_digest(file_digest(test_path))}}});

  std::ofstream out(manifest_path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + manifest_path);
  out << "# benchmark manifest; the [benchmark] section regenerates the dataset\n";
  for (const auto& [section, entries] : sections) {
    out << "\n[" << section << "]\n";
    for (const auto& [k, v] : entries) {
      out << k << " = " << v << "\n";
      m.entries[section + "." + k] = v;
    }
  }
  if (!out) throw Error(ErrorCode::Io, "write failed for " + manifest_path);
  return m;
}

Dataset ingest_embeddings(const std::string& path) { return load_dataset(path); }

}  // namespace alforge::benchgen
