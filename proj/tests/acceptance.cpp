// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: acceptance [output-dir]   (metrics CSVs of the end-to-end runs land there)

#include "acquisition_cases.hpp"
#include "alforge/benchgen.hpp"
#include "alforge/driver.hpp"
#include "fixtures.hpp"
#include "reference_losses.hpp"
#include "support.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

using namespace alforge;
using namespace testsupport;
using acquisition::Strategy;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

// A failed expectation inside a criterion; caught and reported by `run`.
struct Failure {
  std::string what;
};

void expect(bool ok, const std::string& what) {
  if (!ok) throw Failure{what};
}

int failures = 0;

void run(int number, const std::string& title, const std::function<Verdict()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const Failure& f) {
    v = {false, f.what};
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!v.pass) ++failures;
  std::printf("criterion %d: %s  %s (%s) [%.1f s]\n", number, v.pass ? "PASS" : "FAIL", title.c_str(),
              v.detail.c_str(), secs);
  std::fflush(stdout);
}

// ---------------------------------------------------------------------------

Verdict table_arithmetic() {
  struct Row {
    const char* name;
    std::int64_t cost;
    double acc, expected;
  };
  const Row rows[] = {
      {"MixMNIST Random", 440, 93.84, 4.69},
      {"MixMNIST Least Confidence", 6582, 96.80, 68.00},
      {"MixMNIST Entropy", 32738, 93.89, 348.68},
      {"MixMNIST Random (CL)", 420, 96.07, 4.37},
      {"MixMNIST Distance (CL)", 406, 96.65, 4.20},
      {"MixCIFAR60 Random", 39270, 67.95, 577.92},
      {"MixCIFAR60 Least Confidence", 42676, 69.90, 610.53},
      {"MixCIFAR60 Entropy", 42678, 70.43, 605.96},
      {"MixCIFAR60 Random (CL)", 32162, 67.38, 477.32},
      {"MixCIFAR60 Distance (CL)", 27891, 66.38, 420.17},
  };
  int ok = 0;
  for (const Row& r : rows) {
    const double got = driver::cost_per_accuracy(r.cost, r.acc);
    expect(std::abs(got - r.expected) <= 0.01 + 1e-9,
           std::string(r.name) + ": got " + std::to_string(got) + ", want " + std::to_string(r.expected));
    ++ok;
  }
  return {true, std::to_string(ok) + " rows within 0.01"};
}

// ---------------------------------------------------------------------------

Verdict gradients() {
  using namespace alforge::learner;
  constexpr int kInstances = 60;
  double worst = 0.0;
  auto record = [&](double err, const char* which, int t) {
    worst = std::max(worst, err);
    expect(err < 1e-4, std::string(which) + " instance " + std::to_string(t) + ": relative error " + std::to_string(err));
  };

  Rng rng(9001);
  for (int t = 0; t < kInstances; ++t) {
    const int n = 2 * (1 + static_cast<int>(rng.index(4)));
    const double tau = rng.uniform(0.2, 1.0);
    const Matrix z = random_unit_columns(2 + static_cast<Eigen::Index>(rng.index(3)), n, rng);
    const Matrix numeric = numeric_gradient([&](const Matrix& m) { return ref_nt_xent(m, tau); }, z);
    record(relative_error(nt_xent_loss_grad(z, {tau}).grad, numeric), "nt_xent", t);
  }
  for (int t = 0; t < kInstances; ++t) {
    const int n = 3 + static_cast<int>(rng.index(6));
    const double tau = rng.uniform(0.2, 1.0);
    const Matrix z = random_unit_columns(3, n, rng);
    const auto y = labels_with_pair(rng, n, 3);
    const Matrix numeric = numeric_gradient([&](const Matrix& m) { return ref_supcon(m, y, tau); }, z);
    record(relative_error(supcon_loss_grad(z, y, {tau}).grad, numeric), "supcon", t);
  }
  for (int t = 0; t < kInstances; ++t) {
    const int classes = 2 + static_cast<int>(rng.index(5));
    const int n = 1 + static_cast<int>(rng.index(5));
    const double smoothing = rng.uniform(0.0, 0.3);
    const Matrix logits = random_matrix(classes, n, rng, 2.0);
    std::vector<int> y(static_cast<std::size_t>(n));
    for (int& v : y) v = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(classes)));
    const Matrix numeric =
        numeric_gradient([&](const Matrix& m) { return cross_entropy_loss_grad(m, y, smoothing).loss; }, logits);
    record(relative_error(cross_entropy_loss_grad(logits, y, smoothing).grad, numeric), "cross-entropy", t);
  }
  for (int t = 0; t < kInstances; ++t) {
    const EncoderParams params = random_params(tiny_architecture(3, 4), 7000 + static_cast<std::uint64_t>(t));
    ContrastiveBatch batch;
    batch.views = random_matrix(3, 2 * (1 + static_cast<Eigen::Index>(rng.index(3))), rng);
    if (t % 5 != 0) {
      const int m = 3 + static_cast<int>(rng.index(4));
      batch.labeled = random_matrix(3, m, rng);
      batch.labels = labels_with_pair(rng, m, 4);
    }
    const LossConfig cfg{rng.uniform(0.3, 1.0)};
    EncoderParams grad;
    total_loss(params, batch, cfg, &grad);
    const Vector numeric =
        numeric_param_gradient([&](const EncoderParams& p) { return total_loss(p, batch, cfg); }, params);
    record(relative_error(flatten(grad), numeric), "total loss", t);
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "4 x %d instances, worst relative error %.2e", kInstances, worst);
  return {true, buf};
}

// ---------------------------------------------------------------------------

Verdict acquisition_equivalence() {
  using namespace alforge::acquisition;
  int sequences = 0;

  {
    TracedPool t(true);
    RecordingOracle oracle(t.truth, 2);
    const auto r = acquire_distance_cl(t.model, t.pool, t.features, {3, Strategy::DistanceCL, 0}, oracle);
    // ids 1, 0, 2 sit at distances 4, 2, 6 from the centroid
    expect(ids_of(r) == std::vector<SampleId>{1, 0, 2}, "traced radius example");
  }
  {
    TracedPool t(false);
    t.pool.unlabeled.erase(2);
    t.pool.unlabeled.erase(3);
    RecordingOracle oracle(t.truth, 2);
    const auto r = acquire_distance_cl(t.model, t.pool, t.features, {2, Strategy::DistanceCL, 0}, oracle);
    // distances 4 then 2: the farthest comes first without a labeled non-iD
    expect(ids_of(r) == std::vector<SampleId>{1, 0}, "traced unbounded radius example");
  }
  {
    TracedPool t(true);
    for (SampleId id : {0, 1, 2, 3}) t.truth[static_cast<std::size_t>(id)] = {Category::Ambiguous, -1};
    RecordingOracle oracle(t.truth, 2);
    const auto r = acquire_distance_cl(t.model, t.pool, t.features, {2, Strategy::DistanceCL, 0}, oracle);
    expect(r.exhausted && r.id_found == 0 && r.annotated.size() == 4, "traced exhaustion example");
  }

  const std::pair<Strategy, reference::Uncertainty> rules[] = {
      {Strategy::Random, reference::Uncertainty::Random},
      {Strategy::LeastConfidence, reference::Uncertainty::LeastConfidence},
      {Strategy::Entropy, reference::Uncertainty::Entropy}};
  Rng rng(31337);
  for (int t = 0; t < 200; ++t) {
    const RandomCase rc = random_case(rng);
    const reference::ClusterPool rp = reference_pool(rc);
    const std::string where = "pool " + std::to_string(t) + ": ";
    auto compare = [&](const AcquisitionResult& got, const reference::Selection& want,
                       const RecordingOracle& oracle, const std::string& name) {
      expect(ids_of(got) == want.order, where + name + " selection differs from reference");
      expect(got.exhausted == want.exhausted, where + name + " exhaustion flag differs");
      expect(oracle.reads == want.order, where + name + " read truth outside its selection");
      ++sequences;
    };
    {
      RecordingOracle oracle(rc.truth, rc.k);
      const auto got = acquire_distance_cl(rc.model, rc.pool, rc.features, {rc.n_id, Strategy::DistanceCL, 0}, oracle);
      compare(got, reference::distance_cl(rp, rc.n_id), oracle, "Distance (CL)");
    }
    {
      RecordingOracle oracle(rc.truth, rc.k);
      const auto got = acquire_random_cl(rc.model, rc.pool, {rc.n_id, Strategy::RandomCL, rc.seed}, oracle);
      compare(got, reference::random_cl(rp, rc.n_id, rc.seed), oracle, "Random (CL)");
    }
    const auto params = random_params(tiny_architecture(2, rc.k + 1), rng.next_u64());
    std::vector<bool> unl(rc.truth.size(), false);
    for (SampleId id : rc.pool.unlabeled) unl[static_cast<std::size_t>(id)] = true;
    for (const auto& [strategy, rule] : rules) {
      const AcquisitionRequest req{rc.n_id, strategy, rc.seed};
      RecordingOracle oracle(rc.truth, rc.k);
      const auto got = consume_stream(acquire_uncertainty(rc.pool, &params, rc.features, req), rc.n_id, oracle);
      compare(got, reference::uncertainty(rc.truth, rc.k, unl, rc.features, &params, rule, rc.seed, rc.n_id), oracle,
              std::string(to_string(strategy)));
    }
  }
  return {true, "3 traced examples, 200 random pools, " + std::to_string(sequences) + " sequences matched"};
}

// ---------------------------------------------------------------------------

Verdict kmeans_suite() {
  using namespace alforge::clustering;
  {
    Matrix x(2, 4);
    x << 0, 0, 1, 1,  //
        0, 1, 0, 1;
    Matrix init(2, 2);
    init << 0, 1,  //
        0.5, 0.5;
    const std::vector<SampleId> ids{0, 1, 2, 3};
    const ClusterModel m = lloyd_from(ids, x, init, 100, 1e-12);
    expect(std::abs(m.objective - 1.0) <= 1e-9, "4-corner objective " + std::to_string(m.objective));
  }
  Rng rng(4242);
  int fits = 0;
  for (int t = 0; t < 80; ++t) {
    const int k = 1 + static_cast<int>(rng.index(8));
    const int n = k + static_cast<int>(rng.index(1001 - static_cast<std::size_t>(k)));
    const int dim = 1 + static_cast<int>(rng.index(5));
    Matrix x = random_matrix(dim, n, rng, 3.0);
    if (t % 3 == 0) x = x.array().round().matrix();
    std::vector<SampleId> ids(static_cast<std::size_t>(n));
    std::iota(ids.begin(), ids.end(), 0);
    KMeansOptions opts;
    opts.k = k;
    opts.seed = rng.next_u64();
    opts.n_init = 1 + static_cast<int>(rng.index(3));
    const ClusterModel m = kmeans_fit(ids, x, opts);
    const std::string where = "fit " + std::to_string(t) + ": ";
    for (std::size_t i = 1; i < m.objective_history.size(); ++i)
      expect(m.objective_history[i] <= m.objective_history[i - 1] * (1.0 + 1e-12) + 1e-12,
             where + "objective increased");
    for (Eigen::Index i = 0; i < x.cols(); ++i) {
      const auto at = static_cast<std::size_t>(i);
      const double own = (x.col(i) - m.centroids.col(m.assignment[at])).squaredNorm();
      for (int c = 0; c < m.k(); ++c) {
        const double d = (x.col(i) - m.centroids.col(c)).squaredNorm();
        expect(d > own || (d == own && c >= m.assignment[at]), where + "point " + std::to_string(i) + " not at nearest centroid");
      }
    }
    ++fits;
  }
  return {true, "4-corner objective 1.0, " + std::to_string(fits) + " fits monotone with optimal assignments"};
}

// ---------------------------------------------------------------------------

Verdict conservation() {
  const benchgen::Benchmark bench = benchgen::assemble(small_benchmark_spec(5));
  const std::size_t n = bench.pool.size();
  int runs = 0, stages = 0;
  for (Strategy s : acquisition::kAllStrategies) {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      driver::ExperimentConfig cfg = fast_experiment(s, seed);
      driver::Experiment e(bench.pool, bench.test, cfg);
      std::size_t labeled_before = 0;
      std::int64_t cost_before = 0;
      auto check = [&](const driver::StageMetrics& m) {
        const std::string where = std::string(acquisition::to_string(s)) + " seed " + std::to_string(seed) + " stage " +
                                  std::to_string(m.stage) + ": ";
        expect(e.pool().labeled.size() + e.pool().unlabeled.size() == n, where + "pool size changed");
        expect(m.labeled_size + m.unlabeled_size == n, where + "reported pool sizes do not add up");
        const auto growth = static_cast<std::int64_t>(e.pool().labeled.size() - labeled_before);
        expect(m.cumulative_cost - cost_before == growth, where + "stage cost differs from labeled growth");
        expect(m.queried.total() == growth, where + "per-category counts differ from labeled growth");
        expect(e.oracle().ledger().cumulative_cost() == m.cumulative_cost, where + "ledger disagrees with metrics");
        expect(static_cast<std::int64_t>(e.oracle().calls()) == m.cumulative_cost, where + "oracle calls differ from cost");
        labeled_before = e.pool().labeled.size();
        cost_before = m.cumulative_cost;
        ++stages;
      };
      check(e.bootstrap());
      while (!e.done()) check(e.run_stage());
      ++runs;
    }
  }
  return {true, std::to_string(runs) + " runs, " + std::to_string(stages) + " stages checked"};
}

// ---------------------------------------------------------------------------

Verdict filter_soundness() {
  const benchgen::BenchmarkSpec spec = [] {
    benchgen::BenchmarkSpec s;
    s.seed = 1;
    return s;
  }();
  // Same streams as assemble, so this is the committee that filtered the pool.
  Rng mean_rng(derive_seed(spec.seed, {1}));
  Rng id_rng(derive_seed(spec.seed, {2}));
  Rng amb_rng(derive_seed(spec.seed, {3}));
  const Matrix means = benchgen::place_class_means(spec, mean_rng);
  const benchgen::Component id = benchgen::gen_id(spec, means, spec.n_id, id_rng);
  const benchgen::Committee committee = benchgen::committee_train(id, spec);
  const benchgen::AmbiguousResult amb = benchgen::gen_ambiguous(spec, id, committee, amb_rng);
  expect(!amb.budget_exhausted, "ambiguous generation ran out of attempts");
  const auto votes = committee.votes(amb.samples.inputs);
  int violations = 0;
  for (const auto& v : votes) {
    const int distinct = benchgen::Committee::distinct(v);
    if (distinct < 2 || distinct >= 4) ++violations;
  }
  expect(violations == 0, std::to_string(violations) + " filter violations");

  const benchgen::Benchmark bench = benchgen::assemble(spec);
  std::map<Category, int> counts;
  for (std::size_t i = 0; i < bench.pool.size(); ++i) ++counts[bench.pool.truth(static_cast<SampleId>(i)).category];
  const std::string ratio = std::to_string(counts[Category::InDistribution]) + "/" +
                            std::to_string(counts[Category::Ambiguous]) + "/" +
                            std::to_string(counts[Category::OutOfDistribution]);
  expect(ratio == "4000/1000/1000", "assembled counts " + ratio);
  return {true, std::to_string(votes.size()) + " ambiguous samples re-scored, 0 violations; assembled " + ratio};
}

// ---------------------------------------------------------------------------

constexpr Strategy kOrder[] = {Strategy::Random, Strategy::LeastConfidence, Strategy::Entropy, Strategy::RandomCL,
                               Strategy::DistanceCL};

struct SeedOutcome {
  std::map<Strategy, std::string> csv;
  std::map<Strategy, driver::Summary> summary;
};

SeedOutcome run_seed(std::uint64_t seed) {
  benchgen::BenchmarkSpec spec;
  spec.seed = seed;
  const benchgen::Benchmark bench = benchgen::assemble(spec);
  SeedOutcome out;
  std::optional<learner::EncoderParams> stage0;
  for (Strategy s : kOrder) {
    driver::ExperimentConfig cfg;
    cfg.strategy = s;
    cfg.seed = seed;
    if (acquisition::uses_clusters(s) && !stage0) stage0 = driver::initial_representation(bench.pool, cfg);
    const auto series =
        driver::run_experiment(bench.pool, bench.test, cfg, {}, acquisition::uses_clusters(s) ? stage0 : std::nullopt);
    std::ostringstream csv;
    driver::write_metrics_csv(csv, series);
    out.csv[s] = csv.str();
    out.summary[s] = driver::summarize(s, series);
  }
  return out;
}

constexpr std::uint64_t kSeeds[] = {1, 2, 3, 4, 5};
std::map<std::uint64_t, SeedOutcome> first_pass;

Verdict end_to_end(const std::filesystem::path& out_dir) {
  std::vector<std::int64_t> dcl_costs, entropy_costs;
  int dcl_best = 0;
  std::printf("    seed  %-18s %7s %6s %9s\n", "strategy", "acc", "cost", "cost/acc");
  for (std::uint64_t seed : kSeeds) {
    const SeedOutcome& o = first_pass[seed] = run_seed(seed);
    double best_other = 1e300;
    for (Strategy s : kOrder) {
      const driver::Summary& sm = o.summary.at(s);
      std::printf("    %4llu  %-18s %7.2f %6lld %9.2f\n", static_cast<unsigned long long>(seed),
                  std::string(acquisition::display_name(s)).c_str(), sm.final_accuracy, static_cast<long long>(sm.final_cost),
                  sm.cost_per_accuracy);
      if (s != Strategy::DistanceCL) best_other = std::min(best_other, sm.cost_per_accuracy);
      if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        std::ofstream(out_dir / ("seed" + std::to_string(seed) + "_" + std::string(acquisition::to_string(s)) + ".csv")) << o.csv.at(s);
      }
    }
    std::fflush(stdout);
    const driver::Summary& d = o.summary.at(Strategy::DistanceCL);
    if (d.cost_per_accuracy < best_other) ++dcl_best;
    dcl_costs.push_back(d.final_cost);
    entropy_costs.push_back(o.summary.at(Strategy::Entropy).final_cost);
  }
  auto median = [](std::vector<std::int64_t> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  const std::int64_t dm = median(dcl_costs), em = median(entropy_costs);
  const std::string detail = "median cost Distance (CL) " + std::to_string(dm) + " vs Entropy " + std::to_string(em) +
                             "; Distance (CL) lowest cost/acc in " + std::to_string(dcl_best) + " of 5 seeds";
  return {dm < em && dcl_best >= 4, detail};
}

Verdict determinism() {
  expect(first_pass.size() == std::size(kSeeds), "end-to-end runs did not complete");
  int files = 0;
  for (std::uint64_t seed : kSeeds) {
    const SeedOutcome again = run_seed(seed);
    for (Strategy s : kOrder) {
      expect(again.csv.at(s) == first_pass.at(seed).csv.at(s),
             "seed " + std::to_string(seed) + " " + std::string(acquisition::to_string(s)) + " metrics differ on rerun");
      ++files;
    }
  }
  return {true, std::to_string(files) + " metrics CSVs byte-identical on rerun"};
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
  const std::filesystem::path out_dir = argc > 1 ? argv[1] : "";
  run(1, "cost per accuracy arithmetic", table_arithmetic);
  run(2, "loss gradients against central differences", gradients);
  run(3, "acquisition against brute-force references", acquisition_equivalence);
  run(4, "k-means properties", kmeans_suite);
  run(5, "pool conservation and cost exactness", conservation);
  run(6, "ambiguous filter soundness and composition", filter_soundness);
  run(7, "end-to-end annotation cost ordering", [&] { return end_to_end(out_dir); });
  run(8, "end-to-end determinism", determinism);
  std::printf("%s: %d criteria failed\n", failures == 0 ? "PASS" : "FAIL", failures);
  return failures == 0 ? 0 : 1;
}
