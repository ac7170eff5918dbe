#pragma once

// Small benchmark and fast experiment settings shared by the slower suites.

#include "alforge/benchgen.hpp"
#include "alforge/driver.hpp"

namespace testsupport {

inline alforge::benchgen::BenchmarkSpec small_benchmark_spec(std::uint64_t seed = 1) {
  alforge::benchgen::BenchmarkSpec s;
  s.num_classes = 3;
  s.dim = 6;
  s.n_id = 160;
  s.n_ambiguous = 40;
  s.n_ood = 40;
  s.n_test = 90;
  s.committee_size = 3;
  s.seed = seed;
  return s;
}

inline alforge::driver::ExperimentConfig fast_experiment(alforge::acquisition::Strategy strategy,
                                                         std::uint64_t seed = 1) {
  alforge::driver::ExperimentConfig c;
  c.strategy = strategy;
  c.initial_id = 12;
  c.per_stage_id = 6;
  c.target_id = 36;
  c.seed = seed;
  c.representation_initial.epochs = 3;
  c.representation_initial.batch_size_unlabeled = 64;
  c.representation_initial.batch_size_labeled = 32;
  c.representation_continue = c.representation_initial;
  c.representation_continue.epochs = 1;
  c.finetune.epochs = 8;
  c.finetune.batch_size_labeled = 16;
  c.baseline = c.finetune;
  c.kmeans_n_init = 2;
  c.kmeans_max_iter = 50;
  return c;
}

}  // namespace testsupport
