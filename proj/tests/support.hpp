#pragma once

// Shared helpers for the test binaries: finite differences, small random
// fixtures and an oracle double that records every truth access.

#include "alforge/acquisition.hpp"
#include "alforge/core.hpp"
#include "alforge/learner.hpp"
#include "alforge/rng.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <vector>

namespace testsupport {

using alforge::Matrix;
using alforge::Vector;

/// Norm-wise relative error between two gradients.
inline double relative_error(const Matrix& a, const Matrix& b) {
  const double scale = std::max({a.norm(), b.norm(), 1e-8});
  return (a - b).norm() / scale;
}

/// Central differences of f at x, one coordinate at a time.
inline Matrix numeric_gradient(const std::function<double(const Matrix&)>& f, Matrix x, double h = 1e-5) {
  Matrix g(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double keep = x.data()[i];
    x.data()[i] = keep + h;
    const double up = f(x);
    x.data()[i] = keep - h;
    const double down = f(x);
    x.data()[i] = keep;
    g.data()[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// Flattens every tensor of a parameter set into one column.
inline Vector flatten(const alforge::learner::EncoderParams& p) {
  Vector out(static_cast<Eigen::Index>(p.parameter_count()));
  Eigen::Index at = 0;
  for (auto t : p.tensors())
    for (double v : t) out(at++) = v;
  return out;
}

/// Central differences over every parameter of `p`.
inline Vector numeric_param_gradient(const std::function<double(const alforge::learner::EncoderParams&)>& f,
                                     alforge::learner::EncoderParams p, double h = 1e-5) {
  Vector g(static_cast<Eigen::Index>(p.parameter_count()));
  Eigen::Index at = 0;
  for (auto t : p.tensors()) {
    for (double& v : t) {
      const double keep = v;
      v = keep + h;
      const double up = f(p);
      v = keep - h;
      const double down = f(p);
      v = keep;
      g(at++) = (up - down) / (2.0 * h);
    }
  }
  return g;
}

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, alforge::Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

inline Matrix random_unit_columns(Eigen::Index rows, Eigen::Index cols, alforge::Rng& rng) {
  Matrix m = random_matrix(rows, cols, rng);
  for (Eigen::Index c = 0; c < cols; ++c) m.col(c).normalize();
  return m;
}

inline Matrix normalize_columns(Matrix m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) m.col(c).normalize();
  return m;
}

inline alforge::learner::Architecture tiny_architecture(int input_dim = 3, int outputs = 3) {
  alforge::learner::Architecture a;
  a.input_dim = input_dim;
  a.hidden1 = 5;
  a.hidden2 = 4;
  a.repr_dim = 3;
  a.proj_dim = 2;
  a.num_outputs = outputs;
  return a;
}

/// Random parameters with non-zero biases, so bias gradients are exercised.
inline alforge::learner::EncoderParams random_params(const alforge::learner::Architecture& arch, std::uint64_t seed) {
  auto p = alforge::learner::EncoderParams::random(arch, seed);
  alforge::Rng rng(seed ^ 0x5bd1e995ULL);
  for (auto* l : {&p.fc1, &p.fc2, &p.fc3, &p.projection, &p.classifier})
    for (Eigen::Index i = 0; i < l->b.size(); ++i) l->b(i) = 0.3 * rng.normal();
  return p;
}

/// Oracle double over an explicit truth table. Records every id whose truth
/// was consulted, so tests can prove that only annotate() reads labels.
class RecordingOracle : public alforge::acquisition::Oracle {
 public:
  RecordingOracle(std::vector<alforge::Truth> truth, int k) : truth_(std::move(truth)), k_(k) {}

  alforge::LabeledExample annotate(alforge::SampleId id) override {
    reads.push_back(id);
    const alforge::Truth& t = truth_.at(static_cast<std::size_t>(id));
    return {id, t.in_distribution() ? t.cls : k_ + 1};
  }
  int num_classes() const override { return k_; }

  std::vector<alforge::SampleId> reads;

 private:
  std::vector<alforge::Truth> truth_;
  int k_;
};

inline alforge::Truth random_truth(alforge::Rng& rng, int k) {
  const double u = rng.uniform();
  if (u < 0.55) return {alforge::Category::InDistribution, 1 + static_cast<int>(rng.index(static_cast<std::size_t>(k)))};
  if (u < 0.8) return {alforge::Category::Ambiguous, -1};
  return {alforge::Category::OutOfDistribution, -1};
}

}  // namespace testsupport
