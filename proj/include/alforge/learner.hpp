#pragma once

// Representation model, heads, losses and training loops.
//
// The network is a fixed MLP: input -> hidden1 -> hidden2 -> repr (ELU between
// layers, linear output). Two heads sit on the representation h: a projection
// repr -> proj whose output is normalized to unit length, and a linear
// classifier repr -> num_outputs. Gradients are derived by hand.

#include "alforge/core.hpp"
#include "alforge/rng.hpp"

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace alforge::learner {

struct Architecture {
  int input_dim = 0;
  int hidden1 = 128;
  int hidden2 = 128;
  int repr_dim = 64;
  int proj_dim = 32;
  int num_outputs = 0;  // K+1 for the active learner, K for committee members

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// Default architecture for `input_dim` features and `num_outputs` logits.
Architecture default_architecture(int input_dim, int num_outputs);

struct Layer {
  Matrix w;  // out x in
  Vector b;
};

struct EncoderParams {
  Architecture arch;
  Layer fc1, fc2, fc3;
  Layer projection;
  Layer classifier;

  static EncoderParams zeros(const Architecture& arch);
  /// Glorot-uniform weights, zero biases.
  static EncoderParams random(const Architecture& arch, std::uint64_t seed);

  static constexpr std::size_t kTensorCount = 10;
  /// Flat views over every weight and bias, in checkpoint order.
  std::array<std::span<double>, kTensorCount> tensors();
  std::array<std::span<const double>, kTensorCount> tensors() const;
  std::size_t parameter_count() const;
  bool all_finite() const;
};

struct Encoded {
  Vector h;
  Vector z;
};

Encoded encoder_forward(const EncoderParams& params, const Vector& x);

/// Column-per-sample forward pass with everything backward() needs.
struct ForwardPass {
  Matrix x, a1, u1, a2, u2, h;
  Matrix p, z;
  Vector p_norm;
  Matrix logits;
};

ForwardPass forward(const EncoderParams& params, const Matrix& x, bool with_projection = true, bool with_classifier = true);

/// Accumulates parameter gradients given loss gradients w.r.t. z and/or the
/// logits. Either upstream matrix may be empty (size 0) to skip that head.
void backward(const EncoderParams& params, const ForwardPass& fp, const Matrix& dz, const Matrix& dlogits,
              EncoderParams& grad);

/// Representations h for every column of `x` (repr_dim x n).
Matrix representations(const EncoderParams& params, const Matrix& x);
/// Softmax over the classifier logits for every column ((num_outputs) x n).
Matrix predict_batch(const EncoderParams& params, const Matrix& x);
Vector predict(const EncoderParams& params, const Vector& x);

struct LossConfig {
  double tau = 0.07;
};

struct LossWithGrad {
  double loss = 0.0;
  Matrix grad;  // same shape as the input matrix
};

/// NT-Xent over 2N unit columns where columns (2i, 2i+1) are two views of one
/// sample. Validates unit norm.
double nt_xent_loss(const Matrix& z, const LossConfig& cfg);
LossWithGrad nt_xent_loss_grad(const Matrix& z, const LossConfig& cfg);

/// Supervised contrastive loss, mean-over-positives form. Labels are arbitrary
/// integers; anchors without a positive contribute nothing.
double supcon_loss(const Matrix& z, std::span<const int> labels, const LossConfig& cfg);
LossWithGrad supcon_loss_grad(const Matrix& z, std::span<const int> labels, const LossConfig& cfg);

/// Softmax cross-entropy with label smoothing; `y` is 1-based.
double cross_entropy_loss(const Vector& logits, int y, double smoothing = 0.1);
/// Mean over columns; gradient w.r.t. the logits.
LossWithGrad cross_entropy_loss_grad(const Matrix& logits, std::span<const int> labels, double smoothing);

/// Unlabeled pairs plus labeled SupCon batch. Either batch may be empty.
struct ContrastiveBatch {
  Matrix views;             // 2N columns, pairs adjacent
  Matrix labeled;           // M columns
  std::vector<int> labels;  // size M
};

/// L_total = L_con + L_supcon and its gradient w.r.t. the backbone and
/// projection head. A labeled batch without any repeated label adds 0.
double total_loss(const EncoderParams& params, const ContrastiveBatch& batch, const LossConfig& cfg,
                  EncoderParams* grad = nullptr);

/// Mean smoothed cross-entropy of the classifier over a labeled batch.
double classification_loss(const EncoderParams& params, const Matrix& x, std::span<const int> labels,
                           double smoothing, EncoderParams* grad = nullptr);

struct TrainConfig {
  int epochs = 10;
  int batch_size_unlabeled = 256;
  int batch_size_labeled = 64;
  double learning_rate = 0.05;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  std::uint64_t seed = 0;
  double augment_noise_sigma = 0.3;
  double augment_mask_prob = 0.1;
  double label_smoothing = 0.1;

  void validate() const;
};

/// Noise-and-mask view of x: mask * (x + eps), eps ~ N(0, sigma^2 I).
Vector augment(const Vector& x, double noise_sigma, double mask_prob, Rng& rng);

struct TrainResult {
  EncoderParams params;
  std::vector<double> loss_history;  // mean loss per epoch
};

/// Contrastive training on both pools (NT-Xent on unlabeled, SupCon on
/// labeled). Updates the backbone and the projection head.
TrainResult train_representation(const PoolState& pool, const Matrix& inputs, const TrainConfig& cfg,
                                  const EncoderParams& init, const LossConfig& loss = {});

/// Labeled set after undersampling the auxiliary class (label K+1) to the
/// mean iD count per class, keeping the lowest ids.
std::vector<LabeledExample> undersample_non_id(std::span<const LabeledExample> labeled, int num_classes);

/// Supervised training of backbone + classifier on explicit examples.
TrainResult train_classifier(const EncoderParams& init, const Matrix& inputs, std::span<const LabeledExample> examples,
                             const TrainConfig& cfg);

/// Undersamples then trains backbone and classifier with cross-entropy.
TrainResult finetune_classifier(const EncoderParams& params, std::span<const LabeledExample> labeled,
                                const Matrix& inputs, int num_classes, const TrainConfig& cfg);

/// As finetune_classifier, from a fresh initialization seeded by cfg.seed.
TrainResult train_supervised_baseline(const Architecture& arch, std::span<const LabeledExample> labeled,
                                      const Matrix& inputs, int num_classes, const TrainConfig& cfg);

void save_checkpoint(std::ostream& out, const EncoderParams& params);
EncoderParams load_checkpoint(std::istream& in);

}  // namespace alforge::learner
