#include "alforge/learner.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace alforge::learner {

void TrainConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw Error(ErrorCode::InvalidConfig, field + " " + why);
  };
  if (epochs < 0) fail("epochs", "must be >= 0");
  if (batch_size_unlabeled < 1) fail("batch_size_unlabeled", "must be >= 1");
  if (batch_size_labeled < 1) fail("batch_size_labeled", "must be >= 1");
  if (!(learning_rate > 0.0)) fail("learning_rate", "must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum", "must be in [0,1)");
  if (!(weight_decay >= 0.0)) fail("weight_decay", "must be >= 0");
  if (!(augment_noise_sigma >= 0.0)) fail("augment_noise_sigma", "must be >= 0");
  if (!(augment_mask_prob >= 0.0 && augment_mask_prob < 1.0)) fail("augment_mask_prob", "must be in [0,1)");
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) fail("label_smoothing", "must be in [0,1)");
}

Vector augment(const Vector& x, double noise_sigma, double mask_prob, Rng& rng) {
  Vector out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double noisy = noise_sigma > 0.0 ? x(i) + noise_sigma * rng.normal() : x(i);
    const bool keep = mask_prob > 0.0 ? !rng.bernoulli(mask_prob) : true;
    out(i) = keep ? noisy : 0.0;
  }
  return out;
}

namespace {

enum TensorGroup : unsigned { kBackbone = 1, kProjection = 2, kClassifier = 4 };

unsigned group_of(std::size_t tensor_index) {
  if (tensor_index < 6) return kBackbone;
  if (tensor_index < 8) return kProjection;
  return kClassifier;
}

/// Momentum SGD with L2 weight decay over a subset of the parameter tensors.
class MomentumSgd {
 public:
  MomentumSgd(const EncoderParams& like, double momentum, double weight_decay, unsigned groups)
      : velocity_(EncoderParams::zeros(like.arch)), momentum_(momentum), weight_decay_(weight_decay), groups_(groups) {}

  void step(EncoderParams& params, const EncoderParams& grad, double lr) {
    auto w = params.tensors();
    auto g = grad.tensors();
    auto v = velocity_.tensors();
    for (std::size_t t = 0; t < EncoderParams::kTensorCount; ++t) {
      if (!(group_of(t) & groups_)) continue;
      for (std::size_t i = 0; i < w[t].size(); ++i) {
        v[t][i] = momentum_ * v[t][i] + g[t][i] + weight_decay_ * w[t][i];
        w[t][i] -= lr * v[t][i];
      }
    }
  }

 private:
  EncoderParams velocity_;
  double momentum_;
  double weight_decay_;
  unsigned groups_;
};

double cosine_lr(double base, std::size_t step, std::size_t total) {
  if (total == 0) return base;
  return base * 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) / static_cast<double>(total)));
}

Matrix gather(const Matrix& inputs, std::span<const SampleId> ids) {
  Matrix out(inputs.rows(), static_cast<Eigen::Index>(ids.size()));
  for (std::size_t i = 0; i < ids.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = inputs.col(ids[i]);
  return out;
}

void check_finite(double loss, std::size_t step) {
  if (!std::isfinite(loss)) throw Error(ErrorCode::DivergedLoss, "non-finite loss at step " + std::to_string(step));
}

}  // namespace

TrainResult train_representation(const PoolState& pool, const Matrix& inputs, const TrainConfig& cfg,
                                  const EncoderParams& init, const LossConfig& loss_cfg) {
  cfg.validate();
  if (pool.unlabeled.empty()) throw Error(ErrorCode::PoolExhausted, "representation training needs unlabeled samples");
  if (inputs.rows() != init.arch.input_dim)
    throw Error(ErrorCode::DimensionMismatch, "inputs do not match the model input dimension");
  TrainResult result{init, {}};
  if (cfg.epochs == 0) return result;

  Rng rng(cfg.seed);
  std::vector<SampleId> unlabeled(pool.unlabeled.begin(), pool.unlabeled.end());
  std::vector<LabeledExample> labeled = pool.labeled;
  const std::size_t bu = static_cast<std::size_t>(cfg.batch_size_unlabeled);
  const std::size_t bl = std::min(static_cast<std::size_t>(cfg.batch_size_labeled), labeled.size());
  const std::size_t steps_per_epoch = (unlabeled.size() + bu - 1) / bu;
  const std::size_t total_steps = steps_per_epoch * static_cast<std::size_t>(cfg.epochs);

  MomentumSgd opt(init, cfg.momentum, cfg.weight_decay, kBackbone | kProjection);
  EncoderParams grad;
  std::size_t step = 0;
  std::size_t labeled_cursor = labeled.size();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(unlabeled);
    double epoch_loss = 0.0;
    std::size_t counted = 0;
    for (std::size_t start = 0; start < unlabeled.size(); start += bu, ++step) {
      const std::size_t n = std::min(bu, unlabeled.size() - start);
      ContrastiveBatch batch;
      batch.views.resize(inputs.rows(), static_cast<Eigen::Index>(2 * n));
      for (std::size_t i = 0; i < n; ++i) {
        const Vector x = inputs.col(unlabeled[start + i]);
        batch.views.col(static_cast<Eigen::Index>(2 * i)) =
            augment(x, cfg.augment_noise_sigma, cfg.augment_mask_prob, rng);
        batch.views.col(static_cast<Eigen::Index>(2 * i + 1)) =
            augment(x, cfg.augment_noise_sigma, cfg.augment_mask_prob, rng);
      }
      if (bl >= 2) {
        batch.labeled.resize(inputs.rows(), static_cast<Eigen::Index>(bl));
        for (std::size_t i = 0; i < bl; ++i) {
          if (labeled_cursor == labeled.size()) {
            rng.shuffle(labeled);
            labeled_cursor = 0;
          }
          const LabeledExample& e = labeled[labeled_cursor++];
          batch.labeled.col(static_cast<Eigen::Index>(i)) = inputs.col(e.id);
          batch.labels.push_back(e.label);
        }
      }
      if (n < 2 && bl < 2) continue;
      const double loss = total_loss(result.params, batch, loss_cfg, &grad);
      check_finite(loss, step);
      opt.step(result.params, grad, cosine_lr(cfg.learning_rate, step, total_steps));
      epoch_loss += loss;
      ++counted;
    }
    result.loss_history.push_back(counted ? epoch_loss / static_cast<double>(counted) : 0.0);
  }
  if (!result.params.all_finite()) throw Error(ErrorCode::DivergedLoss, "parameters became non-finite");
  return result;
}

std::vector<LabeledExample> undersample_non_id(std::span<const LabeledExample> labeled, int num_classes) {
  std::size_t id_count = 0;
  std::vector<SampleId> non_id;
  for (const LabeledExample& e : labeled) {
    if (e.label <= num_classes)
      ++id_count;
    else
      non_id.push_back(e.id);
  }
  std::size_t quota = id_count / static_cast<std::size_t>(num_classes);
  if (quota == 0 && id_count > 0) quota = 1;
  std::sort(non_id.begin(), non_id.end());
  if (non_id.size() > quota) non_id.resize(quota);
  const std::set<SampleId> keep(non_id.begin(), non_id.end());
  std::vector<LabeledExample> out;
  for (const LabeledExample& e : labeled)
    if (e.label <= num_classes || keep.contains(e.id)) out.push_back(e);
  return out;
}

TrainResult train_classifier(const EncoderParams& init, const Matrix& inputs, std::span<const LabeledExample> examples,
                             const TrainConfig& cfg) {
  cfg.validate();
  std::set<int> distinct;
  for (const LabeledExample& e : examples) distinct.insert(e.label);
  if (distinct.size() < 2) throw Error(ErrorCode::InsufficientLabels, "need examples of at least two labels");
  if (inputs.rows() != init.arch.input_dim)
    throw Error(ErrorCode::DimensionMismatch, "inputs do not match the model input dimension");
  TrainResult result{init, {}};
  if (cfg.epochs == 0) return result;

  Rng rng(cfg.seed);
  std::vector<LabeledExample> order(examples.begin(), examples.end());
  const std::size_t b = static_cast<std::size_t>(cfg.batch_size_labeled);
  const std::size_t steps_per_epoch = (order.size() + b - 1) / b;
  const std::size_t total_steps = steps_per_epoch * static_cast<std::size_t>(cfg.epochs);
  MomentumSgd opt(init, cfg.momentum, cfg.weight_decay, kBackbone | kClassifier);
  EncoderParams grad;
  std::size_t step = 0;
  std::vector<SampleId> ids;
  std::vector<int> labels;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += b, ++step) {
      const std::size_t n = std::min(b, order.size() - start);
      ids.clear();
      labels.clear();
      for (std::size_t i = 0; i < n; ++i) {
        ids.push_back(order[start + i].id);
        labels.push_back(order[start + i].label);
      }
      const double loss = classification_loss(result.params, gather(inputs, ids), labels, cfg.label_smoothing, &grad);
      check_finite(loss, step);
      opt.step(result.params, grad, cosine_lr(cfg.learning_rate, step, total_steps));
      epoch_loss += loss;
    }
    result.loss_history.push_back(epoch_loss / static_cast<double>(steps_per_epoch));
  }
  if (!result.params.all_finite()) throw Error(ErrorCode::DivergedLoss, "parameters became non-finite");
  return result;
}

namespace {
void require_two_labels(std::span<const LabeledExample> labeled) {
  std::set<int> distinct;
  for (const LabeledExample& e : labeled) distinct.insert(e.label);
  if (distinct.size() < 2) throw Error(ErrorCode::InsufficientLabels, "labeled pool needs at least two distinct labels");
}
}  // namespace

TrainResult finetune_classifier(const EncoderParams& params, std::span<const LabeledExample> labeled,
                                const Matrix& inputs, int num_classes, const TrainConfig& cfg) {
  require_two_labels(labeled);
  const std::vector<LabeledExample> train_set = undersample_non_id(labeled, num_classes);
  return train_classifier(params, inputs, train_set, cfg);
}

TrainResult train_supervised_baseline(const Architecture& arch, std::span<const LabeledExample> labeled,
                                      const Matrix& inputs, int num_classes, const TrainConfig& cfg) {
  require_two_labels(labeled);
  const EncoderParams init = EncoderParams::random(arch, derive_seed(cfg.seed, {0x1417}));
  return finetune_classifier(init, labeled, inputs, num_classes, cfg);
}

}  // namespace alforge::learner
