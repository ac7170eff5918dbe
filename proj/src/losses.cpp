#include "alforge/learner.hpp"

#include <cmath>
#include <limits>
#include <map>

namespace alforge::learner {

namespace {

constexpr double kUnitTolerance = 1e-6;

void check_unit(const Matrix& z) {
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    const double n = z.col(c).norm();
    if (!(std::abs(n - 1.0) <= kUnitTolerance))
      throw Error(ErrorCode::NonUnitInput, "column " + std::to_string(c) + " has norm " + std::to_string(n));
  }
}

void check_tau(const LossConfig& cfg) {
  if (!(cfg.tau > 0.0)) throw Error(ErrorCode::InvalidConfig, "temperature must be positive");
}

// Shared by both contrastive losses. positives(i) lists the positive indices
// of anchor i; the denominator runs over every k != i. Anchors with no
// positive are skipped, the result is averaged over the remaining anchors.
template <class Positives>
LossWithGrad contrastive_core(const Matrix& z, double tau, Positives&& positives) {
  const Eigen::Index n = z.cols();
  const Matrix sim = (z.transpose() * z) / tau;
  Matrix g = Matrix::Zero(n, n);
  double total = 0.0;
  std::size_t anchors = 0;
  std::vector<double> prob(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::vector<Eigen::Index> pos = positives(i);
    if (pos.empty()) continue;
    double m = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < n; ++k)
      if (k != i) m = std::max(m, sim(i, k));
    double denom = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      const double e = (k == i) ? 0.0 : std::exp(sim(i, k) - m);
      prob[static_cast<std::size_t>(k)] = e;
      denom += e;
    }
    const double lse = m + std::log(denom);
    double anchor_loss = 0.0;
    for (Eigen::Index j : pos) anchor_loss += lse - sim(i, j);
    const double inv_pos = 1.0 / static_cast<double>(pos.size());
    total += anchor_loss * inv_pos;
    for (Eigen::Index k = 0; k < n; ++k) g(i, k) = prob[static_cast<std::size_t>(k)] / denom;
    for (Eigen::Index j : pos) g(i, j) -= inv_pos;
    ++anchors;
  }
  if (anchors == 0) return LossWithGrad{0.0, Matrix::Zero(z.rows(), z.cols())};
  const double scale = 1.0 / static_cast<double>(anchors);
  g *= scale;
  LossWithGrad out;
  // Clamp tiny negative round-off; the loss is a mean of -log(p) with p <= 1.
  out.loss = std::max(0.0, total * scale);
  out.grad = z * (g + g.transpose()) / tau;
  return out;
}

}  // namespace

LossWithGrad nt_xent_loss_grad(const Matrix& z, const LossConfig& cfg) {
  check_tau(cfg);
  if (z.cols() < 2 || z.cols() % 2 != 0)
    throw Error(ErrorCode::DimensionMismatch, "NT-Xent needs 2N >= 2 columns, got " + std::to_string(z.cols()));
  check_unit(z);
  return contrastive_core(z, cfg.tau, [](Eigen::Index i) { return std::vector<Eigen::Index>{i ^ 1}; });
}

double nt_xent_loss(const Matrix& z, const LossConfig& cfg) { return nt_xent_loss_grad(z, cfg).loss; }

LossWithGrad supcon_loss_grad(const Matrix& z, std::span<const int> labels, const LossConfig& cfg) {
  check_tau(cfg);
  if (static_cast<std::size_t>(z.cols()) != labels.size())
    throw Error(ErrorCode::DimensionMismatch, "labels and projections differ in count");
  if (z.cols() < 2) throw Error(ErrorCode::NoPositivePairs, "SupCon needs at least two samples");
  std::map<int, std::vector<Eigen::Index>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(static_cast<Eigen::Index>(i));
  bool any = false;
  for (const auto& [label, members] : groups) any = any || members.size() >= 2;
  if (!any) throw Error(ErrorCode::NoPositivePairs, "no label appears twice in the batch");
  check_unit(z);
  return contrastive_core(z, cfg.tau, [&](Eigen::Index i) {
    std::vector<Eigen::Index> pos;
    for (Eigen::Index j : groups[labels[static_cast<std::size_t>(i)]])
      if (j != i) pos.push_back(j);
    return pos;
  });
}

double supcon_loss(const Matrix& z, std::span<const int> labels, const LossConfig& cfg) {
  return supcon_loss_grad(z, labels, cfg).loss;
}

LossWithGrad cross_entropy_loss_grad(const Matrix& logits, std::span<const int> labels, double smoothing) {
  const Eigen::Index classes = logits.rows();
  if (static_cast<std::size_t>(logits.cols()) != labels.size())
    throw Error(ErrorCode::DimensionMismatch, "labels and logits differ in count");
  if (!(smoothing >= 0.0 && smoothing < 1.0)) throw Error(ErrorCode::InvalidConfig, "label smoothing must be in [0,1)");
  LossWithGrad out{0.0, Matrix(classes, logits.cols())};
  if (logits.cols() == 0) return out;
  const double off = smoothing / static_cast<double>(classes);
  const double inv_batch = 1.0 / static_cast<double>(logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const int y = labels[static_cast<std::size_t>(c)];
    if (y < 1 || y > classes)
      throw Error(ErrorCode::ClassOutOfRange, "label " + std::to_string(y) + " outside 1.." + std::to_string(classes));
    const double m = logits.col(c).maxCoeff();
    Vector e = (logits.col(c).array() - m).exp().matrix();
    const double denom = e.sum();
    const double lse = m + std::log(denom);
    double loss = 0.0;
    for (Eigen::Index k = 0; k < classes; ++k) {
      const double target = off + (k == y - 1 ? 1.0 - smoothing : 0.0);
      loss += target * (lse - logits(k, c));
      out.grad(k, c) = (e(k) / denom - target) * inv_batch;
    }
    out.loss += loss * inv_batch;
  }
  return out;
}

double cross_entropy_loss(const Vector& logits, int y, double smoothing) {
  const int labels[1] = {y};
  return cross_entropy_loss_grad(logits, labels, smoothing).loss;
}

namespace {
void reset_grad(const EncoderParams& params, EncoderParams* grad) {
  if (grad) *grad = EncoderParams::zeros(params.arch);
}

bool has_positive_pair(std::span<const int> labels) {
  std::map<int, int> counts;
  for (int y : labels)
    if (++counts[y] >= 2) return true;
  return false;
}
}  // namespace

double total_loss(const EncoderParams& params, const ContrastiveBatch& batch, const LossConfig& cfg,
                  EncoderParams* grad) {
  reset_grad(params, grad);
  double loss = 0.0;
  const Matrix none;
  if (batch.views.cols() >= 2) {
    ForwardPass fp = forward(params, batch.views, true, false);
    LossWithGrad con = nt_xent_loss_grad(fp.z, cfg);
    loss += con.loss;
    if (grad) backward(params, fp, con.grad, none, *grad);
  }
  if (batch.labeled.cols() >= 2 && has_positive_pair(batch.labels)) {
    ForwardPass fp = forward(params, batch.labeled, true, false);
    LossWithGrad sup = supcon_loss_grad(fp.z, batch.labels, cfg);
    loss += sup.loss;
    if (grad) backward(params, fp, sup.grad, none, *grad);
  }
  return loss;
}

double classification_loss(const EncoderParams& params, const Matrix& x, std::span<const int> labels,
                           double smoothing, EncoderParams* grad) {
  reset_grad(params, grad);
  ForwardPass fp = forward(params, x, false, true);
  LossWithGrad ce = cross_entropy_loss_grad(fp.logits, labels, smoothing);
  if (grad) backward(params, fp, Matrix(), ce.grad, *grad);
  return ce.loss;
}

}  // namespace alforge::learner
