#include "alforge/learner.hpp"

#include <cmath>

namespace alforge::learner {

namespace {

Layer make_layer(int out, int in) { return Layer{Matrix::Zero(out, in), Vector::Zero(out)}; }

void glorot(Layer& layer, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(layer.w.rows() + layer.w.cols()));
  // Column-major fill order is part of the seed contract.
  for (Eigen::Index i = 0; i < layer.w.size(); ++i) layer.w.data()[i] = rng.uniform(-limit, limit);
  layer.b.setZero();
}

Matrix elu(const Matrix& a) {
  return a.unaryExpr([](double v) { return v > 0.0 ? v : std::expm1(v); });
}

Matrix elu_grad(const Matrix& a) {
  return a.unaryExpr([](double v) { return v > 0.0 ? 1.0 : std::exp(v); });
}

Matrix affine(const Layer& layer, const Matrix& x) {
  Matrix out = layer.w * x;
  out.colwise() += layer.b;
  return out;
}

void accumulate(Layer& g, const Matrix& delta, const Matrix& input) {
  g.w.noalias() += delta * input.transpose();
  g.b += delta.rowwise().sum();
}

// Column-wise softmax with max subtraction.
Matrix softmax_columns(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const double m = logits.col(c).maxCoeff();
    out.col(c) = (logits.col(c).array() - m).exp().matrix();
    out.col(c) /= out.col(c).sum();
  }
  return out;
}

void check_input(const EncoderParams& params, Eigen::Index rows) {
  if (rows != params.arch.input_dim)
    throw Error(ErrorCode::DimensionMismatch, "input has dimension " + std::to_string(rows) + ", model expects " +
                                                  std::to_string(params.arch.input_dim));
}

constexpr double kNormFloor = 1e-12;

}  // namespace

Architecture default_architecture(int input_dim, int num_outputs) {
  Architecture a;
  a.input_dim = input_dim;
  a.num_outputs = num_outputs;
  return a;
}

EncoderParams EncoderParams::zeros(const Architecture& arch) {
  if (arch.input_dim < 1 || arch.hidden1 < 1 || arch.hidden2 < 1 || arch.repr_dim < 1 || arch.proj_dim < 1 ||
      arch.num_outputs < 1)
    throw Error(ErrorCode::InvalidConfig, "architecture dimensions must be positive");
  EncoderParams p;
  p.arch = arch;
  p.fc1 = make_layer(arch.hidden1, arch.input_dim);
  p.fc2 = make_layer(arch.hidden2, arch.hidden1);
  p.fc3 = make_layer(arch.repr_dim, arch.hidden2);
  p.projection = make_layer(arch.proj_dim, arch.repr_dim);
  p.classifier = make_layer(arch.num_outputs, arch.repr_dim);
  return p;
}

EncoderParams EncoderParams::random(const Architecture& arch, std::uint64_t seed) {
  EncoderParams p = zeros(arch);
  Rng rng(seed);
  for (Layer* l : {&p.fc1, &p.fc2, &p.fc3, &p.projection, &p.classifier}) glorot(*l, rng);
  return p;
}

std::array<std::span<double>, EncoderParams::kTensorCount> EncoderParams::tensors() {
  auto s = [](auto& m) { return std::span<double>(m.data(), static_cast<std::size_t>(m.size())); };
  return {s(fc1.w), s(fc1.b), s(fc2.w), s(fc2.b), s(fc3.w), s(fc3.b),
          s(projection.w), s(projection.b), s(classifier.w), s(classifier.b)};
}

std::array<std::span<const double>, EncoderParams::kTensorCount> EncoderParams::tensors() const {
  auto s = [](const auto& m) { return std::span<const double>(m.data(), static_cast<std::size_t>(m.size())); };
  return {s(fc1.w), s(fc1.b), s(fc2.w), s(fc2.b), s(fc3.w), s(fc3.b),
          s(projection.w), s(projection.b), s(classifier.w), s(classifier.b)};
}

std::size_t EncoderParams::parameter_count() const {
  std::size_t n = 0;
  for (auto t : tensors()) n += t.size();
  return n;
}

bool EncoderParams::all_finite() const {
  for (auto t : tensors())
    for (double v : t)
      if (!std::isfinite(v)) return false;
  return true;
}

ForwardPass forward(const EncoderParams& params, const Matrix& x, bool with_projection, bool with_classifier) {
  check_input(params, x.rows());
  ForwardPass fp;
  fp.x = x;
  fp.a1 = affine(params.fc1, x);
  fp.u1 = elu(fp.a1);
  fp.a2 = affine(params.fc2, fp.u1);
  fp.u2 = elu(fp.a2);
  fp.h = affine(params.fc3, fp.u2);
  if (with_projection) {
    fp.p = affine(params.projection, fp.h);
    fp.p_norm = fp.p.colwise().norm().transpose();
    fp.z = fp.p;
    for (Eigen::Index c = 0; c < fp.z.cols(); ++c) fp.z.col(c) /= std::max(fp.p_norm(c), kNormFloor);
  }
  if (with_classifier) fp.logits = affine(params.classifier, fp.h);
  return fp;
}

void backward(const EncoderParams& params, const ForwardPass& fp, const Matrix& dz, const Matrix& dlogits,
              EncoderParams& grad) {
  Matrix dh = Matrix::Zero(fp.h.rows(), fp.h.cols());
  if (dz.size() > 0) {
    // d(p/|p|) = (I - z z^T) / |p|
    Matrix dp = dz;
    for (Eigen::Index c = 0; c < dp.cols(); ++c) {
      const double proj = fp.z.col(c).dot(dz.col(c));
      dp.col(c) = (dz.col(c) - proj * fp.z.col(c)) / std::max(fp.p_norm(c), kNormFloor);
    }
    accumulate(grad.projection, dp, fp.h);
    dh.noalias() += params.projection.w.transpose() * dp;
  }
  if (dlogits.size() > 0) {
    accumulate(grad.classifier, dlogits, fp.h);
    dh.noalias() += params.classifier.w.transpose() * dlogits;
  }
  accumulate(grad.fc3, dh, fp.u2);
  Matrix da2 = (params.fc3.w.transpose() * dh).cwiseProduct(elu_grad(fp.a2));
  accumulate(grad.fc2, da2, fp.u1);
  Matrix da1 = (params.fc2.w.transpose() * da2).cwiseProduct(elu_grad(fp.a1));
  accumulate(grad.fc1, da1, fp.x);
}

Encoded encoder_forward(const EncoderParams& params, const Vector& x) {
  ForwardPass fp = forward(params, x, true, false);
  return Encoded{fp.h.col(0), fp.z.col(0)};
}

Matrix representations(const EncoderParams& params, const Matrix& x) {
  return forward(params, x, false, false).h;
}

Matrix predict_batch(const EncoderParams& params, const Matrix& x) {
  return softmax_columns(forward(params, x, false, true).logits);
}

Vector predict(const EncoderParams& params, const Vector& x) {
  return predict_batch(params, x).col(0);
}

}  // namespace alforge::learner
