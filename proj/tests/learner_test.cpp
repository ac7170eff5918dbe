#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "alforge/learner.hpp"
#include "reference_losses.hpp"
#include "support.hpp"

#include <cmath>
#include <sstream>

using namespace alforge;
using namespace alforge::learner;
using testsupport::labels_with_pair;
using testsupport::ref_nt_xent;
using testsupport::ref_supcon;
using testsupport::relative_error;

namespace {

Matrix circle(std::initializer_list<double> angles) {
  Matrix z(2, static_cast<Eigen::Index>(angles.size()));
  Eigen::Index c = 0;
  for (double a : angles) {
    z(0, c) = std::cos(a);
    z(1, c++) = std::sin(a);
  }
  return z;
}

}  // namespace

TEST_CASE("loss values match direct evaluation") {
  const LossConfig half{0.5};
  CHECK(nt_xent_loss(circle({0.0, 0.3, 1.5, 2.0}), half) == doctest::Approx(0.29830927726566314).epsilon(1e-12));
  const std::vector<int> y{1, 1, 2, 2, 3};
  CHECK(supcon_loss(circle({0.0, 0.4, 2.0, 2.5, 3.0}), y, LossConfig{0.1}) ==
        doctest::Approx(0.18176422727465291).epsilon(1e-12));
  Vector logits(3);
  logits << 1.0, 0.0, 0.0;
  CHECK(cross_entropy_loss(logits, 1, 0.1) == doctest::Approx(0.61811138059871762).epsilon(1e-12));
  CHECK(cross_entropy_loss(logits, 1, 0.0) == doctest::Approx(0.55144471393205086).epsilon(1e-12));
}

TEST_CASE("contrastive losses are non-negative and reject bad input") {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const Matrix z = testsupport::random_unit_columns(4, 8, rng);
    CHECK(nt_xent_loss(z, {}) >= 0.0);
    CHECK(supcon_loss(z, labels_with_pair(rng, 8, 3), {}) >= 0.0);
  }
  Matrix bad = circle({0.0, 1.0});
  bad(0, 0) = 2.0;
  CHECK_THROWS_AS(nt_xent_loss(bad, {}), Error);
  try {
    nt_xent_loss(bad, {});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonUnitInput);
  }
  const std::vector<int> distinct{1, 2, 3};
  try {
    supcon_loss(circle({0.0, 1.0, 2.0}), distinct, {});
    FAIL("expected NoPositivePairs");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoPositivePairs);
  }
}

TEST_CASE("SupCon has a single positive per anchor when labels pair up like views") {
  Rng rng(8);
  const Matrix z = testsupport::random_unit_columns(5, 6, rng);
  const std::vector<int> pairs{0, 0, 1, 1, 2, 2};
  CHECK(supcon_loss(z, pairs, {}) == doctest::Approx(nt_xent_loss(z, {})).epsilon(1e-12));
}

TEST_CASE("NT-Xent gradient matches finite differences of the raw formula") {
  Rng rng(101);
  for (int t = 0; t < 60; ++t) {
    const int n = 2 * (1 + static_cast<int>(rng.index(4)));
    const double tau = rng.uniform(0.2, 1.0);
    const Matrix z = testsupport::random_unit_columns(2 + static_cast<Eigen::Index>(rng.index(3)), n, rng);
    const Matrix analytic = nt_xent_loss_grad(z, {tau}).grad;
    const Matrix numeric = testsupport::numeric_gradient([&](const Matrix& m) { return ref_nt_xent(m, tau); }, z);
    REQUIRE(relative_error(analytic, numeric) < 1e-4);
  }
}

TEST_CASE("SupCon gradient matches finite differences of the raw formula") {
  Rng rng(202);
  for (int t = 0; t < 60; ++t) {
    const int n = 3 + static_cast<int>(rng.index(6));
    const double tau = rng.uniform(0.2, 1.0);
    const Matrix z = testsupport::random_unit_columns(3, n, rng);
    const auto y = labels_with_pair(rng, n, 3);
    const Matrix analytic = supcon_loss_grad(z, y, {tau}).grad;
    const Matrix numeric = testsupport::numeric_gradient([&](const Matrix& m) { return ref_supcon(m, y, tau); }, z);
    REQUIRE(relative_error(analytic, numeric) < 1e-4);
  }
}

TEST_CASE("cross-entropy gradient matches finite differences") {
  Rng rng(303);
  for (int t = 0; t < 60; ++t) {
    const int classes = 2 + static_cast<int>(rng.index(5));
    const int n = 1 + static_cast<int>(rng.index(5));
    const double smoothing = rng.uniform(0.0, 0.3);
    const Matrix logits = testsupport::random_matrix(classes, n, rng, 2.0);
    std::vector<int> y(static_cast<std::size_t>(n));
    for (int& v : y) v = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(classes)));
    const Matrix analytic = cross_entropy_loss_grad(logits, y, smoothing).grad;
    const Matrix numeric = testsupport::numeric_gradient(
        [&](const Matrix& m) { return cross_entropy_loss_grad(m, y, smoothing).loss; }, logits);
    REQUIRE(relative_error(analytic, numeric) < 1e-4);
  }
}

TEST_CASE("total loss parameter gradient matches finite differences") {
  Rng rng(404);
  for (int t = 0; t < 50; ++t) {
    const Architecture arch = testsupport::tiny_architecture(3, 4);
    const EncoderParams params = testsupport::random_params(arch, 1000 + static_cast<std::uint64_t>(t));
    ContrastiveBatch batch;
    batch.views = testsupport::random_matrix(3, 2 * (1 + static_cast<Eigen::Index>(rng.index(3))), rng);
    if (t % 5 != 0) {
      const int m = 3 + static_cast<int>(rng.index(4));
      batch.labeled = testsupport::random_matrix(3, m, rng);
      batch.labels = labels_with_pair(rng, m, 4);
    }
    const LossConfig cfg{rng.uniform(0.3, 1.0)};
    EncoderParams grad;
    total_loss(params, batch, cfg, &grad);
    const Vector numeric = testsupport::numeric_param_gradient(
        [&](const EncoderParams& p) { return total_loss(p, batch, cfg); }, params);
    REQUIRE(relative_error(testsupport::flatten(grad), numeric) < 1e-4);
  }
}

TEST_CASE("classification loss parameter gradient matches finite differences") {
  Rng rng(505);
  for (int t = 0; t < 50; ++t) {
    const Architecture arch = testsupport::tiny_architecture(4, 3);
    const EncoderParams params = testsupport::random_params(arch, 2000 + static_cast<std::uint64_t>(t));
    const int n = 1 + static_cast<int>(rng.index(6));
    const Matrix x = testsupport::random_matrix(4, n, rng);
    std::vector<int> y(static_cast<std::size_t>(n));
    for (int& v : y) v = 1 + static_cast<int>(rng.index(3));
    EncoderParams grad;
    classification_loss(params, x, y, 0.1, &grad);
    const Vector numeric = testsupport::numeric_param_gradient(
        [&](const EncoderParams& p) { return classification_loss(p, x, y, 0.1); }, params);
    REQUIRE(relative_error(testsupport::flatten(grad), numeric) < 1e-4);
  }
}

TEST_CASE("single-sample and batched forward passes agree") {
  Rng rng(9);
  const EncoderParams p = testsupport::random_params(testsupport::tiny_architecture(3, 4), 77);
  const Matrix x = testsupport::random_matrix(3, 5, rng);
  const Matrix probs = predict_batch(p, x);
  const ForwardPass fp = forward(p, x);
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const Encoded e = encoder_forward(p, x.col(c));
    CHECK((e.h - fp.h.col(c)).norm() < 1e-12);
    CHECK((e.z - fp.z.col(c)).norm() < 1e-12);
    CHECK(e.z.norm() == doctest::Approx(1.0));
    CHECK((predict(p, x.col(c)) - probs.col(c)).norm() < 1e-12);
    CHECK(probs.col(c).sum() == doctest::Approx(1.0));
  }
}

TEST_CASE("checkpoint round trip is exact and rejects garbage") {
  const EncoderParams p = testsupport::random_params(default_architecture(7, 5), 12);
  std::stringstream s;
  save_checkpoint(s, p);
  const EncoderParams back = load_checkpoint(s);
  CHECK(back.arch == p.arch);
  CHECK(testsupport::flatten(back) == testsupport::flatten(p));
  std::stringstream junk("not a checkpoint at all");
  CHECK_THROWS_AS(load_checkpoint(junk), Error);
}

TEST_CASE("undersampling keeps every iD example and the lowest-id non-iD ones") {
  std::vector<LabeledExample> labeled;
  for (SampleId id = 0; id < 12; ++id) labeled.push_back({id, 1 + static_cast<int>(id % 3)});
  for (SampleId id : {40, 20, 30, 10, 50, 60}) labeled.push_back({id + 100, 4});
  const auto kept = undersample_non_id(labeled, 3);  // 12 iD over 3 classes -> 4 non-iD
  std::vector<SampleId> non_id;
  for (const auto& e : kept)
    if (e.label == 4) non_id.push_back(e.id);
  std::sort(non_id.begin(), non_id.end());
  CHECK(non_id == std::vector<SampleId>{110, 120, 130, 140});
  CHECK(kept.size() == 16);
}

TEST_CASE("augmentation with zero noise and zero masking is the identity") {
  Rng rng(1);
  Vector x(6);
  x << 1, -2, 3, 0.5, 7, -1;
  CHECK(augment(x, 0.0, 0.0, rng) == x);
  const Vector masked = augment(x, 0.0, 1.0, rng);
  CHECK(masked.isZero());
}

TEST_CASE("training configs are validated") {
  TrainConfig c;
  c.epochs = -1;
  CHECK_THROWS_AS(c.validate(), Error);
  c = TrainConfig{};
  c.learning_rate = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = TrainConfig{};
  c.label_smoothing = 1.0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("classifier training separates two well-separated blobs") {
  Rng rng(21);
  const int n = 200;
  Matrix x(2, n);
  std::vector<LabeledExample> ex;
  for (int i = 0; i < n; ++i) {
    const int y = 1 + i % 2;
    x(0, i) = (y == 1 ? -4.0 : 4.0) + rng.normal();
    x(1, i) = rng.normal();
    ex.push_back({i, y});
  }
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.batch_size_labeled = 32;
  cfg.learning_rate = 0.02;
  cfg.seed = 5;
  const TrainResult r = train_classifier(EncoderParams::random(default_architecture(2, 2), 5), x, ex, cfg);
  CHECK(r.loss_history.back() < r.loss_history.front());
  const Matrix probs = predict_batch(r.params, x);
  int correct = 0;
  for (int i = 0; i < n; ++i) {
    Eigen::Index arg = 0;
    probs.col(i).maxCoeff(&arg);
    correct += static_cast<int>(arg) + 1 == ex[static_cast<std::size_t>(i)].label;
  }
  CHECK(correct >= 198);

  const TrainResult again = train_classifier(EncoderParams::random(default_architecture(2, 2), 5), x, ex, cfg);
  CHECK(testsupport::flatten(again.params) == testsupport::flatten(r.params));
}

TEST_CASE("representation training lowers the contrastive loss and is deterministic") {
  Rng rng(31);
  const int n = 120;
  Matrix x(4, n);
  for (int i = 0; i < n; ++i)
    for (int r = 0; r < 4; ++r) x(r, i) = (i % 3) * 3.0 * (r == i % 3) + rng.normal();
  PoolState pool = PoolState::all_unlabeled(n);
  pool = pool_update(pool, std::vector<LabeledExample>{{0, 1}, {3, 1}, {1, 2}, {4, 2}});
  TrainConfig cfg;
  cfg.epochs = 8;
  cfg.batch_size_unlabeled = 32;
  cfg.batch_size_labeled = 4;
  cfg.seed = 3;
  const EncoderParams init = EncoderParams::random(default_architecture(4, 3), 3);
  const TrainResult a = train_representation(pool, x, cfg, init);
  const TrainResult b = train_representation(pool, x, cfg, init);
  CHECK(a.loss_history.back() < a.loss_history.front());
  CHECK(testsupport::flatten(a.params) == testsupport::flatten(b.params));
  // The classifier head is not part of representation training.
  CHECK(a.params.classifier.w == init.classifier.w);
}
