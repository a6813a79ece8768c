#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "calib/errors.hpp"
#include "calib/mixsim.hpp"
#include "calib/trainer.hpp"
#include "support.hpp"

using namespace calib;

namespace {

struct Problem {
  LinearModel model;
  HardBatch hard;
  SoftBatch soft;
};

Problem random_problem(std::uint64_t seed, std::size_t k, std::size_t d, std::size_t nh, std::size_t ns) {
  Rng rng = make_stream(seed, "trainer-test");
  Problem p;
  p.model = LinearModel::zeros(k, d);
  for (Eigen::Index i = 0; i < p.model.weights.size(); ++i) p.model.weights.data()[i] = 0.5 * standard_normal(rng);
  for (Eigen::Index i = 0; i < p.model.bias.size(); ++i) p.model.bias[i] = 0.5 * standard_normal(rng);
  p.hard.x.resize(static_cast<Eigen::Index>(nh), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < p.hard.x.size(); ++i) p.hard.x.data()[i] = standard_normal(rng);
  for (std::size_t i = 0; i < nh; ++i) p.hard.labels.push_back(static_cast<int>(uniform_index(rng, k)));
  p.soft.x.resize(static_cast<Eigen::Index>(ns), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < p.soft.x.size(); ++i) p.soft.x.data()[i] = standard_normal(rng);
  p.soft.targets.resize(static_cast<Eigen::Index>(ns), static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < ns; ++i) {
    p.soft.targets.row(static_cast<Eigen::Index>(i)) = calib::testing::random_simplex(k, rng, true).transpose();
  }
  return p;
}

// Three well-separated Gaussian classes, small enough for a unit test.
TrainData small_data(std::uint64_t seed, bool with_soft) {
  const MixWorld w = MixWorld::orthogonal(3, 4, 3.0, 0.8, 1.0, 0);
  BenchmarkConfig c;
  c.sets = 20;
  c.onehot_per_class = 20;
  c.validation_per_class = 20;
  c.seed = seed;
  const Benchmark b = build_benchmark(w, c);
  TrainData data;
  data.onehot = b.onehot;
  data.validation = b.validation;
  if (with_soft) {
    data.soft.x.resize(static_cast<Eigen::Index>(b.mixed.size()), 4);
    data.soft.targets = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(b.mixed.size()), 3);
    for (std::size_t n = 0; n < b.mixed.size(); ++n) {
      const auto r = static_cast<Eigen::Index>(n);
      data.soft.x.row(r) = b.mixed[n].x.transpose();
      data.soft.targets(r, static_cast<Eigen::Index>(b.mixed[n].class_i)) += b.mixed[n].lambda_hat;
      data.soft.targets(r, static_cast<Eigen::Index>(b.mixed[n].class_j)) += 1.0 - b.mixed[n].lambda_hat;
    }
  }
  return data;
}

TrainConfig quick_config(LossKind loss) {
  TrainConfig c;
  c.epochs = 6;
  c.batch_size = 16;
  c.soft_loss = loss;
  c.lr_schedule = {{3, 0.1}};
  c.seed = 4;
  return c;
}

double beta_hat(const Eigen::MatrixXd& p, const Eigen::MatrixXd& q) {
  return (p.row(0) - q.row(0)).squaredNorm() - (p.row(1) - q.row(1)).squaredNorm();
}

}  // namespace

TEST(LinearModel, ZeroInitIsUniform) {
  const LinearModel m = LinearModel::zeros(4, 3);
  const Eigen::MatrixXd p = m.probabilities(Eigen::MatrixXd::Ones(2, 3));
  EXPECT_NEAR(p(1, 2), 0.25, 1e-15);
  EXPECT_THROW(LinearModel::zeros(1, 3), InvalidArgument);
  EXPECT_THROW(m.logits(Eigen::MatrixXd::Ones(2, 5)), InvalidArgument);
}

TEST(LossAndGrad, MatchesFiniteDifference) {
  for (LossKind loss : {LossKind::ce(), LossKind::focal(1.0), LossKind::focal(3.0), LossKind::l2()}) {
    Problem p = random_problem(61, 4, 3, 5, 7);
    const LossAndGrad lg = loss_and_grad(p.model, p.hard, p.soft, loss);
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < p.model.weights.size(); ++i) {
      LinearModel a = p.model, b = p.model;
      a.weights.data()[i] += h;
      b.weights.data()[i] -= h;
      const double fd = (loss_and_grad(a, p.hard, p.soft, loss).loss - loss_and_grad(b, p.hard, p.soft, loss).loss) / (2 * h);
      EXPECT_LE(std::abs(lg.grad.weights.data()[i] - fd), 1e-5 * std::max(1.0, std::abs(fd))) << loss.name();
    }
    for (Eigen::Index i = 0; i < p.model.bias.size(); ++i) {
      LinearModel a = p.model, b = p.model;
      a.bias[i] += h;
      b.bias[i] -= h;
      const double fd = (loss_and_grad(a, p.hard, p.soft, loss).loss - loss_and_grad(b, p.hard, p.soft, loss).loss) / (2 * h);
      EXPECT_LE(std::abs(lg.grad.bias[i] - fd), 1e-5 * std::max(1.0, std::abs(fd))) << loss.name();
    }
  }
}

TEST(LossAndGrad, EmptySoftBatchIsPlainCrossEntropy) {
  Problem p = random_problem(62, 3, 2, 6, 0);
  const LossAndGrad a = loss_and_grad(p.model, p.hard, p.soft, LossKind::l2());
  const LossAndGrad b = loss_and_grad(p.model, p.hard, p.soft, LossKind::focal(2.0));
  EXPECT_EQ(a.loss, b.loss);
  EXPECT_EQ(a.grad.weights, b.grad.weights);
  // The hard term equals soft CE against one-hot rows.
  SoftBatch as_soft{p.hard.x, Eigen::MatrixXd::Zero(6, 3)};
  for (std::size_t i = 0; i < 6; ++i) as_soft.targets(static_cast<Eigen::Index>(i), p.hard.labels[i]) = 1.0;
  const LossAndGrad c = loss_and_grad(p.model, HardBatch{}, as_soft, LossKind::ce());
  EXPECT_NEAR(a.loss, c.loss, 1e-14);
  EXPECT_LE((a.grad.weights - c.grad.weights).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(LossAndGrad, StationaryAtTheTarget) {
  Problem p = random_problem(63, 3, 2, 0, 4);
  p.soft.targets = p.model.probabilities(p.soft.x);
  for (LossKind loss : {LossKind::ce(), LossKind::l2()}) {
    const LossAndGrad lg = loss_and_grad(p.model, HardBatch{}, p.soft, loss);
    EXPECT_LE(lg.grad.weights.cwiseAbs().maxCoeff(), 1e-14) << loss.name();
    EXPECT_LE(lg.grad.bias.cwiseAbs().maxCoeff(), 1e-14) << loss.name();
  }
}

TEST(LossAndGrad, RejectsShapeMismatch) {
  Problem p = random_problem(64, 3, 2, 2, 2);
  p.soft.targets.conservativeResize(2, 4);
  EXPECT_THROW(loss_and_grad(p.model, p.hard, p.soft, LossKind::l2()), InvalidArgument);
  p.hard.labels.push_back(0);
  EXPECT_THROW(loss_and_grad(p.model, p.hard, SoftBatch{}, LossKind::l2()), InvalidArgument);
}

// Full-batch gradient descent with a small step never increases the loss.
TEST(LossAndGrad, SmallStepsDescend) {
  for (LossKind loss : {LossKind::ce(), LossKind::focal(1.0), LossKind::l2()}) {
    Problem p = random_problem(65, 4, 3, 20, 30);
    double prev = INFINITY;
    for (int it = 0; it < 50; ++it) {
      const LossAndGrad lg = loss_and_grad(p.model, p.hard, p.soft, loss);
      EXPECT_LE(lg.loss, prev + 1e-15) << loss.name() << " it=" << it;
      prev = lg.loss;
      p.model.weights -= 1e-3 * lg.grad.weights;
      p.model.bias -= 1e-3 * lg.grad.bias;
    }
  }
}

// Two nearly identical inputs with a sharp and a soft target under strong
// weight decay, so the model can barely separate them. In logit space the
// bias condition of CE forces p1 + p2 = q1 + q2 on two classes, which makes
// the CE fit exactly balanced; Focal pulls both predictions toward 1/2 and
// leaves the sharper target with the larger error.
TEST(LossAndGrad, PairSignatureInLogitSpace) {
  Eigen::MatrixXd x(2, 2);
  x << 1.0, 0.05, 1.0, -0.05;
  Eigen::MatrixXd q(2, 2);
  q << 0.9, 0.1, 0.6, 0.4;
  auto fit = [&](LossKind loss) {
    LinearModel m = LinearModel::zeros(2, 2);
    const SoftBatch soft{x, q};
    for (int it = 0; it < 20000; ++it) {
      LossAndGrad lg = loss_and_grad(m, HardBatch{}, soft, loss);
      lg.grad.weights += 5e-2 * m.weights;
      m.weights -= 0.5 * lg.grad.weights;
      m.bias -= 0.5 * lg.grad.bias;
    }
    const Eigen::MatrixXd p = m.probabilities(x);
    EXPECT_LE((p.row(0) - p.row(1)).squaredNorm(), 1e-3) << loss.name();
    return beta_hat(p, q);
  };
  const double ce = fit(LossKind::ce()), fl = fit(LossKind::focal(1.0)), l2 = fit(LossKind::l2());
  EXPECT_LE(std::abs(ce), 1e-12);
  EXPECT_GT(fl, 1e-2);
  EXPECT_GT(std::abs(l2), 0.0);
  EXPECT_LT(std::abs(l2), fl);
}

TEST(TrainConfig, ScheduleAndValidation) {
  TrainConfig c;
  EXPECT_EQ(c.rate_at(0), 0.1);
  EXPECT_NEAR(c.rate_at(15), 0.01, 1e-15);
  EXPECT_NEAR(c.rate_at(29), 0.001, 1e-15);
  c.momentum = 1.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = TrainConfig{};
  c.epochs = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(StratifiedSplit, KeepsEveryClass) {
  const TrainData d = small_data(1, false);
  const auto [train_set, val_set] = stratified_split(d.onehot, 0.25, 9);
  EXPECT_EQ(train_set.size() + val_set.size(), d.onehot.size());
  EXPECT_EQ(val_set.size(), 15u);
  for (int c = 0; c < 3; ++c) EXPECT_EQ(std::count(val_set.labels.begin(), val_set.labels.end(), c), 5);
  const auto again = stratified_split(d.onehot, 0.25, 9);
  EXPECT_EQ(again.second.vectors, val_set.vectors);
}

TEST(Train, DeterministicReports) {
  const TrainData d = small_data(2, true);
  const auto [ma, ra] = train(d, quick_config(LossKind::l2()));
  const auto [mb, rb] = train(d, quick_config(LossKind::l2()));
  EXPECT_EQ(ma.weights, mb.weights);
  ASSERT_EQ(ra.epochs.size(), 6u);
  for (std::size_t e = 0; e < 6; ++e) EXPECT_EQ(ra.epochs[e].train_loss, rb.epochs[e].train_loss);
  EXPECT_EQ(ra.temperature.temperature, rb.temperature.temperature);
  EXPECT_EQ(ra.soft_size, d.soft.size());
  EXPECT_EQ(ra.validation_size, 60u);
  EXPECT_GT(ra.final_metrics.accuracy, 0.8);
}

TEST(Train, ZeroRatioIgnoresTheSoftPool) {
  TrainConfig c = quick_config(LossKind::ce());
  c.soft_ratio = 0.0;
  const auto a = train(small_data(3, true), c);
  const auto b = train(small_data(3, false), c);
  EXPECT_EQ(a.first.weights, b.first.weights);
}

TEST(Train, SplitsWithoutValidationPool) {
  TrainData d = small_data(4, false);
  d.validation = EmbeddingSet{};
  const auto [m, r] = train(d, quick_config(LossKind::ce()));
  EXPECT_EQ(r.validation_size + r.train_size, 60u);
  EXPECT_TRUE(m.finite());
}

TEST(Train, DivergenceIsReported) {
  TrainData d = small_data(5, true);
  d.onehot.vectors *= 1e150;
  d.validation.vectors *= 1e150;
  d.soft.x *= 1e150;
  TrainConfig c = quick_config(LossKind::focal(1.0));
  c.learning_rate = 1e200;
  EXPECT_THROW(train(d, c), TrainingFailure);
}

TEST(SoftBatchFrom, SkipsFailedItems) {
  PrototypeSet ps;
  ps.prototypes.resize(3, 2);
  ps.prototypes << 1, 0, 0, 1, 1, 0;
  ps.counts = {1, 1, 1};
  const std::vector<MixedSample> in{{Eigen::Vector2d(0.5, 0.5), 0, 1}, {Eigen::Vector2d(1, 0), 0, 2}};
  const auto items = reannotate_batch(in, ps, 4.0);
  const SoftBatch sb = soft_batch_from(items, in, 3);
  ASSERT_EQ(sb.size(), 1u);
  EXPECT_EQ(sb.targets.row(0), Eigen::RowVector3d(0.5, 0.5, 0.0));
}
