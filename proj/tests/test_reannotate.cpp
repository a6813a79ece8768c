#include <gtest/gtest.h>

#include <cmath>

#include "calib/errors.hpp"
#include "calib/reannotate.hpp"
#include "calib/rng.hpp"

using namespace calib;

namespace {

Eigen::VectorXd random_vector(Eigen::Index d, Rng& rng, double scale = 1.0) {
  Eigen::VectorXd v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = scale * standard_normal(rng);
  return v;
}

EmbeddingSet two_class_pool() {
  EmbeddingSet es;
  es.vectors.resize(4, 2);
  es.vectors << 1, 0, 3, 0, 0, 2, 0, 4;
  es.labels = {0, 0, 1, 1};
  return es;
}

}  // namespace

TEST(Prototypes, MeanAndSum) {
  const PrototypeSet mean = class_prototypes(two_class_pool());
  EXPECT_EQ(mean.row(0), Eigen::Vector2d(2, 0));
  EXPECT_EQ(mean.row(1), Eigen::Vector2d(0, 3));
  EXPECT_EQ(mean.counts, (std::vector<std::size_t>{2, 2}));
  const PrototypeSet sum = class_prototypes(two_class_pool(), PrototypeMode::sum);
  EXPECT_EQ(sum.row(0), Eigen::Vector2d(4, 0));
}

TEST(Prototypes, MissingClassIsNamed) {
  EmbeddingSet es = two_class_pool();
  try {
    class_prototypes(es, PrototypeMode::mean, 3);
    FAIL() << "expected a missing class error";
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("class 2"), std::string::npos);
  }
}

TEST(Prototypes, MeanIsCountInvariant) {
  EmbeddingSet es = two_class_pool();
  EmbeddingSet doubled = es;
  doubled.vectors.resize(6, 2);
  doubled.vectors << es.vectors, es.vectors.topRows(2);
  doubled.labels.insert(doubled.labels.end(), {0, 0});
  EXPECT_EQ(class_prototypes(doubled).prototypes, class_prototypes(es).prototypes);
}

TEST(LambdaE, KnownValues) {
  const Eigen::Vector2d pi(1, 0), pj(0, 1);
  EXPECT_DOUBLE_EQ(lambda_e(pi, pi, pj), 1.0);
  EXPECT_DOUBLE_EQ(lambda_e(pj, pi, pj), 0.0);
  EXPECT_DOUBLE_EQ(lambda_e(0.5 * (pi + pj), pi, pj), 0.5);
  // Extrapolation is allowed.
  EXPECT_DOUBLE_EQ(lambda_e(Eigen::Vector2d(2, -1), pi, pj), 2.0);
}

TEST(LambdaE, DegenerateAndMismatchedInput) {
  const Eigen::Vector2d p(1, 1);
  EXPECT_THROW(lambda_e(p, p, p + Eigen::Vector2d(1e-7, 0)), DegeneratePrototypes);
  EXPECT_THROW(lambda_e(Eigen::Vector3d(1, 0, 0), p, Eigen::Vector2d(0, 0)), InvalidArgument);
}

TEST(LambdaE, ResidualIsOrthogonal) {
  Rng rng = make_stream(31, "residual");
  for (int t = 0; t < 200; ++t) {
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(uniform_index(rng, 30));
    const Eigen::VectorXd e = random_vector(d, rng, 3.0), pi = random_vector(d, rng), pj = random_vector(d, rng);
    const Eigen::VectorXd r = projection_residual(e, pi, pj);
    EXPECT_LE(std::abs(r.dot(pi - pj)), 1e-9);
  }
}

TEST(LambdaE, InvariantToOrthogonalShift) {
  Rng rng = make_stream(32, "orth-shift");
  for (int t = 0; t < 100; ++t) {
    const Eigen::VectorXd e = random_vector(8, rng), pi = random_vector(8, rng), pj = random_vector(8, rng);
    const Eigen::VectorXd axis = (pi - pj).normalized();
    Eigen::VectorXd v = random_vector(8, rng, 5.0);
    v -= v.dot(axis) * axis;
    EXPECT_NEAR(lambda_e(e + v, pi, pj), lambda_e(e, pi, pj), 1e-10);
  }
}

TEST(Debias, KnownValues) {
  for (double s : {0.1, 1.0, 4.0, 50.0}) EXPECT_EQ(debias_lambda(0.5, s), 0.5);
  EXPECT_NEAR(debias_lambda(1.0, 4.0), 1.0 / (1.0 + std::exp(-2.0)), 1e-15);
  EXPECT_NEAR(debias_lambda(1.0, 4.0), 0.880797, 1e-6);
  EXPECT_NEAR(debias_lambda(0.25, 2.3), 1.0 / (1.0 + std::exp(0.575)), 1e-15);
  EXPECT_THROW(debias_lambda(0.3, 0.0), InvalidArgument);
  EXPECT_THROW(debias_lambda(0.3, -1.0), InvalidArgument);
}

TEST(Debias, SymmetricAndMonotone) {
  Rng rng = make_stream(33, "debias");
  for (int t = 0; t < 200; ++t) {
    const double le = uniform(rng, -1.0, 2.0), s = uniform(rng, 0.1, 10.0);
    EXPECT_NEAR(debias_lambda(le, s) + debias_lambda(1.0 - le, s), 1.0, 1e-12);
    EXPECT_LT(debias_lambda(le, s), debias_lambda(le + 1e-3, s));
    const double l = debias_lambda(le, s);
    EXPECT_GT(l, 0.0);
    EXPECT_LT(l, 1.0);
    EXPECT_EQ(l > 0.5, le > 0.5);
  }
}

// With equal prototype norms the two-class softmax of similarities
// e.P / tau collapses to sigmoid(s (lambda_e - 1/2)) with s = |P_i - P_j|^2 / tau.
TEST(Debias, SimilaritySoftmaxOracle) {
  Rng rng = make_stream(34, "similarity-oracle");
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index d = 6;
    Eigen::VectorXd pi = random_vector(d, rng), pj = random_vector(d, rng);
    const double norm = uniform(rng, 0.5, 3.0);
    pi *= norm / pi.norm();
    pj *= norm / pj.norm();
    const double tau = uniform(rng, 0.2, 5.0);
    const double s = (pi - pj).squaredNorm() / tau;
    const Eigen::VectorXd e = random_vector(d, rng);
    const double a = e.dot(pi) / tau, b = e.dot(pj) / tau;
    const double softmax_i = 1.0 / (1.0 + std::exp(b - a));
    EXPECT_NEAR(debias_lambda(lambda_e(e, pi, pj), s), softmax_i, 1e-12);
    // Unequal norms shift the logit by half the difference of squared norms.
    const Eigen::VectorXd pk = 1.5 * pi;
    const double c = e.dot(pk) / tau;
    const double s2 = (pk - pj).squaredNorm() / tau;
    const double shift = 0.5 * (pk.squaredNorm() - pj.squaredNorm()) / tau;
    EXPECT_NEAR(debias_lambda(lambda_e(e, pk, pj), s2), 1.0 / (1.0 + std::exp(b - c + shift)), 1e-12);
  }
}

TEST(ReannotateBatch, CompositionAndOrder) {
  PrototypeSet ps;
  ps.prototypes.resize(3, 2);
  ps.prototypes << 1, 0, 0, 1, 1, 1e-7;
  ps.counts = {1, 1, 1};
  const std::vector<MixedSample> batch{
      {Eigen::Vector2d(1, 0), 0, 1},
      {Eigen::Vector2d(0.5, 0.5), 0, 2},  // coincident prototypes
      {Eigen::Vector2d(0.2, 0.8), 1, 0},
  };
  const auto out = reannotate_batch(batch, ps, 4.0);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_NEAR(out[0].value->lambda, 0.880797, 1e-6);
  EXPECT_EQ(out[0].label->expand()[0], out[0].value->lambda);
  EXPECT_FALSE(out[1].ok());
  EXPECT_EQ(out[1].error.rfind("degenerate-prototypes:", 0), 0u);
  EXPECT_TRUE(out[2].ok());
  EXPECT_EQ(out[2].index, 2u);

  // Each item depends only on its own sample.
  const std::vector<MixedSample> reversed{batch[2], batch[1], batch[0]};
  const auto back = reannotate_batch(reversed, ps, 4.0);
  EXPECT_EQ(back[0].value->lambda, out[2].value->lambda);
  EXPECT_EQ(back[2].value->lambda, out[0].value->lambda);
  EXPECT_TRUE(reannotate_batch({}, ps, 4.0).empty());
}

TEST(ReannotateBatch, InvalidPairsAreRecordedPerItem) {
  const PrototypeSet ps = class_prototypes(two_class_pool());
  const std::vector<MixedSample> batch{{Eigen::Vector2d(1, 1), 0, 0}, {Eigen::Vector2d(1, 1), 0, 5}};
  const auto out = reannotate_batch(batch, ps, 2.0);
  for (const auto& it : out) EXPECT_EQ(it.error.rfind("invalid-argument:", 0), 0u);
  EXPECT_THROW(reannotate_batch(batch, ps, 0.0), InvalidArgument);
}

TEST(Normalize, RowsAndVectors) {
  Eigen::MatrixXd m(2, 2);
  m << 3, 4, 0, 2;
  normalize_rows(m);
  EXPECT_DOUBLE_EQ(m.row(0).norm(), 1.0);
  EXPECT_EQ(m(1, 1), 1.0);
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(1, 2);
  EXPECT_THROW(normalize_rows(z), InvalidArgument);
  EXPECT_THROW(normalized(Eigen::VectorXd::Zero(3)), InvalidArgument);
}

TEST(PrototypeMode, Parse) {
  EXPECT_EQ(parse_prototype_mode("sum"), PrototypeMode::sum);
  EXPECT_EQ(to_string(PrototypeMode::mean), "mean");
  EXPECT_THROW(parse_prototype_mode("median"), InvalidArgument);
}
