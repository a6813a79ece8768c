#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "calib/errors.hpp"
#include "calib/metrics.hpp"
#include "support.hpp"

using namespace calib;
using calib::testing::from_confidences;
using calib::testing::Oracle;
using calib::testing::worked;

namespace {

double brute_auroc(const std::vector<double>& in, const std::vector<double>& ood) {
  double wins = 0.0;
  for (double o : ood) {
    for (double i : in) wins += o > i ? 1.0 : (o == i ? 0.5 : 0.0);
  }
  return wins / static_cast<double>(in.size() * ood.size());
}

}  // namespace

TEST(Predict, ConfidenceAndTieBreak) {
  const std::vector<double> a{0.1, 0.7, 0.2}, b{0.5, 0.5}, c{1.0, 0.0, 0.0};
  EXPECT_EQ(predict(std::span<const double>(a)).label, 1u);
  EXPECT_EQ(predict(std::span<const double>(a)).confidence, 0.7);
  EXPECT_EQ(predict(std::span<const double>(b)).label, 0u);
  EXPECT_EQ(predict(std::span<const double>(c)).confidence, 1.0);
}

TEST(Ece, WorkedExample) {
  const PredictionSet ps = worked();
  EXPECT_NEAR(ece(ps, 2), 0.15, 1e-12);
  EXPECT_NEAR(aece(ps, 2), 0.2, 1e-12);
  EXPECT_NEAR(oe(ps, 2), 0.15, 1e-12);
  EXPECT_EQ(ue(ps, 2), 0.0);
}

TEST(Ece, SmallCases) {
  EXPECT_EQ(ece(from_confidences({1.0, 1.0, 1.0}, {1, 1, 1}), 10), 0.0);
  EXPECT_NEAR(ece(from_confidences({0.8}, {0}), 1), 0.8, 1e-15);
  EXPECT_THROW(ece(PredictionSet(Eigen::MatrixXd(0, 2), {}), 15), InvalidArgument);
}

TEST(Aece, SmallCases) {
  EXPECT_NEAR(aece(from_confidences({0.7, 0.7, 0.7, 0.7}, {1, 1, 1, 1}), 2), 0.3, 1e-12);
  EXPECT_EQ(aece(from_confidences(std::vector<double>(8, 1.0), std::vector<int>(8, 1)), 4), 0.0);
  EXPECT_THROW(aece(from_confidences({0.7, 0.8}, {1, 1}), 3), InvalidArgument);
}

TEST(OverUnder, SmallCases) {
  const PredictionSet half = from_confidences({0.5, 0.5, 0.5}, {1, 1, 1}, 2);
  EXPECT_EQ(oe(half, 2), 0.0);
  EXPECT_NEAR(ue(half, 2), 0.5, 1e-15);
}

TEST(ReliabilityDiagram, WorkedExampleBins) {
  const auto bins = reliability_diagram(worked(), 2);
  ASSERT_EQ(bins.size(), 2u);
  EXPECT_EQ(bins[0].count, 1u);
  EXPECT_EQ(bins[0].accuracy, 0.0);
  EXPECT_NEAR(bins[0].mean_confidence, 0.3, 1e-15);
  EXPECT_EQ(bins[1].count, 3u);
  EXPECT_NEAR(bins[1].accuracy, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(bins[1].mean_confidence, 2.3 / 3.0, 1e-15);
}

TEST(ReliabilityDiagram, EmptyAndSingleBin) {
  const PredictionSet ps = from_confidences({0.6, 0.9, 0.7}, {1, 0, 1});
  EXPECT_EQ(reliability_diagram(ps, 2)[0].count, 0u);
  const auto one = reliability_diagram(ps, 1);
  EXPECT_NEAR(one[0].accuracy, accuracy(ps), 1e-15);
  EXPECT_NEAR(one[0].mean_confidence, (0.6 + 0.9 + 0.7) / 3.0, 1e-15);
}

TEST(ReliabilityDiagram, ConfidenceWithinBinEdges) {
  Rng rng = make_stream(11, "diagram-edges");
  const PredictionSet ps = calib::testing::random_predictions(300, 3, rng);
  for (const BinStats& b : reliability_diagram(ps, 15)) {
    if (b.count == 0) continue;
    EXPECT_LE(b.lower, b.mean_confidence + 1e-15);
    EXPECT_LE(b.mean_confidence, b.upper + 1e-15);
  }
}

TEST(ReliabilityDiagram, EdgeConfidencesLandInUpperBin) {
  // 0.5 sits on the boundary of two bins and belongs to the upper one.
  const auto bins = reliability_diagram(from_confidences({0.5, 1.0}, {1, 1}, 2), 2);
  EXPECT_EQ(bins[0].count, 0u);
  EXPECT_EQ(bins[1].count, 2u);
  for (int m = 1; m <= 40; ++m) {
    for (int b = 0; b < m; ++b) {
      const double edge = static_cast<double>(b) / m;
      EXPECT_EQ(equal_width_bin(edge, m), static_cast<std::size_t>(b)) << "m=" << m << " b=" << b;
    }
    EXPECT_EQ(equal_width_bin(1.0, m), static_cast<std::size_t>(m - 1));
  }
}

TEST(Ece, MatchesBruteForceOracle) {
  Rng rng = make_stream(12, "ece-oracle");
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 8);
    const int m = 1 + static_cast<int>(uniform_index(rng, 4));
    // Mix random rows with confidences on bin edges.
    std::vector<double> conf;
    std::vector<int> right;
    for (std::size_t i = 0; i < n; ++i) {
      conf.push_back(uniform(rng) < 0.4 ? std::max(0.25, static_cast<double>(1 + uniform_index(rng, 4)) / 4.0)
                                        : uniform(rng, 0.25, 1.0));
      right.push_back(uniform(rng) < 0.6 ? 1 : 0);
    }
    const PredictionSet ps = from_confidences(conf, right);
    const Oracle o(ps);
    const auto ew = o.equal_width(m);
    EXPECT_NEAR(ece(ps, m), o.over_groups(ew, [](double d) { return std::abs(d); }), 1e-12);
    EXPECT_NEAR(oe(ps, m), o.over_groups(ew, [](double d) { return std::max(-d, 0.0); }), 1e-12);
    EXPECT_NEAR(ue(ps, m), o.over_groups(ew, [](double d) { return std::max(d, 0.0); }), 1e-12);
    EXPECT_NEAR(oe(ps, m) + ue(ps, m), ece(ps, m), 1e-12);
    if (n >= static_cast<std::size_t>(m)) {
      EXPECT_NEAR(aece(ps, m), o.over_groups(o.equal_mass(m), [](double d) { return std::abs(d); }), 1e-12);
    }
  }
}

TEST(Ece, BoundedAndDiagramConsistent) {
  Rng rng = make_stream(13, "ece-bounds");
  for (int trial = 0; trial < 50; ++trial) {
    const PredictionSet ps = calib::testing::random_predictions(50, 4, rng);
    for (int m : {1, 5, 15}) {
      const double e = ece(ps, m);
      EXPECT_GE(e, 0.0);
      EXPECT_LE(e, 1.0);
      EXPECT_EQ(weighted_gap(reliability_diagram(ps, m), ps.size()), e);
    }
  }
}

TEST(Ece, PermutationInvariance) {
  Rng rng = make_stream(14, "ece-perm");
  const PredictionSet ps = calib::testing::random_predictions(40, 3, rng);
  std::vector<Eigen::Index> order(40);
  std::iota(order.begin(), order.end(), 0);
  std::reverse(order.begin(), order.end());
  Eigen::MatrixXd p(40, 3);
  std::vector<int> y;
  for (Eigen::Index r = 0; r < 40; ++r) {
    p.row(r) = ps.probs().row(order[static_cast<std::size_t>(r)]);
    y.push_back(ps.labels()[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])]);
  }
  const PredictionSet rev(p, y);
  EXPECT_NEAR(ece(rev, 15), ece(ps, 15), 1e-15);
  // Random rows have distinct confidences.
  EXPECT_NEAR(aece(rev, 15), aece(ps, 15), 1e-15);
}

TEST(Nll, KnownValues) {
  Eigen::MatrixXd hot = Eigen::MatrixXd::Identity(3, 3);
  EXPECT_LE(nll(PredictionSet(hot, {0, 1, 2})), 1e-12);
  Eigen::MatrixXd half = Eigen::MatrixXd::Constant(4, 2, 0.5);
  EXPECT_NEAR(nll(PredictionSet(half, {0, 1, 0, 1})), std::log(2.0), 1e-15);
  EXPECT_NEAR(nll(from_confidences({0.25, 0.25}, {1, 1})), std::log(4.0), 1e-15);
  EXPECT_THROW(nll(PredictionSet(Eigen::MatrixXd(0, 2), {})), InvalidArgument);
}

TEST(Auroc, KnownValues) {
  const std::vector<double> a{0.1, 0.2}, b{0.8, 0.9}, c{0.5}, d{0.1, 0.9}, e{0.5, 0.8};
  EXPECT_EQ(auroc_ood(a, b), 1.0);
  EXPECT_EQ(auroc_ood(c, c), 0.5);
  // Two of the four pairs rank the OOD score higher.
  EXPECT_DOUBLE_EQ(auroc_ood(d, e), brute_auroc(d, e));
  EXPECT_DOUBLE_EQ(auroc_ood(d, e), 0.5);
  EXPECT_THROW(auroc_ood({}, b), InvalidArgument);
}

TEST(Auroc, MatchesPairCountAndIsAntisymmetric) {
  Rng rng = make_stream(15, "auroc");
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> in(1 + uniform_index(rng, 10)), ood(1 + uniform_index(rng, 10));
    // Coarse values force ties.
    for (double& v : in) v = std::round(uniform(rng) * 8.0) / 8.0;
    for (double& v : ood) v = std::round(uniform(rng, 0.2, 1.2) * 8.0) / 8.0;
    EXPECT_NEAR(auroc_ood(in, ood), brute_auroc(in, ood), 1e-12);
    EXPECT_NEAR(auroc_ood(in, ood) + auroc_ood(ood, in), 1.0, 1e-12);
  }
}

TEST(Evaluate, ReportsNanAeceWhenTooFewSamples) {
  const MetricsReport r = evaluate(worked(), 15);
  EXPECT_TRUE(std::isnan(r.aece));
  EXPECT_NEAR(r.accuracy, 0.5, 1e-15);
  EXPECT_EQ(r.bins.size(), 15u);
}

TEST(PredictionSet, Validates) {
  Eigen::MatrixXd p(1, 2);
  p << 0.6, 0.3;
  EXPECT_THROW(PredictionSet(p, {0}), InvalidArgument);
  p << 0.6, 0.4;
  EXPECT_THROW(PredictionSet(p, {2}), InvalidArgument);
  EXPECT_THROW(PredictionSet(p, {0, 1}), InvalidArgument);
}
