#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

#include "calib/simplex.hpp"

namespace calib {

inline constexpr int kDefaultBins = 15;

// N predictions over K classes with their true labels. Rows are validated
// against the simplex invariants on construction.
class PredictionSet {
 public:
  PredictionSet(Eigen::MatrixXd probs, std::vector<int> labels);

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t classes() const noexcept { return static_cast<std::size_t>(probs_.cols()); }
  const Eigen::MatrixXd& probs() const noexcept { return probs_; }
  const std::vector<int>& labels() const noexcept { return labels_; }

  // Row-major copy of sample i for the span-based helpers.
  Eigen::VectorXd row(std::size_t i) const { return probs_.row(static_cast<Eigen::Index>(i)).transpose(); }

 private:
  Eigen::MatrixXd probs_;
  std::vector<int> labels_;
};

struct Prediction {
  std::size_t label = 0;
  double confidence = 0.0;
};

Prediction predict(std::span<const double> p) noexcept;
inline Prediction predict(const ProbVector& p) noexcept { return predict(p.span()); }

// accuracy and mean_confidence are meaningful only when count > 0; empty
// bins report 0 for both.
struct BinStats {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
  double accuracy = 0.0;
  double mean_confidence = 0.0;
};

// Confidence and correctness per sample, in sample order.
struct ConfidenceTable {
  std::vector<double> confidence;
  std::vector<bool> correct;
};
ConfidenceTable confidence_table(const PredictionSet& ps);

// Equal-width bin index for a confidence in [0,1]; 1.0 lands in the last bin.
std::size_t equal_width_bin(double confidence, int m_bins) noexcept;

std::vector<BinStats> reliability_diagram(const PredictionSet& ps, int m_bins);
// Equal-count bins: stable sort by confidence, first N mod M bins one larger.
std::vector<BinStats> adaptive_bins(const PredictionSet& ps, int m_bins);

// Sum over bins of (count / N) * |accuracy - mean_confidence|.
double weighted_gap(std::span<const BinStats> bins, std::size_t n);
double weighted_over(std::span<const BinStats> bins, std::size_t n);
double weighted_under(std::span<const BinStats> bins, std::size_t n);

double accuracy(const PredictionSet& ps);
double ece(const PredictionSet& ps, int m_bins = kDefaultBins);
double aece(const PredictionSet& ps, int m_bins = kDefaultBins);
double oe(const PredictionSet& ps, int m_bins = kDefaultBins);
double ue(const PredictionSet& ps, int m_bins = kDefaultBins);
double nll(const PredictionSet& ps);
double mean_entropy(const PredictionSet& ps);

// Probability that a random OOD score ranks above a random in-distribution
// score, ties counted as one half.
double auroc_ood(std::span<const double> in_dist_scores, std::span<const double> ood_scores);

struct MetricsReport {
  double accuracy = 0.0;
  double ece = 0.0;
  double aece = 0.0;
  double oe = 0.0;
  double ue = 0.0;
  double nll = 0.0;
  double mean_entropy = 0.0;
  std::vector<BinStats> bins;
  int n_bins = kDefaultBins;
};

// AECE is reported as NaN when N < m_bins.
MetricsReport evaluate(const PredictionSet& ps, int m_bins = kDefaultBins);

}  // namespace calib
