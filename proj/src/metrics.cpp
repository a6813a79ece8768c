#include "calib/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "calib/errors.hpp"

namespace calib {

PredictionSet::PredictionSet(Eigen::MatrixXd probs, std::vector<int> labels)
    : probs_(std::move(probs)), labels_(std::move(labels)) {
  if (static_cast<std::size_t>(probs_.rows()) != labels_.size()) {
    throw InvalidArgument("prediction rows and labels differ in length");
  }
  if (probs_.cols() < 2) throw InvalidArgument("predictions need at least 2 classes");
  for (Eigen::Index i = 0; i < probs_.rows(); ++i) {
    // Throws on a bad row; message names the failing entry.
    try {
      (void)ProbVector(Eigen::VectorXd(probs_.row(i).transpose()));
    } catch (const InvalidArgument& e) {
      throw InvalidArgument("row " + std::to_string(i) + ": " + e.what());
    }
    const int y = labels_[static_cast<std::size_t>(i)];
    if (y < 0 || y >= probs_.cols()) {
      throw InvalidArgument("row " + std::to_string(i) + ": label out of range");
    }
  }
}

Prediction predict(std::span<const double> p) noexcept {
  const std::size_t k = argmax(p);
  return {k, p[k]};
}

ConfidenceTable confidence_table(const PredictionSet& ps) {
  ConfidenceTable t;
  t.confidence.reserve(ps.size());
  t.correct.reserve(ps.size());
  const std::size_t k = ps.classes();
  std::vector<double> row(k);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    for (std::size_t c = 0; c < k; ++c) {
      row[c] = ps.probs()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
    }
    const Prediction pred = predict(row);
    t.confidence.push_back(pred.confidence);
    t.correct.push_back(static_cast<int>(pred.label) == ps.labels()[i]);
  }
  return t;
}

namespace {

void require_bins(const PredictionSet& ps, int m_bins) {
  if (m_bins < 1) throw InvalidArgument("bin count must be at least 1");
  if (ps.size() == 0) throw InvalidArgument("empty prediction set");
}

void finish(BinStats& b, double acc_sum, double conf_sum) {
  if (b.count > 0) {
    b.accuracy = acc_sum / static_cast<double>(b.count);
    b.mean_confidence = conf_sum / static_cast<double>(b.count);
  }
}

}  // namespace

std::size_t equal_width_bin(double confidence, int m_bins) noexcept {
  const double m = static_cast<double>(m_bins);
  auto b = static_cast<long>(std::floor(confidence * m));
  b = std::clamp(b, 0L, static_cast<long>(m_bins - 1));
  // Rounding in confidence * m can disagree with the edges b / m.
  if (b > 0 && confidence < static_cast<double>(b) / m) --b;
  if (b < m_bins - 1 && confidence >= static_cast<double>(b + 1) / m) ++b;
  return static_cast<std::size_t>(b);
}

std::vector<BinStats> reliability_diagram(const PredictionSet& ps, int m_bins) {
  require_bins(ps, m_bins);
  const ConfidenceTable t = confidence_table(ps);
  const auto m = static_cast<std::size_t>(m_bins);
  std::vector<BinStats> bins(m);
  std::vector<double> acc(m, 0.0), conf(m, 0.0);
  for (std::size_t b = 0; b < m; ++b) {
    bins[b].lower = static_cast<double>(b) / m_bins;
    bins[b].upper = static_cast<double>(b + 1) / m_bins;
  }
  for (std::size_t i = 0; i < t.confidence.size(); ++i) {
    const std::size_t b = equal_width_bin(t.confidence[i], m_bins);
    ++bins[b].count;
    acc[b] += t.correct[i] ? 1.0 : 0.0;
    conf[b] += t.confidence[i];
  }
  for (std::size_t b = 0; b < m; ++b) finish(bins[b], acc[b], conf[b]);
  return bins;
}

std::vector<BinStats> adaptive_bins(const PredictionSet& ps, int m_bins) {
  require_bins(ps, m_bins);
  const auto m = static_cast<std::size_t>(m_bins);
  const std::size_t n = ps.size();
  if (n < m) throw InvalidArgument("adaptive binning needs at least as many samples as bins");
  const ConfidenceTable t = confidence_table(ps);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return t.confidence[a] < t.confidence[b]; });

  std::vector<BinStats> bins(m);
  std::size_t pos = 0;
  for (std::size_t b = 0; b < m; ++b) {
    const std::size_t size = n / m + (b < n % m ? 1 : 0);
    double acc = 0.0, conf = 0.0;
    bins[b].lower = t.confidence[order[pos]];
    for (std::size_t r = 0; r < size; ++r, ++pos) {
      const std::size_t i = order[pos];
      acc += t.correct[i] ? 1.0 : 0.0;
      conf += t.confidence[i];
    }
    bins[b].upper = t.confidence[order[pos - 1]];
    bins[b].count = size;
    finish(bins[b], acc, conf);
  }
  return bins;
}

double weighted_gap(std::span<const BinStats> bins, std::size_t n) {
  double total = 0.0;
  for (const BinStats& b : bins) {
    if (b.count == 0) continue;
    total += static_cast<double>(b.count) / static_cast<double>(n) * std::abs(b.accuracy - b.mean_confidence);
  }
  return total;
}

double weighted_over(std::span<const BinStats> bins, std::size_t n) {
  double total = 0.0;
  for (const BinStats& b : bins) {
    if (b.count == 0) continue;
    total += static_cast<double>(b.count) / static_cast<double>(n) * std::max(0.0, b.mean_confidence - b.accuracy);
  }
  return total;
}

double weighted_under(std::span<const BinStats> bins, std::size_t n) {
  double total = 0.0;
  for (const BinStats& b : bins) {
    if (b.count == 0) continue;
    total += static_cast<double>(b.count) / static_cast<double>(n) * std::max(0.0, b.accuracy - b.mean_confidence);
  }
  return total;
}

double accuracy(const PredictionSet& ps) {
  if (ps.size() == 0) throw InvalidArgument("empty prediction set");
  const ConfidenceTable t = confidence_table(ps);
  const auto hits = std::count(t.correct.begin(), t.correct.end(), true);
  return static_cast<double>(hits) / static_cast<double>(ps.size());
}

double ece(const PredictionSet& ps, int m_bins) {
  return weighted_gap(reliability_diagram(ps, m_bins), ps.size());
}

double aece(const PredictionSet& ps, int m_bins) {
  return weighted_gap(adaptive_bins(ps, m_bins), ps.size());
}

double oe(const PredictionSet& ps, int m_bins) {
  return weighted_over(reliability_diagram(ps, m_bins), ps.size());
}

double ue(const PredictionSet& ps, int m_bins) {
  return weighted_under(reliability_diagram(ps, m_bins), ps.size());
}

double nll(const PredictionSet& ps) {
  if (ps.size() == 0) throw InvalidArgument("empty prediction set");
  double total = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    total -= safe_log(ps.probs()(static_cast<Eigen::Index>(i), ps.labels()[i]));
  }
  return total / static_cast<double>(ps.size());
}

double mean_entropy(const PredictionSet& ps) {
  if (ps.size() == 0) throw InvalidArgument("empty prediction set");
  double total = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const Eigen::VectorXd r = ps.row(i);
    total += entropy(std::span<const double>(r.data(), static_cast<std::size_t>(r.size())));
  }
  return total / static_cast<double>(ps.size());
}

double auroc_ood(std::span<const double> in_dist_scores, std::span<const double> ood_scores) {
  if (in_dist_scores.empty() || ood_scores.empty()) {
    throw InvalidArgument("AUROC needs non-empty score lists");
  }
  // Mann-Whitney U with midranks for ties.
  struct Scored {
    double score;
    bool ood;
  };
  std::vector<Scored> all;
  all.reserve(in_dist_scores.size() + ood_scores.size());
  for (double s : in_dist_scores) all.push_back({s, false});
  for (double s : ood_scores) all.push_back({s, true});
  std::stable_sort(all.begin(), all.end(), [](const Scored& a, const Scored& b) { return a.score < b.score; });

  double ood_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j < all.size() && all[j].score == all[i].score) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t r = i; r < j; ++r) {
      if (all[r].ood) ood_rank_sum += midrank;
    }
    i = j;
  }
  const auto n_ood = static_cast<double>(ood_scores.size());
  const auto n_in = static_cast<double>(in_dist_scores.size());
  const double u = ood_rank_sum - n_ood * (n_ood + 1.0) / 2.0;
  return u / (n_ood * n_in);
}

MetricsReport evaluate(const PredictionSet& ps, int m_bins) {
  MetricsReport r;
  r.n_bins = m_bins;
  r.bins = reliability_diagram(ps, m_bins);
  r.accuracy = accuracy(ps);
  r.ece = weighted_gap(r.bins, ps.size());
  r.oe = weighted_over(r.bins, ps.size());
  r.ue = weighted_under(r.bins, ps.size());
  r.aece = ps.size() >= static_cast<std::size_t>(m_bins) ? aece(ps, m_bins)
                                                         : std::numeric_limits<double>::quiet_NaN();
  r.nll = nll(ps);
  r.mean_entropy = mean_entropy(ps);
  return r;
}

}  // namespace calib
