#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numeric>
#include <vector>

#include "calib/metrics.hpp"
#include "calib/rng.hpp"

namespace calib::testing {

// Random point of the simplex, occasionally with exact zeros.
inline Eigen::VectorXd random_simplex(std::size_t k, Rng& rng, bool allow_zeros = false) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(k));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v[i] = -std::log(1.0 - uniform(rng));
    if (allow_zeros && uniform(rng) < 0.2) v[i] = 0.0;
  }
  if (v.sum() == 0.0) v[0] = 1.0;
  return v / v.sum();
}

inline PredictionSet random_predictions(std::size_t n, std::size_t k, Rng& rng) {
  Eigen::MatrixXd p(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  std::vector<int> labels;
  for (std::size_t i = 0; i < n; ++i) {
    p.row(static_cast<Eigen::Index>(i)) = random_simplex(k, rng).transpose();
    labels.push_back(static_cast<int>(uniform_index(rng, k)));
  }
  return PredictionSet(p, labels);
}

// Rows [c, (1-c)/(K-1), ...] with the label chosen to make it right or wrong.
inline PredictionSet from_confidences(const std::vector<double>& conf, const std::vector<int>& correct, int k = 4) {
  Eigen::MatrixXd p(static_cast<Eigen::Index>(conf.size()), k);
  std::vector<int> labels;
  for (std::size_t i = 0; i < conf.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    p.row(r).setConstant((1.0 - conf[i]) / (k - 1));
    p(r, 0) = conf[i];
    labels.push_back(correct[i] ? 0 : 1);
  }
  return PredictionSet(p, labels);
}

inline PredictionSet worked() { return from_confidences({0.6, 0.8, 0.9, 0.3}, {1, 1, 0, 0}); }

// Reference binning written out directly from the definitions.
struct Oracle {
  std::vector<double> conf;
  std::vector<bool> right;

  explicit Oracle(const PredictionSet& ps) {
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const Eigen::VectorXd row = ps.row(i);
      Eigen::Index best = 0;
      for (Eigen::Index k = 1; k < row.size(); ++k) {
        if (row[k] > row[best]) best = k;
      }
      conf.push_back(row[best]);
      right.push_back(best == ps.labels()[i]);
    }
  }

  // sum over groups of |B|/N * f(acc - conf)
  template <typename F>
  double over_groups(const std::vector<std::vector<std::size_t>>& groups, F f) const {
    double total = 0.0;
    for (const auto& g : groups) {
      if (g.empty()) continue;
      double a = 0.0, c = 0.0;
      for (std::size_t i : g) {
        a += right[i] ? 1.0 : 0.0;
        c += conf[i];
      }
      a /= static_cast<double>(g.size());
      c /= static_cast<double>(g.size());
      total += static_cast<double>(g.size()) / static_cast<double>(conf.size()) * f(a - c);
    }
    return total;
  }

  std::vector<std::vector<std::size_t>> equal_width(int m) const {
    std::vector<std::vector<std::size_t>> g(static_cast<std::size_t>(m));
    for (int b = 0; b < m; ++b) {
      const double lo = static_cast<double>(b) / m, hi = static_cast<double>(b + 1) / m;
      for (std::size_t i = 0; i < conf.size(); ++i) {
        if (conf[i] >= lo && (conf[i] < hi || b == m - 1)) g[static_cast<std::size_t>(b)].push_back(i);
      }
    }
    return g;
  }

  std::vector<std::vector<std::size_t>> equal_mass(int m) const {
    std::vector<std::size_t> idx(conf.size());
    std::iota(idx.begin(), idx.end(), 0);
    // Insertion sort keeps equal confidences in input order.
    for (std::size_t a = 1; a < idx.size(); ++a) {
      for (std::size_t b = a; b > 0 && conf[idx[b]] < conf[idx[b - 1]]; --b) std::swap(idx[b], idx[b - 1]);
    }
    const std::size_t n = conf.size(), mm = static_cast<std::size_t>(m);
    std::vector<std::vector<std::size_t>> g(mm);
    std::size_t pos = 0;
    for (std::size_t b = 0; b < mm; ++b) {
      for (std::size_t r = 0; r < n / mm + (b < n % mm ? 1 : 0); ++r) g[b].push_back(idx[pos++]);
    }
    return g;
  }
};

}  // namespace calib::testing
