#pragma once

#include <Eigen/Dense>
#include <string_view>
#include <vector>

#include "calib/metrics.hpp"

namespace calib {

enum class TsObjective { nll, ece };

std::string_view to_string(TsObjective o) noexcept;
TsObjective parse_objective(std::string_view s);

struct TemperatureGrid {
  double lo = 0.5;
  double hi = 5.0;
  double step = 0.01;

  void validate() const;
  // lo, lo + step, ... up to hi; a point within step * 1e-6 of 1.0 is
  // snapped to exactly 1.0.
  std::vector<double> points() const;
};

struct TemperatureFit {
  double temperature = 1.0;
  TsObjective objective = TsObjective::nll;
  double objective_value = 0.0;
  double objective_at_one = 0.0;  // objective at T = 1 for comparison
  TemperatureGrid grid;
};

// Row-wise softmax(logits / T); logits are N x K.
Eigen::MatrixXd apply_temperature(const Eigen::MatrixXd& logits, double temperature);

// Exhaustive grid search. Objective values within 1e-12 count as ties,
// resolved toward T closest to 1.0, then the smaller T.
TemperatureFit fit_temperature(const Eigen::MatrixXd& val_logits, const std::vector<int>& labels,
                               TsObjective objective = TsObjective::nll,
                               const TemperatureGrid& grid = {}, int m_bins = kDefaultBins);

}  // namespace calib
