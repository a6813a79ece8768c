#include "calib/temperature.hpp"

#include <cmath>
#include <span>
#include <string>

#include "calib/errors.hpp"

namespace calib {

std::string_view to_string(TsObjective o) noexcept { return o == TsObjective::nll ? "nll" : "ece"; }

TsObjective parse_objective(std::string_view s) {
  if (s == "nll") return TsObjective::nll;
  if (s == "ece") return TsObjective::ece;
  throw InvalidArgument("unknown temperature objective '" + std::string(s) + "'");
}

void TemperatureGrid::validate() const {
  if (!(lo > 0.0) || !(step > 0.0) || !(hi >= lo) || !std::isfinite(hi)) {
    throw InvalidArgument("temperature grid needs 0 < lo <= hi and step > 0");
  }
}

std::vector<double> TemperatureGrid::points() const {
  validate();
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double t = lo + static_cast<double>(i) * step;
    if (std::abs(t - 1.0) < step * 1e-6) t = 1.0;
    pts.push_back(t);
  }
  return pts;
}

Eigen::MatrixXd apply_temperature(const Eigen::MatrixXd& logits, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw InvalidArgument("temperature must be positive");
  }
  if (!logits.allFinite()) throw InvalidArgument("logits must be finite");
  const auto k = static_cast<std::size_t>(logits.cols());
  Eigen::MatrixXd probs(logits.rows(), logits.cols());
  std::vector<double> z(k), p(k);
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    for (std::size_t c = 0; c < k; ++c) z[c] = logits(i, static_cast<Eigen::Index>(c));
    softmax_inplace(z, temperature, p);
    for (std::size_t c = 0; c < k; ++c) probs(i, static_cast<Eigen::Index>(c)) = p[c];
  }
  return probs;
}

namespace {

double objective_at(const Eigen::MatrixXd& logits, const std::vector<int>& labels, double t,
                    TsObjective objective, int m_bins) {
  const PredictionSet ps(apply_temperature(logits, t), labels);
  return objective == TsObjective::nll ? nll(ps) : ece(ps, m_bins);
}

constexpr double kTieTolerance = 1e-12;

}  // namespace

TemperatureFit fit_temperature(const Eigen::MatrixXd& val_logits, const std::vector<int>& labels,
                               TsObjective objective, const TemperatureGrid& grid, int m_bins) {
  if (val_logits.rows() == 0) throw InvalidArgument("empty validation set");
  if (static_cast<std::size_t>(val_logits.rows()) != labels.size()) {
    throw InvalidArgument("logit rows and labels differ in length");
  }
  const std::vector<double> pts = grid.points();

  TemperatureFit fit;
  fit.objective = objective;
  fit.grid = grid;
  bool have = false;
  for (double t : pts) {
    const double v = objective_at(val_logits, labels, t, objective, m_bins);
    bool take = !have || v < fit.objective_value - kTieTolerance;
    if (!take && std::abs(v - fit.objective_value) <= kTieTolerance) {
      const double d_new = std::abs(t - 1.0);
      const double d_old = std::abs(fit.temperature - 1.0);
      take = d_new < d_old || (d_new == d_old && t < fit.temperature);
    }
    if (take) {
      fit.temperature = t;
      fit.objective_value = v;
      have = true;
    }
  }
  fit.objective_at_one = objective_at(val_logits, labels, 1.0, objective, m_bins);
  return fit;
}

}  // namespace calib
