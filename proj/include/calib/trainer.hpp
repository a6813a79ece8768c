#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "calib/balance.hpp"
#include "calib/metrics.hpp"
#include "calib/reannotate.hpp"
#include "calib/temperature.hpp"

namespace calib {

struct LinearModel {
  Eigen::MatrixXd weights;  // K x d
  Eigen::VectorXd bias;     // K

  static LinearModel zeros(std::size_t classes, std::size_t dim);
  std::size_t classes() const noexcept { return static_cast<std::size_t>(weights.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(weights.cols()); }
  bool finite() const { return weights.allFinite() && bias.allFinite(); }

  // Rows of x are samples; returns N x K logits.
  Eigen::MatrixXd logits(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd probabilities(const Eigen::MatrixXd& x, double temperature = 1.0) const;
};

struct ModelGradient {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
};

struct LossAndGrad {
  double loss = 0.0;
  ModelGradient grad;
};

// Rows of `targets` are soft labels on the simplex.
struct SoftBatch {
  Eigen::MatrixXd x;
  Eigen::MatrixXd targets;
  std::size_t size() const noexcept { return static_cast<std::size_t>(x.rows()); }
};

struct HardBatch {
  Eigen::MatrixXd x;
  std::vector<int> labels;
  std::size_t size() const noexcept { return labels.size(); }
};

// mean CE over the hard batch + mean soft_loss over the soft batch; either
// batch may be empty. Weight decay is left to the optimizer.
LossAndGrad loss_and_grad(const LinearModel& model, const HardBatch& hard, const SoftBatch& soft,
                          const LossKind& soft_loss);

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 64;
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  LossKind soft_loss = LossKind::l2();
  // (epoch, factor): from that epoch on the rate is multiplied by factor.
  std::vector<std::pair<std::size_t, double>> lr_schedule = {{15, 0.1}, {25, 0.1}};
  std::uint64_t seed = 0;
  double soft_ratio = 2.0;
  double validation_fraction = 0.1;
  int bins = kDefaultBins;
  TsObjective ts_objective = TsObjective::nll;

  void validate() const;
  double rate_at(std::size_t epoch) const;
};

struct TrainData {
  EmbeddingSet onehot;
  SoftBatch soft;           // may be empty
  EmbeddingSet validation;  // empty: split off the one-hot pool
};

struct EpochStats {
  double train_loss = 0.0;
  double val_nll = 0.0;
  double val_ece = 0.0;
  double val_oe = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  MetricsReport final_metrics;       // validation, T = 1
  TemperatureFit temperature;
  MetricsReport calibrated_metrics;  // validation, fitted T
  std::size_t train_size = 0;
  std::size_t soft_size = 0;
  std::size_t validation_size = 0;
};

// Stratified, seed-derived split; returns (train, validation).
std::pair<EmbeddingSet, EmbeddingSet> stratified_split(const EmbeddingSet& es, double fraction, std::uint64_t seed);

// Soft targets from reannotation items; failed items are skipped.
SoftBatch soft_batch_from(const std::vector<ReannotationItem>& items, const std::vector<MixedSample>& inputs,
                          std::size_t classes);

// Minibatch SGD with momentum. Throws TrainingFailure on a non-finite loss.
std::pair<LinearModel, TrainReport> train(const TrainData& data, const TrainConfig& config);

}  // namespace calib
