#include "calib/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "calib/errors.hpp"
#include "calib/rng.hpp"
#include "calib/simplex.hpp"

namespace calib {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

LinearModel LinearModel::zeros(std::size_t classes, std::size_t dim) {
  if (classes < 2 || dim < 1) throw InvalidArgument("a model needs two classes and a positive dimension");
  return {MatrixXd::Zero(static_cast<Index>(classes), static_cast<Index>(dim)),
          VectorXd::Zero(static_cast<Index>(classes))};
}

MatrixXd LinearModel::logits(const MatrixXd& x) const {
  if (x.cols() != weights.cols()) throw InvalidArgument("input dimension does not match the model");
  MatrixXd z = x * weights.transpose();
  z.rowwise() += bias.transpose();
  return z;
}

namespace {

void softmax_rows(MatrixXd& z, double temperature) {
  // Column-major storage: copy each row out for the span kernel.
  std::vector<double> row(static_cast<std::size_t>(z.cols()));
  for (Index i = 0; i < z.rows(); ++i) {
    for (Index k = 0; k < z.cols(); ++k) row[static_cast<std::size_t>(k)] = z(i, k);
    softmax_inplace(row, temperature, row);
    for (Index k = 0; k < z.cols(); ++k) z(i, k) = row[static_cast<std::size_t>(k)];
  }
}

// Adds the batch-mean loss and its logit gradient (dL/dz rows) for one pool.
double accumulate(const MatrixXd& p, const MatrixXd& q, const LossKind& loss, MatrixXd& dz) {
  const Index n = p.rows(), k = p.cols();
  const double inv = 1.0 / static_cast<double>(n);
  dz.resize(n, k);
  double total = 0.0;
  std::vector<double> pi(static_cast<std::size_t>(k)), qi(pi.size()), gp(pi.size());
  for (Index i = 0; i < n; ++i) {
    for (Index c = 0; c < k; ++c) {
      pi[static_cast<std::size_t>(c)] = p(i, c);
      qi[static_cast<std::size_t>(c)] = q(i, c);
    }
    total += loss_value(loss, pi, qi);
    if (loss.kind == LossKind::Kind::ce) {
      // softmax + CE collapses to p - q for any q on the simplex.
      dz.row(i) = (p.row(i) - q.row(i)) * inv;
      continue;
    }
    loss_gradient(loss, pi, qi, gp);
    double dot = 0.0;
    for (Index c = 0; c < k; ++c) dot += pi[static_cast<std::size_t>(c)] * gp[static_cast<std::size_t>(c)];
    for (Index c = 0; c < k; ++c) {
      dz(i, c) = pi[static_cast<std::size_t>(c)] * (gp[static_cast<std::size_t>(c)] - dot) * inv;
    }
  }
  return total * inv;
}

MatrixXd one_hot_rows(const std::vector<int>& labels, std::size_t k) {
  MatrixXd q = MatrixXd::Zero(static_cast<Index>(labels.size()), static_cast<Index>(k));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= k) throw InvalidArgument("label out of range");
    q(static_cast<Index>(i), labels[i]) = 1.0;
  }
  return q;
}

}  // namespace

MatrixXd LinearModel::probabilities(const MatrixXd& x, double temperature) const {
  MatrixXd z = logits(x);
  softmax_rows(z, temperature);
  return z;
}

LossAndGrad loss_and_grad(const LinearModel& model, const HardBatch& hard, const SoftBatch& soft,
                          const LossKind& soft_loss) {
  const auto k = static_cast<Index>(model.classes());
  if (hard.x.rows() != static_cast<Index>(hard.labels.size())) throw InvalidArgument("hard batch rows and labels differ");
  if (soft.x.rows() != soft.targets.rows()) throw InvalidArgument("soft batch rows and targets differ");
  if (hard.size() > 0 && hard.x.cols() != model.weights.cols()) throw InvalidArgument("hard batch dimension mismatch");
  if (soft.size() > 0 && (soft.x.cols() != model.weights.cols() || soft.targets.cols() != k)) {
    throw InvalidArgument("soft batch dimension mismatch");
  }
  LossAndGrad out;
  out.grad.weights = MatrixXd::Zero(model.weights.rows(), model.weights.cols());
  out.grad.bias = VectorXd::Zero(k);
  MatrixXd dz;
  if (hard.size() > 0) {
    const MatrixXd p = model.probabilities(hard.x);
    out.loss += accumulate(p, one_hot_rows(hard.labels, model.classes()), LossKind::ce(), dz);
    out.grad.weights += dz.transpose() * hard.x;
    out.grad.bias += dz.colwise().sum().transpose();
  }
  if (soft.size() > 0) {
    const MatrixXd p = model.probabilities(soft.x);
    out.loss += accumulate(p, soft.targets, soft_loss, dz);
    out.grad.weights += dz.transpose() * soft.x;
    out.grad.bias += dz.colwise().sum().transpose();
  }
  return out;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw InvalidArgument("epochs must be at least 1");
  if (batch_size < 1) throw InvalidArgument("batch_size must be at least 1");
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw InvalidArgument("weight_decay must be non-negative");
  if (!(soft_ratio >= 0.0) || !std::isfinite(soft_ratio)) throw InvalidArgument("soft_ratio must be non-negative");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw InvalidArgument("validation_fraction must lie in (0, 1)");
  }
  for (const auto& [epoch, factor] : lr_schedule) {
    if (!(factor > 0.0)) throw InvalidArgument("schedule factors must be positive");
  }
}

double TrainConfig::rate_at(std::size_t epoch) const {
  double lr = learning_rate;
  for (const auto& [at, factor] : lr_schedule) {
    if (epoch >= at) lr *= factor;
  }
  return lr;
}

std::pair<EmbeddingSet, EmbeddingSet> stratified_split(const EmbeddingSet& es, double fraction, std::uint64_t seed) {
  es.validate();
  const std::size_t k = es.classes();
  std::vector<std::vector<std::size_t>> by_class(k);
  for (std::size_t i = 0; i < es.size(); ++i) by_class[static_cast<std::size_t>(es.labels[i])].push_back(i);
  std::vector<std::size_t> train_idx, val_idx;
  for (std::size_t c = 0; c < k; ++c) {
    auto& idx = by_class[c];
    Rng rng = make_stream(seed, "trainer-split", c);
    shuffle(idx, rng);
    const auto n_val = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(idx.size())));
    val_idx.insert(val_idx.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
    train_idx.insert(train_idx.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(val_idx.begin(), val_idx.end());
  auto take = [&](const std::vector<std::size_t>& idx) {
    EmbeddingSet out;
    out.vectors.resize(static_cast<Index>(idx.size()), es.vectors.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) {
      out.vectors.row(static_cast<Index>(r)) = es.vectors.row(static_cast<Index>(idx[r]));
      out.labels.push_back(es.labels[idx[r]]);
    }
    return out;
  };
  return {take(train_idx), take(val_idx)};
}

SoftBatch soft_batch_from(const std::vector<ReannotationItem>& items, const std::vector<MixedSample>& inputs,
                          std::size_t classes) {
  if (items.size() != inputs.size()) throw InvalidArgument("items and inputs differ in length");
  std::vector<std::size_t> ok;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].ok()) ok.push_back(i);
  }
  SoftBatch b;
  const Index d = inputs.empty() ? 0 : inputs.front().embedding.size();
  b.x.resize(static_cast<Index>(ok.size()), d);
  b.targets = MatrixXd::Zero(static_cast<Index>(ok.size()), static_cast<Index>(classes));
  for (std::size_t r = 0; r < ok.size(); ++r) {
    const auto row = static_cast<Index>(r);
    b.x.row(row) = inputs[ok[r]].embedding.transpose();
    b.targets.row(row) = items[ok[r]].label->expand().values().transpose();
  }
  return b;
}

namespace {

MetricsReport evaluate_on(const LinearModel& model, const EmbeddingSet& es, double temperature, int bins) {
  return evaluate(PredictionSet(model.probabilities(es.vectors, temperature), es.labels), bins);
}

}  // namespace

std::pair<LinearModel, TrainReport> train(const TrainData& data, const TrainConfig& config) {
  config.validate();
  if (data.onehot.size() == 0) throw InvalidArgument("the one-hot pool must be nonempty");
  data.onehot.validate();

  EmbeddingSet train_set, val_set;
  if (data.validation.size() > 0) {
    train_set = data.onehot;
    val_set = data.validation;
  } else {
    std::tie(train_set, val_set) = stratified_split(data.onehot, config.validation_fraction, config.seed);
  }
  if (val_set.size() == 0) throw InvalidArgument("validation set is empty");
  const std::size_t k = std::max({data.onehot.classes(), val_set.classes(),
                                  static_cast<std::size_t>(data.soft.targets.cols())});
  const std::size_t d = data.onehot.dim();
  if (data.soft.size() > 0 && static_cast<std::size_t>(data.soft.x.cols()) != d) {
    throw InvalidArgument("soft pool dimension does not match the one-hot pool");
  }

  LinearModel model = LinearModel::zeros(k, d);
  ModelGradient velocity{MatrixXd::Zero(model.weights.rows(), model.weights.cols()), VectorXd::Zero(model.bias.size())};

  TrainReport report;
  report.train_size = train_set.size();
  report.soft_size = data.soft.size();
  report.validation_size = val_set.size();

  const bool use_soft = data.soft.size() > 0 && config.soft_ratio > 0.0;
  std::vector<std::size_t> hard_order(train_set.size());
  std::vector<std::size_t> soft_order(data.soft.size());
  std::size_t soft_cursor = 0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = config.rate_at(epoch);
    Rng rng = make_stream(config.seed, "trainer-epoch", epoch);
    std::iota(hard_order.begin(), hard_order.end(), 0);
    shuffle(hard_order, rng);
    if (use_soft) {
      std::iota(soft_order.begin(), soft_order.end(), 0);
      shuffle(soft_order, rng);
      soft_cursor = 0;
    }
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < hard_order.size(); start += config.batch_size) {
      const std::size_t end = std::min(start + config.batch_size, hard_order.size());
      HardBatch hb;
      hb.x.resize(static_cast<Index>(end - start), static_cast<Index>(d));
      for (std::size_t r = start; r < end; ++r) {
        hb.x.row(static_cast<Index>(r - start)) = train_set.vectors.row(static_cast<Index>(hard_order[r]));
        hb.labels.push_back(train_set.labels[hard_order[r]]);
      }
      SoftBatch sb;
      if (use_soft) {
        const auto m = static_cast<std::size_t>(std::lround(config.soft_ratio * static_cast<double>(end - start)));
        sb.x.resize(static_cast<Index>(m), static_cast<Index>(d));
        sb.targets.resize(static_cast<Index>(m), static_cast<Index>(k));
        for (std::size_t r = 0; r < m; ++r) {
          const auto src = static_cast<Index>(soft_order[soft_cursor]);
          soft_cursor = (soft_cursor + 1) % soft_order.size();
          sb.x.row(static_cast<Index>(r)) = data.soft.x.row(src);
          sb.targets.row(static_cast<Index>(r)) = data.soft.targets.row(src);
        }
      }
      LossAndGrad lg = loss_and_grad(model, hb, sb, config.soft_loss);
      if (!std::isfinite(lg.loss)) throw TrainingFailure("non-finite training loss", static_cast<int>(epoch));
      lg.grad.weights += config.weight_decay * model.weights;
      velocity.weights = config.momentum * velocity.weights + lg.grad.weights;
      velocity.bias = config.momentum * velocity.bias + lg.grad.bias;
      model.weights -= lr * velocity.weights;
      model.bias -= lr * velocity.bias;
      loss_sum += lg.loss;
      ++batches;
    }
    if (!model.finite()) throw TrainingFailure("non-finite parameters", static_cast<int>(epoch));
    const MetricsReport m = evaluate_on(model, val_set, 1.0, config.bins);
    report.epochs.push_back({loss_sum / static_cast<double>(batches), m.nll, m.ece, m.oe});
  }

  report.final_metrics = evaluate_on(model, val_set, 1.0, config.bins);
  report.temperature = fit_temperature(model.logits(val_set.vectors), val_set.labels, config.ts_objective, {},
                                       config.bins);
  report.calibrated_metrics = evaluate_on(model, val_set, report.temperature.temperature, config.bins);
  return {std::move(model), std::move(report)};
}

}  // namespace calib
