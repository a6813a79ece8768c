#include "calib/experiment.hpp"

#include <algorithm>
#include <cmath>

#include "calib/errors.hpp"

namespace calib {

MixWorld WorldConfig::world(std::uint64_t seed) const {
  return MixWorld::orthogonal(classes, dim, separation, sigma, warp_gamma, seed);
}

Benchmark WorldConfig::benchmark(std::uint64_t seed) const {
  BenchmarkConfig bc;
  bc.sets = sets;
  bc.lambdas = lambda_grid(lambdas);
  bc.onehot_per_class = onehot_per_class;
  bc.validation_per_class = validation_per_class;
  bc.seed = seed;
  return build_benchmark(world(seed), bc);
}

double matched_scale(const MixWorld& world) {
  world.validate();
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < world.classes(); ++a) {
    for (std::size_t b = a + 1; b < world.classes(); ++b, ++pairs) sum += (world.mean(a) - world.mean(b)).squaredNorm();
  }
  return sum / static_cast<double>(pairs) / (world.sigma * world.sigma);
}

ReannotationScore score_reannotation(const Benchmark& b, double s, PrototypeMode mode) {
  const PrototypeSet protos = class_prototypes(b.onehot, mode, b.classes);
  const std::vector<MixedSample> inputs = b.mixed_inputs();
  const std::vector<ReannotationItem> items = reannotate_batch(inputs, protos, s);
  ReannotationScore sc;
  sc.samples = items.size();
  for (std::size_t n = 0; n < items.size(); ++n) {
    if (!items[n].ok()) {
      ++sc.failed;
      continue;
    }
    const BenchmarkSample& m = b.mixed[n];
    sc.mean_abs_lambda += std::abs(items[n].value->lambda - m.lambda_true);
    sc.mean_abs_lambda_hat += std::abs(m.lambda_hat - m.lambda_true);
    const Eigen::VectorXd pi = protos.row(m.class_i), pj = protos.row(m.class_j);
    const Eigen::VectorXd axis = pi - pj;
    const double dot = projection_residual(m.x, pi, pj).dot(axis) / axis.norm();
    sc.max_residual_dot = std::max(sc.max_residual_dot, std::abs(dot));
  }
  const std::size_t ok = sc.samples - sc.failed;
  if (ok > 0) {
    sc.mean_abs_lambda /= static_cast<double>(ok);
    sc.mean_abs_lambda_hat /= static_cast<double>(ok);
  }
  return sc;
}

TrainData training_data(const Benchmark& b, double s, PrototypeMode mode, bool use_lambda_hat) {
  TrainData data;
  data.onehot = b.onehot;
  data.validation = b.validation;
  const std::vector<MixedSample> inputs = b.mixed_inputs();
  if (use_lambda_hat) {
    data.soft.x.resize(static_cast<Eigen::Index>(inputs.size()), static_cast<Eigen::Index>(b.onehot.dim()));
    data.soft.targets = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(inputs.size()), static_cast<Eigen::Index>(b.classes));
    for (std::size_t n = 0; n < inputs.size(); ++n) {
      const auto r = static_cast<Eigen::Index>(n);
      data.soft.x.row(r) = inputs[n].embedding.transpose();
      data.soft.targets(r, static_cast<Eigen::Index>(b.mixed[n].class_i)) += b.mixed[n].lambda_hat;
      data.soft.targets(r, static_cast<Eigen::Index>(b.mixed[n].class_j)) += 1.0 - b.mixed[n].lambda_hat;
    }
    return data;
  }
  const PrototypeSet protos = class_prototypes(b.onehot, mode, b.classes);
  data.soft = soft_batch_from(reannotate_batch(inputs, protos, s), inputs, b.classes);
  return data;
}

}  // namespace calib
