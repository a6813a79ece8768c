#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "calib/mixsim.hpp"
#include "calib/reannotate.hpp"
#include "calib/trainer.hpp"

namespace calib {

// Desk-scale world and pool sizes shared by the CLI and the acceptance run.
struct WorldConfig {
  std::size_t classes = 10;
  std::size_t dim = 64;
  double separation = 3.0;
  double sigma = 1.2;  // 0.4 * separation
  double warp_gamma = 3.0;
  std::size_t sets = 300;
  std::size_t lambdas = 8;
  std::size_t onehot_per_class = 30;
  std::size_t validation_per_class = 200;

  MixWorld world(std::uint64_t seed) const;
  Benchmark benchmark(std::uint64_t seed) const;
};

// Mean squared distance between class means over sigma^2: the slope that
// makes sigmoid(s (lambda_e - 1/2)) the Bayes posterior when the means have
// equal norms.
double matched_scale(const MixWorld& world);

struct ReannotationScore {
  std::size_t samples = 0;
  std::size_t failed = 0;
  double mean_abs_lambda = 0.0;      // |lambda - lambda_true|
  double mean_abs_lambda_hat = 0.0;  // |lambda_hat - lambda_true|
  double max_residual_dot = 0.0;     // |r . (P_i - P_j)| / ||P_i - P_j||
};

// Reannotates the mixed pool with prototypes of the one-hot pool.
ReannotationScore score_reannotation(const Benchmark& b, double s, PrototypeMode mode = PrototypeMode::mean);

// Soft labels come from reannotation unless `use_lambda_hat`.
TrainData training_data(const Benchmark& b, double s, PrototypeMode mode = PrototypeMode::mean,
                        bool use_lambda_hat = false);

}  // namespace calib
