#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "calib/reannotate.hpp"
#include "calib/rng.hpp"

namespace calib {

// Isotropic Gaussian classes N(mu_k, sigma^2 I) with equal priors. A mixed
// label with coefficient l places a sample at w(l) mu_i + (1 - w(l)) mu_j
// plus the set's shared noise, where w warps the transition.
struct MixWorld {
  Eigen::MatrixXd means;  // K x d
  double sigma = 1.0;
  double warp_gamma = 1.0;
  std::uint64_t seed = 0;

  std::size_t classes() const noexcept { return static_cast<std::size_t>(means.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(means.cols()); }
  Eigen::VectorXd mean(std::size_t k) const { return means.row(static_cast<Eigen::Index>(k)).transpose(); }
  void validate() const;

  // mu_k = (separation / sqrt 2) e_k: equal norms, every pair `separation`
  // apart. Requires dim >= classes.
  static MixWorld orthogonal(std::size_t classes, std::size_t dim, double separation, double sigma,
                             double warp_gamma, std::uint64_t seed);
};

// l^g / (l^g + (1 - l)^g); symmetric, w(l) + w(1 - l) = 1.
double warp(double lambda, double gamma);

// n points spread evenly over [0, 1], endpoints included.
std::vector<double> lambda_grid(std::size_t n = 8);

struct MixItem {
  double lambda_hat = 0.0;
  Eigen::VectorXd x;
};

struct MixSet {
  Eigen::VectorXd latent;
  std::size_t class_i = 0;
  std::size_t class_j = 1;
  std::vector<MixItem> items;
};

// Draws the latent once and emits one item per coefficient.
MixSet generate_set(const MixWorld& world, std::size_t class_i, std::size_t class_j,
                    const std::vector<double>& lambdas, Rng& rng);

// Two-class Bayes posterior of class_i at x.
double true_posterior(const MixWorld& world, const Eigen::VectorXd& x, std::size_t class_i, std::size_t class_j);

struct BenchmarkConfig {
  std::size_t sets = 500;
  std::vector<double> lambdas = lambda_grid();
  std::size_t onehot_per_class = 100;
  std::size_t validation_per_class = 0;  // 0: no dedicated validation pool
  std::uint64_t seed = 0;
};

struct BenchmarkSample {
  Eigen::VectorXd x;
  double lambda_hat = 0.0;
  double lambda_true = 0.5;
  std::size_t class_i = 0;
  std::size_t class_j = 1;
  std::size_t set = 0;
};

struct Benchmark {
  std::size_t classes = 0;
  std::vector<BenchmarkSample> mixed;
  EmbeddingSet onehot;
  EmbeddingSet validation;  // empty unless requested

  std::vector<MixedSample> mixed_inputs() const;
};

// Set n uses streams derived from (config.seed, n); the one-hot and
// validation pools use their own streams, so pool sizes do not perturb the
// mixed sets.
Benchmark build_benchmark(const MixWorld& world, const BenchmarkConfig& config);

// Draws `per_class` samples of every class from the pure conditionals.
EmbeddingSet sample_pool(const MixWorld& world, std::size_t per_class, Rng& rng);

// Fractional-rank Spearman correlation.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace calib
