#include "calib/mixsim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "calib/errors.hpp"
#include "calib/simplex.hpp"

namespace calib {

void MixWorld::validate() const {
  if (means.rows() < 2) throw InvalidArgument("a world needs at least two classes");
  if (!means.allFinite()) throw InvalidArgument("class means must be finite");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidArgument("sigma must be positive");
  if (!(warp_gamma > 0.0) || !std::isfinite(warp_gamma)) throw InvalidArgument("warp_gamma must be positive");
  for (Eigen::Index a = 0; a < means.rows(); ++a) {
    for (Eigen::Index b = a + 1; b < means.rows(); ++b) {
      if ((means.row(a) - means.row(b)).squaredNorm() == 0.0) throw InvalidArgument("class means must be distinct");
    }
  }
}

MixWorld MixWorld::orthogonal(std::size_t classes, std::size_t dim, double separation, double sigma,
                              double warp_gamma, std::uint64_t seed) {
  if (dim < classes) throw InvalidArgument("dim must be at least the number of classes");
  if (!(separation > 0.0)) throw InvalidArgument("separation must be positive");
  MixWorld w;
  w.means = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(classes), static_cast<Eigen::Index>(dim));
  const double scale = separation / std::sqrt(2.0);
  for (std::size_t k = 0; k < classes; ++k) w.means(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = scale;
  w.sigma = sigma;
  w.warp_gamma = warp_gamma;
  w.seed = seed;
  w.validate();
  return w;
}

double warp(double lambda, double gamma) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("lambda must lie in [0, 1]");
  if (!(gamma > 0.0)) throw InvalidArgument("warp exponent must be positive");
  if (gamma == 1.0) return lambda;
  const double a = std::pow(lambda, gamma);
  const double b = std::pow(1.0 - lambda, gamma);
  return a / (a + b);
}

std::vector<double> lambda_grid(std::size_t n) {
  if (n < 2) throw InvalidArgument("a lambda grid needs at least two points");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

namespace {

void check_classes(const MixWorld& world, std::size_t i, std::size_t j) {
  if (i == j) throw InvalidArgument("mixed classes must differ");
  if (i >= world.classes() || j >= world.classes()) throw InvalidArgument("class index out of range");
}

Eigen::VectorXd normal_vector(std::size_t d, Rng& rng) {
  Eigen::VectorXd z(static_cast<Eigen::Index>(d));
  for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = standard_normal(rng);
  return z;
}

}  // namespace

MixSet generate_set(const MixWorld& world, std::size_t class_i, std::size_t class_j,
                    const std::vector<double>& lambdas, Rng& rng) {
  check_classes(world, class_i, class_j);
  MixSet set;
  set.class_i = class_i;
  set.class_j = class_j;
  std::vector<double> w;
  w.reserve(lambdas.size());
  for (double l : lambdas) w.push_back(warp(l, world.warp_gamma));
  set.latent = normal_vector(world.dim(), rng);
  const Eigen::VectorXd mi = world.mean(class_i), mj = world.mean(class_j);
  const Eigen::VectorXd noise = world.sigma * set.latent;
  for (std::size_t n = 0; n < lambdas.size(); ++n) {
    set.items.push_back({lambdas[n], w[n] * mi + (1.0 - w[n]) * mj + noise});
  }
  return set;
}

double true_posterior(const MixWorld& world, const Eigen::VectorXd& x, std::size_t class_i, std::size_t class_j) {
  check_classes(world, class_i, class_j);
  if (static_cast<std::size_t>(x.size()) != world.dim()) throw InvalidArgument("sample dimension mismatch");
  const double di = (x - world.mean(class_i)).squaredNorm();
  const double dj = (x - world.mean(class_j)).squaredNorm();
  return sigmoid((dj - di) / (2.0 * world.sigma * world.sigma));
}

EmbeddingSet sample_pool(const MixWorld& world, std::size_t per_class, Rng& rng) {
  const std::size_t k = world.classes();
  EmbeddingSet es;
  es.vectors.resize(static_cast<Eigen::Index>(k * per_class), static_cast<Eigen::Index>(world.dim()));
  es.labels.reserve(k * per_class);
  Eigen::Index row = 0;
  for (std::size_t n = 0; n < per_class; ++n) {
    for (std::size_t c = 0; c < k; ++c, ++row) {
      es.vectors.row(row) = (world.mean(c) + world.sigma * normal_vector(world.dim(), rng)).transpose();
      es.labels.push_back(static_cast<int>(c));
    }
  }
  return es;
}

std::vector<MixedSample> Benchmark::mixed_inputs() const {
  std::vector<MixedSample> out;
  out.reserve(mixed.size());
  for (const BenchmarkSample& s : mixed) out.push_back({s.x, s.class_i, s.class_j});
  return out;
}

Benchmark build_benchmark(const MixWorld& world, const BenchmarkConfig& config) {
  world.validate();
  if (config.sets < 1) throw InvalidArgument("a benchmark needs at least one set");
  if (config.onehot_per_class < 1) throw InvalidArgument("the one-hot pool must be nonempty");
  Benchmark b;
  b.classes = world.classes();
  b.mixed.reserve(config.sets * config.lambdas.size());
  for (std::size_t n = 0; n < config.sets; ++n) {
    Rng rng = make_stream(config.seed, "mixsim-set", n);
    const std::size_t i = uniform_index(rng, b.classes);
    const std::size_t j = (i + 1 + uniform_index(rng, b.classes - 1)) % b.classes;
    const MixSet set = generate_set(world, i, j, config.lambdas, rng);
    for (const MixItem& item : set.items) {
      b.mixed.push_back({item.x, item.lambda_hat, true_posterior(world, item.x, i, j), i, j, n});
    }
  }
  Rng pool = make_stream(config.seed, "mixsim-onehot");
  b.onehot = sample_pool(world, config.onehot_per_class, pool);
  if (config.validation_per_class > 0) {
    Rng val = make_stream(config.seed, "mixsim-validation");
    b.validation = sample_pool(world, config.validation_per_class, val);
  }
  return b;
}

namespace {

std::vector<double> fractional_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t lo = 0; lo < order.size();) {
    std::size_t hi = lo;
    while (hi + 1 < order.size() && v[order[hi + 1]] == v[order[lo]]) ++hi;
    const double r = 0.5 * static_cast<double>(lo + hi) + 1.0;
    for (std::size_t m = lo; m <= hi; ++m) ranks[order[m]] = r;
    lo = hi + 1;
  }
  return ranks;
}

}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw InvalidArgument("spearman needs two equal-length samples");
  const std::vector<double> ra = fractional_ranks(a), rb = fractional_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace calib
