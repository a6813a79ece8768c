#include "calib/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "calib/errors.hpp"

namespace calib {

double safe_log(double p) noexcept { return std::log(std::clamp(p, kLogFloor, 1.0)); }

namespace {

Eigen::VectorXd from_list(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

void check_simplex(const Eigen::VectorXd& v, double tol) {
  if (v.size() < 2) throw InvalidArgument("probability vector needs at least 2 classes");
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i]) || v[i] < -tol || v[i] > 1.0 + tol) {
      throw InvalidArgument("probability entry " + std::to_string(i) + " = " +
                            std::to_string(v[i]) + " outside [0,1]");
    }
  }
  const double sum = v.sum();
  if (std::abs(sum - 1.0) > tol) {
    throw InvalidArgument("probabilities sum to " + std::to_string(sum));
  }
}

}  // namespace

ProbVector::ProbVector(Eigen::VectorXd values) : values_(std::move(values)) {
  check_simplex(values_, kSimplexTolerance);
  values_ = values_.cwiseMax(0.0).cwiseMin(1.0);
}

ProbVector::ProbVector(std::initializer_list<double> values) : ProbVector(from_list(values)) {}

ProbVector ProbVector::normalized(Eigen::VectorXd values) {
  check_simplex(values, kRepairTolerance);
  values = values.cwiseMax(0.0);
  values /= values.sum();
  return ProbVector(std::move(values), Trusted{});
}

ProbVector ProbVector::uniform(std::size_t k) {
  if (k < 2) throw InvalidArgument("probability vector needs at least 2 classes");
  return ProbVector(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(k), 1.0 / static_cast<double>(k)),
                    Trusted{});
}

ProbVector ProbVector::one_hot(std::size_t k, std::size_t index) {
  if (k < 2 || index >= k) throw InvalidArgument("one-hot index out of range");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
  v[static_cast<Eigen::Index>(index)] = 1.0;
  return ProbVector(std::move(v), Trusted{});
}

LogitVector::LogitVector(Eigen::VectorXd values) : values_(std::move(values)) {
  if (values_.size() < 1) throw InvalidArgument("empty logit vector");
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw InvalidArgument("logit " + std::to_string(i) + " is not finite");
    }
  }
}

LogitVector::LogitVector(std::initializer_list<double> values) : LogitVector(from_list(values)) {}

void SoftLabel::validate() const {
  if (k_total < 2) throw InvalidArgument("soft label needs at least 2 classes");
  if (class_i == class_j) throw InvalidArgument("soft label classes must differ");
  if (class_i >= k_total || class_j >= k_total) {
    throw InvalidArgument("soft label class index out of range");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw InvalidArgument("soft label lambda " + std::to_string(lambda) + " outside [0,1]");
  }
}

ProbVector SoftLabel::expand() const {
  validate();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k_total));
  v[static_cast<Eigen::Index>(class_i)] = lambda;
  v[static_cast<Eigen::Index>(class_j)] = 1.0 - lambda;
  return ProbVector(std::move(v));
}

void softmax_inplace(std::span<const double> z, double temperature, std::span<double> out) noexcept {
  // Scale first so softmax(z, T) and softmax(z / T, 1) agree bit for bit.
  double zmax = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < z.size(); ++k) {
    out[k] = z[k] / temperature;
    zmax = std::max(zmax, out[k]);
  }
  double sum = 0.0;
  for (double& v : out) {
    v = std::exp(v - zmax);
    sum += v;
  }
  for (double& v : out) v /= sum;
}

ProbVector softmax(const LogitVector& z, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw InvalidArgument("temperature must be positive");
  }
  if (z.size() < 2) throw InvalidArgument("softmax needs at least 2 logits");
  Eigen::VectorXd out(z.values().size());
  softmax_inplace({z.values().data(), z.size()}, temperature,
                  {out.data(), static_cast<std::size_t>(out.size())});
  return ProbVector(std::move(out));
}

double entropy(std::span<const double> p) noexcept {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

double entropy(const ProbVector& p) noexcept { return entropy(p.span()); }

std::size_t argmax(std::span<const double> v) noexcept {
  std::size_t best = 0;
  for (std::size_t k = 1; k < v.size(); ++k) {
    if (v[k] > v[best]) best = k;
  }
  return best;
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace calib
