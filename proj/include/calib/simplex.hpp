#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

namespace calib {

inline constexpr double kSimplexTolerance = 1e-9;
inline constexpr double kRepairTolerance = 1e-6;
// Floor applied to every probability before it reaches a logarithm.
inline constexpr double kLogFloor = 1e-12;

double safe_log(double p) noexcept;

// A point on the probability simplex. Construction validates; there is no
// way to obtain an invalid ProbVector.
class ProbVector {
 public:
  // Entries in [0,1] (within tolerance) summing to 1 within 1e-9.
  explicit ProbVector(Eigen::VectorXd values);
  ProbVector(std::initializer_list<double> values);

  // Accepts drift up to 1e-6 (sum and entry range) and renormalizes.
  static ProbVector normalized(Eigen::VectorXd values);
  static ProbVector uniform(std::size_t k);
  static ProbVector one_hot(std::size_t k, std::size_t index);

  std::size_t size() const noexcept { return static_cast<std::size_t>(values_.size()); }
  double operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }
  const Eigen::VectorXd& values() const noexcept { return values_; }
  std::span<const double> span() const noexcept {
    return {values_.data(), static_cast<std::size_t>(values_.size())};
  }

 private:
  struct Trusted {};
  ProbVector(Eigen::VectorXd values, Trusted) : values_(std::move(values)) {}

  Eigen::VectorXd values_;
};

class LogitVector {
 public:
  explicit LogitVector(Eigen::VectorXd values);
  LogitVector(std::initializer_list<double> values);

  std::size_t size() const noexcept { return static_cast<std::size_t>(values_.size()); }
  const Eigen::VectorXd& values() const noexcept { return values_; }

 private:
  Eigen::VectorXd values_;
};

// Two-class soft label: lambda on class_i, 1 - lambda on class_j.
struct SoftLabel {
  std::size_t class_i = 0;
  std::size_t class_j = 1;
  double lambda = 1.0;
  std::size_t k_total = 2;

  void validate() const;
  ProbVector expand() const;
};

ProbVector softmax(const LogitVector& z, double temperature = 1.0);

// Unchecked kernel for hot loops: out = softmax(z / temperature).
// z and out may alias.
void softmax_inplace(std::span<const double> z, double temperature, std::span<double> out) noexcept;

double entropy(const ProbVector& p) noexcept;
double entropy(std::span<const double> p) noexcept;

// Index of the largest entry, lowest index on ties.
std::size_t argmax(std::span<const double> v) noexcept;

double sigmoid(double x) noexcept;

}  // namespace calib
