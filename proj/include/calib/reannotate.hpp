#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "calib/simplex.hpp"

namespace calib {

// Row i of `vectors` is the embedding of a sample with class labels[i].
struct EmbeddingSet {
  Eigen::MatrixXd vectors;  // N x d
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(vectors.cols()); }
  // Largest label + 1.
  std::size_t classes() const;
  void validate() const;
};

enum class PrototypeMode { mean, sum };
std::string_view to_string(PrototypeMode m) noexcept;
PrototypeMode parse_prototype_mode(std::string_view s);

struct PrototypeSet {
  Eigen::MatrixXd prototypes;  // K x d
  std::vector<std::size_t> counts;
  PrototypeMode mode = PrototypeMode::mean;

  std::size_t classes() const noexcept { return static_cast<std::size_t>(prototypes.rows()); }
  Eigen::VectorXd row(std::size_t k) const { return prototypes.row(static_cast<Eigen::Index>(k)).transpose(); }
};

// Per-class mean (or sum) of embeddings. Every class in [0, num_classes)
// must be present; num_classes = 0 uses es.classes().
PrototypeSet class_prototypes(const EmbeddingSet& es, PrototypeMode mode = PrototypeMode::mean,
                              std::size_t num_classes = 0);

// Scales every row to unit L2 norm; zero rows are rejected.
void normalize_rows(Eigen::MatrixXd& m);
Eigen::VectorXd normalized(const Eigen::VectorXd& v);

inline constexpr double kDegenerateGap = 1e-12;

// Coefficient of the projection of e onto the line through p_j and p_i:
// e = lambda_e * p_i + (1 - lambda_e) * p_j + r with r orthogonal to p_i - p_j.
double lambda_e(const Eigen::VectorXd& e, const Eigen::VectorXd& p_i, const Eigen::VectorXd& p_j);

// The residual r of the decomposition above.
Eigen::VectorXd projection_residual(const Eigen::VectorXd& e, const Eigen::VectorXd& p_i,
                                    const Eigen::VectorXd& p_j);

// sigmoid(s * (lambda_e - 1/2)).
double debias_lambda(double lambda_e, double s);

struct Reannotation {
  double lambda_e = 0.5;
  double lambda = 0.5;
  std::size_t class_i = 0;
  std::size_t class_j = 1;
  double scale_s = 1.0;

  SoftLabel soft_label(std::size_t k_total) const { return {class_i, class_j, lambda, k_total}; }
};

struct MixedSample {
  Eigen::VectorXd embedding;
  std::size_t class_i = 0;
  std::size_t class_j = 1;
};

// One entry per input sample, in input order. Exactly one of `value` or
// `error` is set.
struct ReannotationItem {
  std::size_t index = 0;
  std::optional<Reannotation> value;
  std::optional<SoftLabel> label;
  std::string error;

  bool ok() const noexcept { return value.has_value(); }
};

Reannotation reannotate_one(const MixedSample& sample, const PrototypeSet& prototypes, double s);

std::vector<ReannotationItem> reannotate_batch(std::span<const MixedSample> samples,
                                               const PrototypeSet& prototypes, double s);

}  // namespace calib
