#include "calib/reannotate.hpp"

#include <algorithm>
#include <cmath>

#include "calib/errors.hpp"

namespace calib {

std::size_t EmbeddingSet::classes() const {
  if (labels.empty()) return 0;
  return static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end())) + 1;
}

void EmbeddingSet::validate() const {
  if (static_cast<std::size_t>(vectors.rows()) != labels.size()) {
    throw InvalidArgument("embedding rows and labels differ in length");
  }
  if (!vectors.allFinite()) throw InvalidArgument("embeddings must be finite");
  for (int y : labels) {
    if (y < 0) throw InvalidArgument("negative class label");
  }
}

std::string_view to_string(PrototypeMode m) noexcept { return m == PrototypeMode::mean ? "mean" : "sum"; }

PrototypeMode parse_prototype_mode(std::string_view s) {
  if (s == "mean") return PrototypeMode::mean;
  if (s == "sum") return PrototypeMode::sum;
  throw InvalidArgument("unknown prototype mode '" + std::string(s) + "'");
}

PrototypeSet class_prototypes(const EmbeddingSet& es, PrototypeMode mode, std::size_t num_classes) {
  es.validate();
  const std::size_t k = num_classes == 0 ? es.classes() : num_classes;
  PrototypeSet ps;
  ps.mode = mode;
  ps.prototypes = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), es.vectors.cols());
  ps.counts.assign(k, 0);
  // Fixed index-order reduction.
  for (std::size_t i = 0; i < es.size(); ++i) {
    const auto y = static_cast<std::size_t>(es.labels[i]);
    if (y >= k) throw InvalidArgument("label " + std::to_string(y) + " exceeds class count");
    ps.prototypes.row(static_cast<Eigen::Index>(y)) += es.vectors.row(static_cast<Eigen::Index>(i));
    ++ps.counts[y];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (ps.counts[c] == 0) {
      throw InvalidArgument("class " + std::to_string(c) + " has no embeddings");
    }
    if (mode == PrototypeMode::mean) {
      ps.prototypes.row(static_cast<Eigen::Index>(c)) /= static_cast<double>(ps.counts[c]);
    }
  }
  return ps;
}

void normalize_rows(Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double n = m.row(i).norm();
    if (!(n > 0.0)) throw InvalidArgument("cannot normalize a zero embedding (row " + std::to_string(i) + ")");
    m.row(i) /= n;
  }
}

Eigen::VectorXd normalized(const Eigen::VectorXd& v) {
  const double n = v.norm();
  if (!(n > 0.0)) throw InvalidArgument("cannot normalize a zero embedding");
  return v / n;
}

namespace {

void check_pair(const Eigen::VectorXd& e, const Eigen::VectorXd& p_i, const Eigen::VectorXd& p_j) {
  if (e.size() != p_i.size() || e.size() != p_j.size()) {
    throw InvalidArgument("embedding and prototype dimensions differ");
  }
}

}  // namespace

double lambda_e(const Eigen::VectorXd& e, const Eigen::VectorXd& p_i, const Eigen::VectorXd& p_j) {
  check_pair(e, p_i, p_j);
  const Eigen::VectorXd diff = p_i - p_j;
  const double gap = diff.squaredNorm();
  if (gap <= kDegenerateGap) {
    throw DegeneratePrototypes("prototypes coincide (squared distance " + std::to_string(gap) + ")");
  }
  return (e - p_j).dot(diff) / gap;
}

Eigen::VectorXd projection_residual(const Eigen::VectorXd& e, const Eigen::VectorXd& p_i,
                                    const Eigen::VectorXd& p_j) {
  const double le = lambda_e(e, p_i, p_j);
  return e - le * p_i - (1.0 - le) * p_j;
}

double debias_lambda(double lambda_e, double s) {
  if (!(s > 0.0) || !std::isfinite(s)) throw InvalidArgument("scale s must be positive");
  if (!std::isfinite(lambda_e)) throw InvalidArgument("lambda_e must be finite");
  return sigmoid(s * (lambda_e - 0.5));
}

Reannotation reannotate_one(const MixedSample& sample, const PrototypeSet& prototypes, double s) {
  const std::size_t k = prototypes.classes();
  if (sample.class_i == sample.class_j) throw InvalidArgument("mixed classes must differ");
  if (sample.class_i >= k || sample.class_j >= k) throw InvalidArgument("mixed class out of range");
  Reannotation r;
  r.class_i = sample.class_i;
  r.class_j = sample.class_j;
  r.scale_s = s;
  r.lambda_e = lambda_e(sample.embedding, prototypes.row(sample.class_i), prototypes.row(sample.class_j));
  r.lambda = debias_lambda(r.lambda_e, s);
  return r;
}

std::vector<ReannotationItem> reannotate_batch(std::span<const MixedSample> samples,
                                               const PrototypeSet& prototypes, double s) {
  if (!(s > 0.0) || !std::isfinite(s)) throw InvalidArgument("scale s must be positive");
  std::vector<ReannotationItem> out(samples.size());
  for (std::size_t n = 0; n < samples.size(); ++n) {
    out[n].index = n;
    try {
      const Reannotation r = reannotate_one(samples[n], prototypes, s);
      out[n].label = r.soft_label(prototypes.classes());
      out[n].value = r;
    } catch (const DegeneratePrototypes& e) {
      out[n].error = std::string("degenerate-prototypes: ") + e.what();
    } catch (const InvalidArgument& e) {
      out[n].error = std::string("invalid-argument: ") + e.what();
    }
  }
  return out;
}

}  // namespace calib
