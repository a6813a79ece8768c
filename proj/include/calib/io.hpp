#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "calib/metrics.hpp"
#include "calib/mixsim.hpp"
#include "calib/reannotate.hpp"

namespace calib::io {

// label,p0..p{K-1} (probabilities) or label,z0..z{K-1} (logits).
struct PredictionFile {
  std::vector<int> labels;
  Eigen::MatrixXd values;  // N x K
  bool logits = false;

  // Softmaxes logit files; probability rows are used as stored.
  PredictionSet predictions() const;
  // Logit files as stored; probability files as log p (same softmax).
  Eigen::MatrixXd as_logits() const;
};

// Columns are matched by header name; `label_column` selects the label.
PredictionFile read_predictions(std::istream& in, const std::string& label_column = "label");
PredictionFile load_predictions(const std::filesystem::path& path, const std::string& label_column = "label");
void write_predictions(std::ostream& out, const PredictionFile& file);

// label,e0..e{d-1}
EmbeddingSet read_embeddings(std::istream& in);
EmbeddingSet load_embeddings(const std::filesystem::path& path);
void write_embeddings(std::ostream& out, const EmbeddingSet& es);

// class_i,class_j,e0..e{d-1}
std::vector<MixedSample> read_pairs(std::istream& in);
std::vector<MixedSample> load_pairs(const std::filesystem::path& path);
void write_pairs(std::ostream& out, const std::vector<MixedSample>& pairs);

// set,class_i,class_j,lambda_hat,lambda_true,e0..
std::vector<BenchmarkSample> read_mixed(std::istream& in);
void write_mixed(std::ostream& out, const std::vector<BenchmarkSample>& mixed);

// Directory layout: mixed.csv, onehot.csv and (when nonempty) validation.csv.
void save_benchmark(const std::filesystem::path& dir, const Benchmark& b);
Benchmark load_benchmark(const std::filesystem::path& dir);

}  // namespace calib::io
