#include "calib/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>

#include "calib/errors.hpp"
#include "calib/simplex.hpp"

namespace calib::io {

namespace {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> lines;  // 1-based source line of each row
};

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string_view f = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
    out.push_back(f);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_number(std::string_view f, std::size_t line) {
  if (!f.empty() && f.front() == '+') f.remove_prefix(1);
  double v = 0.0;
  const auto [end, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (f.empty() || ec != std::errc() || end != f.data() + f.size()) {
    throw ParseError("cannot parse '" + std::string(f) + "' as a number", line);
  }
  return v;
}

Table read_table(std::istream& in) {
  Table t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split(line);
    if (t.header.empty()) {
      for (auto f : fields) t.header.emplace_back(f);
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw ParseError("expected " + std::to_string(t.header.size()) + " fields, found " +
                           std::to_string(fields.size()),
                       lineno);
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (auto f : fields) row.push_back(parse_number(f, lineno));
    t.rows.push_back(std::move(row));
    t.lines.push_back(lineno);
  }
  if (t.header.empty()) throw ParseError("missing header", lineno == 0 ? 1 : lineno);
  return t;
}

std::size_t column(const Table& t, const std::string& name) {
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (t.header[c] == name) return c;
  }
  throw ParseError("missing column '" + name + "'", 1);
}

// Columns prefix0, prefix1, ... in order; returns their positions.
std::vector<std::size_t> indexed_columns(const Table& t, const std::string& prefix) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0;; ++k) {
    const std::string name = prefix + std::to_string(k);
    bool found = false;
    for (std::size_t c = 0; c < t.header.size(); ++c) {
      if (t.header[c] == name) {
        out.push_back(c);
        found = true;
        break;
      }
    }
    if (!found) break;
  }
  return out;
}

int as_label(double v, std::size_t line) {
  if (!(v >= 0.0) || v != std::floor(v) || v > 1e9) throw ParseError("labels must be non-negative integers", line);
  return static_cast<int>(v);
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open '" + path.string() + "'");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
  return out;
}

// Shortest text that reads back to the same double.
void put(std::ostream& out, double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, end - buf);
}

void put_row(std::ostream& out, const Eigen::VectorXd& v) {
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    out << ',';
    put(out, v[k]);
  }
}

void header_columns(std::ostream& out, const std::string& prefix, Eigen::Index n) {
  for (Eigen::Index k = 0; k < n; ++k) out << ',' << prefix << k;
  out << '\n';
}

Eigen::MatrixXd gather(const Table& t, const std::vector<std::size_t>& cols) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = t.rows[r][cols[c]];
    }
  }
  return m;
}

}  // namespace

PredictionSet PredictionFile::predictions() const {
  if (!logits) return PredictionSet(values, labels);
  Eigen::MatrixXd p = values;
  std::vector<double> row(static_cast<std::size_t>(p.cols()));
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index k = 0; k < p.cols(); ++k) row[static_cast<std::size_t>(k)] = p(i, k);
    softmax_inplace(row, 1.0, row);
    for (Eigen::Index k = 0; k < p.cols(); ++k) p(i, k) = row[static_cast<std::size_t>(k)];
  }
  return PredictionSet(std::move(p), labels);
}

Eigen::MatrixXd PredictionFile::as_logits() const {
  if (logits) return values;
  return values.unaryExpr([](double p) { return safe_log(p); });
}

PredictionFile read_predictions(std::istream& in, const std::string& label_column) {
  const Table t = read_table(in);
  const std::size_t lc = column(t, label_column);
  PredictionFile f;
  std::vector<std::size_t> cols = indexed_columns(t, "p");
  if (cols.empty()) {
    cols = indexed_columns(t, "z");
    f.logits = true;
  }
  if (cols.size() < 2) throw ParseError("need columns p0..p{K-1} or z0..z{K-1} with K >= 2", 1);
  f.values = gather(t, cols);
  const auto k = static_cast<int>(cols.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const int y = as_label(t.rows[r][lc], t.lines[r]);
    if (y >= k) throw ValidationError("label " + std::to_string(y) + " out of range", r);
    f.labels.push_back(y);
    const auto row = static_cast<Eigen::Index>(r);
    if (f.logits) {
      if (!f.values.row(row).allFinite()) throw ValidationError("logits must be finite", r);
      continue;
    }
    try {
      f.values.row(row) = ProbVector::normalized(f.values.row(row).transpose()).values().transpose();
    } catch (const InvalidArgument& e) {
      throw ValidationError(std::string("not a probability vector: ") + e.what(), r);
    }
  }
  return f;
}

PredictionFile load_predictions(const std::filesystem::path& path, const std::string& label_column) {
  auto in = open_in(path);
  return read_predictions(in, label_column);
}

void write_predictions(std::ostream& out, const PredictionFile& file) {
  out << "label";
  header_columns(out, file.logits ? "z" : "p", file.values.cols());
  for (std::size_t i = 0; i < file.labels.size(); ++i) {
    out << file.labels[i];
    put_row(out, file.values.row(static_cast<Eigen::Index>(i)).transpose());
    out << '\n';
  }
}

EmbeddingSet read_embeddings(std::istream& in) {
  const Table t = read_table(in);
  const std::size_t lc = column(t, "label");
  const std::vector<std::size_t> cols = indexed_columns(t, "e");
  if (cols.empty()) throw ParseError("need columns e0..e{d-1}", 1);
  EmbeddingSet es;
  es.vectors = gather(t, cols);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    es.labels.push_back(as_label(t.rows[r][lc], t.lines[r]));
    if (!es.vectors.row(static_cast<Eigen::Index>(r)).allFinite()) throw ValidationError("embedding must be finite", r);
  }
  return es;
}

EmbeddingSet load_embeddings(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_embeddings(in);
}

void write_embeddings(std::ostream& out, const EmbeddingSet& es) {
  out << "label";
  header_columns(out, "e", es.vectors.cols());
  for (std::size_t i = 0; i < es.size(); ++i) {
    out << es.labels[i];
    put_row(out, es.vectors.row(static_cast<Eigen::Index>(i)).transpose());
    out << '\n';
  }
}

std::vector<MixedSample> read_pairs(std::istream& in) {
  const Table t = read_table(in);
  const std::size_t ci = column(t, "class_i"), cj = column(t, "class_j");
  const std::vector<std::size_t> cols = indexed_columns(t, "e");
  if (cols.empty()) throw ParseError("need columns e0..e{d-1}", 1);
  const Eigen::MatrixXd e = gather(t, cols);
  std::vector<MixedSample> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    MixedSample s;
    s.embedding = e.row(static_cast<Eigen::Index>(r)).transpose();
    s.class_i = static_cast<std::size_t>(as_label(t.rows[r][ci], t.lines[r]));
    s.class_j = static_cast<std::size_t>(as_label(t.rows[r][cj], t.lines[r]));
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<MixedSample> load_pairs(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_pairs(in);
}

void write_pairs(std::ostream& out, const std::vector<MixedSample>& pairs) {
  out << "class_i,class_j";
  header_columns(out, "e", pairs.empty() ? 0 : pairs.front().embedding.size());
  for (const MixedSample& s : pairs) {
    out << s.class_i << ',' << s.class_j;
    put_row(out, s.embedding);
    out << '\n';
  }
}

std::vector<BenchmarkSample> read_mixed(std::istream& in) {
  const Table t = read_table(in);
  const std::size_t cs = column(t, "set"), ci = column(t, "class_i"), cj = column(t, "class_j");
  const std::size_t lh = column(t, "lambda_hat"), lt = column(t, "lambda_true");
  const std::vector<std::size_t> cols = indexed_columns(t, "e");
  const Eigen::MatrixXd e = gather(t, cols);
  std::vector<BenchmarkSample> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    BenchmarkSample s;
    s.x = e.row(static_cast<Eigen::Index>(r)).transpose();
    s.set = static_cast<std::size_t>(as_label(t.rows[r][cs], t.lines[r]));
    s.class_i = static_cast<std::size_t>(as_label(t.rows[r][ci], t.lines[r]));
    s.class_j = static_cast<std::size_t>(as_label(t.rows[r][cj], t.lines[r]));
    s.lambda_hat = t.rows[r][lh];
    s.lambda_true = t.rows[r][lt];
    if (!(s.lambda_hat >= 0.0 && s.lambda_hat <= 1.0)) throw ValidationError("lambda_hat outside [0, 1]", r);
    out.push_back(std::move(s));
  }
  return out;
}

void write_mixed(std::ostream& out, const std::vector<BenchmarkSample>& mixed) {
  out << "set,class_i,class_j,lambda_hat,lambda_true";
  header_columns(out, "e", mixed.empty() ? 0 : mixed.front().x.size());
  for (const BenchmarkSample& s : mixed) {
    out << s.set << ',' << s.class_i << ',' << s.class_j << ',';
    put(out, s.lambda_hat);
    out << ',';
    put(out, s.lambda_true);
    put_row(out, s.x);
    out << '\n';
  }
}

void save_benchmark(const std::filesystem::path& dir, const Benchmark& b) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_out(dir / "mixed.csv");
    write_mixed(out, b.mixed);
  }
  {
    auto out = open_out(dir / "onehot.csv");
    write_embeddings(out, b.onehot);
  }
  if (b.validation.size() > 0) {
    auto out = open_out(dir / "validation.csv");
    write_embeddings(out, b.validation);
  }
}

Benchmark load_benchmark(const std::filesystem::path& dir) {
  Benchmark b;
  {
    auto in = open_in(dir / "mixed.csv");
    b.mixed = read_mixed(in);
  }
  b.onehot = load_embeddings(dir / "onehot.csv");
  if (std::filesystem::exists(dir / "validation.csv")) b.validation = load_embeddings(dir / "validation.csv");
  b.classes = b.onehot.classes();
  for (const BenchmarkSample& s : b.mixed) b.classes = std::max({b.classes, s.class_i + 1, s.class_j + 1});
  return b;
}

}  // namespace calib::io
