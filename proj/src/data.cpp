#include "hgda/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace hgda {

namespace {

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ": line " + std::to_string(line);
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return in;
}

}  // namespace

FeatureMatrix::FeatureMatrix(Matrix values) : values_(std::move(values)) {
  if (values_.rows() < 1 || values_.cols() < 1)
    throw InputError("feature matrix must have at least one row and one column");
  require_finite(values_, "feature matrix");
}

FeatureMatrix FeatureMatrix::select_rows(const std::vector<Eigen::Index>& indices) const {
  Matrix out(static_cast<Eigen::Index>(indices.size()), values_.cols());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] < 0 || indices[r] >= values_.rows())
      throw InputError("row index out of range");
    out.row(static_cast<Eigen::Index>(r)) = values_.row(indices[r]);
  }
  return FeatureMatrix(std::move(out));
}

LabeledDataset::LabeledDataset(FeatureMatrix features, Labels labels)
    : features_(std::move(features)), labels_(std::move(labels)) {
  if (static_cast<Eigen::Index>(labels_.size()) != features_.rows())
    throw InputError("label count mismatch: " + std::to_string(labels_.size()) +
                     " labels for " + std::to_string(features_.rows()) + " rows");
  num_classes_ = validate_labels(labels_);
}

void require_finite(const Matrix& m, const std::string& what) {
  if (!m.allFinite()) throw NumericalError("non-finite value in " + what);
}

FeatureMatrix load_features(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const auto comma = body.find(',', start);
      const auto token =
          trim(body.substr(start, comma == std::string_view::npos ? body.npos : comma - start));
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
      if (token.empty() || ec != std::errc() || ptr != token.data() + token.size())
        throw InputError(where(path, line_no) + ": non-numeric token '" + std::string(token) + "'");
      if (!std::isfinite(v))
        throw InputError(where(path, line_no) + ": non-finite value");
      row.push_back(v);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw InputError(path.string() + ": ragged row at line " + std::to_string(line_no));
    rows.push_back(std::move(row));
  }
  if (in.bad()) throw InputError("read failure on " + path.string());
  if (rows.empty()) throw InputError(path.string() + ": empty file");

  Matrix values(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return FeatureMatrix(std::move(values));
}

void write_features(const std::filesystem::path& path, const Matrix& values) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  char buf[40];
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", values(i, j));
      if (j) out << ',';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw InputError("write failure on " + path.string());
}

int validate_labels(const Labels& labels) {
  if (labels.empty()) throw InputError("empty label vector");
  const int max_label = *std::max_element(labels.begin(), labels.end());
  std::vector<bool> seen(static_cast<std::size_t>(std::max(max_label, 0)) + 1, false);
  for (const int y : labels) {
    if (y <= 0) throw InputError("label " + std::to_string(y) + " is not positive");
    seen[static_cast<std::size_t>(y)] = true;
  }
  for (int c = 1; c <= max_label; ++c)
    if (!seen[static_cast<std::size_t>(c)])
      throw InputError("class " + std::to_string(c) + " absent");
  return max_label;
}

Labels load_labels(const std::filesystem::path& path, Eigen::Index num_rows, int& num_classes) {
  auto in = open_or_throw(path);
  Labels labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty()) continue;
    int y = 0;
    const auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), y);
    if (ec != std::errc() || ptr != body.data() + body.size())
      throw InputError(where(path, line_no) + ": not an integer label '" + std::string(body) + "'");
    if (y <= 0) throw InputError(where(path, line_no) + ": label " + std::to_string(y) + " <= 0");
    labels.push_back(y);
  }
  if (static_cast<Eigen::Index>(labels.size()) != num_rows)
    throw InputError(path.string() + ": count mismatch (" + std::to_string(labels.size()) +
                     " labels, expected " + std::to_string(num_rows) + ")");
  num_classes = validate_labels(labels);
  return labels;
}

void write_labels(const std::filesystem::path& path, const Labels& labels) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  for (const int y : labels) out << y << '\n';
}

ClassIndexSets class_index_sets(const Labels& labels, int num_classes) {
  if (num_classes < 1) throw InputError("need at least one class");
  ClassIndexSets sets;
  sets.groups.resize(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y < 1 || y > num_classes)
      throw InputError("label " + std::to_string(y) + " outside 1.." + std::to_string(num_classes));
    sets.groups[static_cast<std::size_t>(y - 1)].push_back(static_cast<Eigen::Index>(i));
  }
  return sets;
}

}  // namespace hgda
