#include "empathy/features.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace empathy {

namespace {

constexpr int kPrecision = 9;

void put_number(std::string& out, double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, kPrecision);
  out.append(buf, res.ptr);
}

double parse_number(std::string_view text, const std::filesystem::path& path, std::size_t line) {
  double v = 0.0;
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    const std::string s(text);
    if (s == "nan" || s == "inf" || s == "-inf") return std::stod(s);
    throw ValidationError(path.string() + ":" + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

Label parse_label_or_throw(std::string_view text, const std::filesystem::path& path,
                           std::size_t line) {
  const auto label = parse_label(text);
  if (!label)
    throw ValidationError(path.string() + ":" + std::to_string(line) + ": unknown label '" +
                          std::string(text) + "'");
  return *label;
}

}  // namespace

void FeatureTable::append(const std::string& id, Label label, double duration,
                          std::span<const double> values) {
  if (values.size() != cols())
    throw ValidationError("feature vector of size " + std::to_string(values.size()) +
                          " does not match schema '" + (schema ? schema->id : "") + "' of size " +
                          std::to_string(cols()));
  const auto r = static_cast<Eigen::Index>(rows());
  if (X.cols() != static_cast<Eigen::Index>(cols())) X.resize(0, static_cast<Eigen::Index>(cols()));
  X.conservativeResize(r + 1, Eigen::NoChange);
  for (std::size_t j = 0; j < values.size(); ++j) X(r, static_cast<Eigen::Index>(j)) = values[j];
  ids.push_back(id);
  labels.push_back(label);
  durations.push_back(duration);
}

FeatureTable FeatureTable::subset(std::span<const std::size_t> rows_) const {
  FeatureTable out;
  out.schema = schema;
  out.X.resize(static_cast<Eigen::Index>(rows_.size()), X.cols());
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const std::size_t r = rows_[i];
    out.X.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(r));
    out.ids.push_back(ids[r]);
    out.labels.push_back(labels[r]);
    out.durations.push_back(durations[r]);
  }
  return out;
}

FeatureTable FeatureTable::select_columns(std::span<const std::size_t> columns) const {
  auto s = std::make_shared<FeatureSchema>();
  s->id = schema ? schema->id + "/selected" : "selected";
  FeatureTable out;
  out.ids = ids;
  out.labels = labels;
  out.durations = durations;
  out.X.resize(X.rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j] >= cols()) throw ValidationError("selected column out of range");
    s->names.push_back(schema->names[columns[j]]);
    out.X.col(static_cast<Eigen::Index>(j)) = X.col(static_cast<Eigen::Index>(columns[j]));
  }
  out.schema = std::move(s);
  return out;
}

std::vector<int> binary_targets(const FeatureTable& table) {
  std::vector<int> y;
  y.reserve(table.rows());
  for (Label l : table.labels) y.push_back(l == Label::Empathy ? 1 : -1);
  return y;
}

FeatureTable concat_rows(const FeatureTable& a, const FeatureTable& b) {
  if (a.rows() == 0) return b;
  if (b.rows() == 0) return a;
  if (a.cols() != b.cols()) throw ValidationError("cannot stack tables with different schemas");
  FeatureTable out = a;
  out.X.conservativeResize(a.X.rows() + b.X.rows(), Eigen::NoChange);
  out.X.bottomRows(b.X.rows()) = b.X;
  out.ids.insert(out.ids.end(), b.ids.begin(), b.ids.end());
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  out.durations.insert(out.durations.end(), b.durations.begin(), b.durations.end());
  return out;
}

void write_feature_csv(const FeatureTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  std::string line = "segment_id,label,duration_s";
  for (const auto& n : table.schema->names) line += "," + n;
  out << line << '\n';
  for (std::size_t i = 0; i < table.rows(); ++i) {
    line.clear();
    line += table.ids[i];
    line += ',';
    line += to_string(table.labels[i]);
    line += ',';
    put_number(line, table.durations[i]);
    for (Eigen::Index j = 0; j < table.X.cols(); ++j) {
      line += ',';
      put_number(line, table.X(static_cast<Eigen::Index>(i), j));
    }
    out << line << '\n';
  }
  if (!out) throw ValidationError("failed writing " + path.string());
}

FeatureTable read_feature_csv(const std::filesystem::path& path, const std::string& schema_id) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty feature file");
  auto header = split(line, ',');
  if (header.size() < 3 || header[0] != "segment_id" || header[1] != "label" ||
      header[2] != "duration_s")
    throw ValidationError(path.string() + ": header must start with segment_id,label,duration_s");
  auto schema = std::make_shared<FeatureSchema>();
  schema->id = schema_id.empty() ? path.stem().string() : schema_id;
  for (std::size_t j = 3; j < header.size(); ++j) schema->names.emplace_back(header[j]);

  FeatureTable table;
  table.schema = schema;
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cells = split(line, ',');
    if (cells.size() != header.size())
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(header.size()) + " columns");
    table.ids.emplace_back(cells[0]);
    table.labels.push_back(parse_label_or_throw(cells[1], path, lineno));
    table.durations.push_back(parse_number(cells[2], path, lineno));
    std::vector<double> v(schema->size());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = parse_number(cells[j + 3], path, lineno);
    rows.push_back(std::move(v));
  }
  table.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(schema->size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      table.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return table;
}

void write_sparse(const FeatureTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "#schema " << table.schema->id << ' ' << table.cols() << '\n';
  std::string line;
  for (std::size_t j = 0; j < table.cols(); ++j) {
    if (j) line += '\t';
    line += table.schema->names[j];
  }
  out << line << '\n';
  for (std::size_t i = 0; i < table.rows(); ++i) {
    line = table.ids[i];
    line += '\t';
    line += to_string(table.labels[i]);
    line += '\t';
    put_number(line, table.durations[i]);
    line += '\t';
    bool first = true;
    for (Eigen::Index j = 0; j < table.X.cols(); ++j) {
      const double v = table.X(static_cast<Eigen::Index>(i), j);
      if (v == 0.0) continue;
      if (!first) line += ' ';
      first = false;
      line += std::to_string(j);
      line += ':';
      put_number(line, v);
    }
    out << line << '\n';
  }
}

FeatureTable read_sparse(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("#schema ", 0) != 0)
    throw ValidationError(path.string() + ": missing #schema line");
  std::istringstream head(line.substr(8));
  auto schema = std::make_shared<FeatureSchema>();
  std::size_t dim = 0;
  head >> schema->id >> dim;
  std::getline(in, line);
  if (dim > 0)
    for (auto name : split(line, '\t')) schema->names.emplace_back(name);
  if (schema->names.size() != dim) throw ValidationError(path.string() + ": name count mismatch");

  FeatureTable table;
  table.schema = schema;
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;
  std::size_t lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cells = split(line, '\t');
    if (cells.size() != 4) throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": expected 4 fields");
    table.ids.emplace_back(cells[0]);
    table.labels.push_back(parse_label_or_throw(cells[1], path, lineno));
    table.durations.push_back(parse_number(cells[2], path, lineno));
    std::vector<std::pair<std::size_t, double>> entries;
    if (!cells[3].empty())
      for (auto item : split(cells[3], ' ')) {
        const auto colon = item.find(':');
        if (colon == std::string_view::npos)
          throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": expected index:value");
        std::size_t idx = 0;
        std::from_chars(item.data(), item.data() + colon, idx);
        if (idx >= dim) throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": index out of range");
        entries.emplace_back(idx, parse_number(item.substr(colon + 1), path, lineno));
      }
    rows.push_back(std::move(entries));
  }
  table.X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (auto [j, v] : rows[i]) table.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
  return table;
}

FeatureTable read_features(const std::filesystem::path& path) {
  return path.extension() == ".svec" ? read_sparse(path) : read_feature_csv(path);
}

void write_features(const FeatureTable& table, const std::filesystem::path& path) {
  if (path.extension() == ".svec")
    write_sparse(table, path);
  else
    write_feature_csv(table, path);
}

Normalizer Normalizer::fit(const Eigen::MatrixXd& X) {
  Normalizer n;
  const auto cols = static_cast<std::size_t>(X.cols());
  n.mean.resize(cols);
  n.scale.resize(cols);
  const double rows = static_cast<double>(X.rows());
  for (std::size_t j = 0; j < cols; ++j) {
    const auto col = X.col(static_cast<Eigen::Index>(j));
    const double m = rows > 0 ? col.mean() : 0.0;
    const double var = rows > 0 ? (col.array() - m).square().sum() / rows : 0.0;
    n.mean[j] = m;
    n.scale[j] = var > 1e-24 ? 1.0 / std::sqrt(var) : 1.0;
  }
  return n;
}

Normalizer Normalizer::identity(std::size_t dim) {
  Normalizer n;
  n.mean.assign(dim, 0.0);
  n.scale.assign(dim, 1.0);
  return n;
}

Eigen::MatrixXd Normalizer::apply(const Eigen::MatrixXd& X) const {
  if (empty()) return X;
  if (static_cast<std::size_t>(X.cols()) != mean.size())
    throw ValidationError("normalizer dimension mismatch");
  Eigen::MatrixXd out(X.rows(), X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j)
    out.col(j) = (X.col(j).array() - mean[static_cast<std::size_t>(j)]) * scale[static_cast<std::size_t>(j)];
  return out;
}

}  // namespace empathy
