#include "nyspec/dataset.hpp"

#include "nyspec/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace nyspec {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  std::string out(s.substr(b, e - b + 1));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"')
    out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split(const std::string& line, char delimiter) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
      cell.push_back(c);
    } else if (c == delimiter && !quoted) {
      cells.push_back(trim(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  cells.push_back(trim(cell));
  return cells;
}

bool parse_real(const std::string& text, double& value) {
  if (text.empty())
    return false;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (*first == '+')
    ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc() && ptr == last && std::isfinite(value);
}

ColumnRef column_ref_from_json(const nlohmann::json& j) {
  if (j.is_number_integer())
    return j.get<int>();
  if (j.is_string())
    return j.get<std::string>();
  throw ConfigError("manifest: column references must be names or indices");
}

int resolve_column(const ColumnRef& ref, const std::vector<std::string>& header, std::size_t width) {
  if (const int* idx = std::get_if<int>(&ref)) {
    const int i = *idx < 0 ? static_cast<int>(width) + *idx : *idx;
    if (i < 0 || i >= static_cast<int>(width))
      throw ConfigError("manifest: column index " + std::to_string(*idx) + " out of range");
    return i;
  }
  const std::string& name = std::get<std::string>(ref);
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end())
    throw ConfigError("manifest: no column named '" + name + "'");
  return static_cast<int>(it - header.begin());
}

} // namespace

DatasetManifest read_manifest(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in)
    throw ConfigError("cannot open manifest " + manifest_path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("manifest " + manifest_path.string() + ": " + e.what());
  }

  DatasetManifest m;
  try {
    std::filesystem::path p = j.at("path").get<std::string>();
    m.path = p.is_absolute() ? p : manifest_path.parent_path() / p;
    m.format = j.value("format", std::string("csv"));
    if (m.format != "csv")
      throw ConfigError("manifest: unsupported format '" + m.format + "'");
    if (j.contains("label_column") && !j["label_column"].is_null())
      m.label_column = column_ref_from_json(j["label_column"]);
    std::string delim = j.value("delimiter", std::string(","));
    if (delim == "\\t")
      delim = "\t";
    if (delim.size() != 1)
      throw ConfigError("manifest: delimiter must be a single character");
    m.delimiter = delim[0];
    m.has_header = j.value("has_header", true);
    if (j.contains("feature_columns") && !j["feature_columns"].is_null()) {
      std::vector<ColumnRef> cols;
      for (const auto& c : j["feature_columns"])
        cols.push_back(column_ref_from_json(c));
      m.feature_columns = std::move(cols);
    }
    m.scaling = parse_scaling(j.value("scaling", std::string("none")));
    m.name = j.value("name", manifest_path.stem().string());
    if (j.contains("expected_rows"))
      m.expected_rows = j["expected_rows"].get<int>();
    if (j.contains("expected_classes"))
      m.expected_classes = j["expected_classes"].get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("manifest " + manifest_path.string() + ": " + e.what());
  }
  return m;
}

DatasetManifest default_manifest(const std::filesystem::path& csv_path) {
  DatasetManifest m;
  m.path = csv_path;
  m.label_column = ColumnRef{-1};
  m.name = csv_path.stem().string();
  return m;
}

DatasetManifest resolve_manifest(const std::filesystem::path& path) {
  return path.extension() == ".json" ? read_manifest(path) : default_manifest(path);
}

FeatureMatrix load_dataset(const DatasetManifest& manifest, std::vector<std::string>* warnings) {
  std::ifstream in(manifest.path);
  if (!in)
    throw ConfigError("cannot open dataset " + manifest.path.string());

  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<long> line_numbers;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty())
      continue;
    auto cells = split(line, manifest.delimiter);
    if (manifest.has_header && header.empty()) {
      header = std::move(cells);
      continue;
    }
    rows.push_back(std::move(cells));
    line_numbers.push_back(line_no);
  }
  if (rows.empty())
    throw EmptyDataset("dataset " + manifest.path.string() + " has no data rows");

  const std::size_t width = header.empty() ? rows.front().size() : header.size();
  for (std::size_t r = 0; r < rows.size(); ++r)
    if (rows[r].size() != width)
      throw RaggedRows("row " + std::to_string(r + 1) + " (line " + std::to_string(line_numbers[r]) + ") has " +
                       std::to_string(rows[r].size()) + " cells, expected " + std::to_string(width));

  std::optional<int> label_col;
  if (manifest.label_column)
    label_col = resolve_column(*manifest.label_column, header, width);
  std::vector<int> feature_cols;
  if (manifest.feature_columns) {
    for (const ColumnRef& ref : *manifest.feature_columns) {
      const int c = resolve_column(ref, header, width);
      if (label_col && c == *label_col)
        throw ConfigError("manifest: label column listed as a feature");
      feature_cols.push_back(c);
    }
  } else {
    for (int c = 0; c < static_cast<int>(width); ++c)
      if (!label_col || c != *label_col)
        feature_cols.push_back(c);
  }
  if (feature_cols.empty())
    throw ConfigError("manifest selects no feature columns");

  FeatureMatrix data;
  data.name = manifest.name.empty() ? manifest.path.stem().string() : manifest.name;
  data.points.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(feature_cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t f = 0; f < feature_cols.size(); ++f) {
      const int c = feature_cols[f];
      double value = 0.0;
      if (!parse_real(rows[r][static_cast<std::size_t>(c)], value)) {
        std::ostringstream msg;
        msg << "non-numeric feature at row " << r + 1 << ", column " << c + 1;
        if (!header.empty())
          msg << " ('" << header[static_cast<std::size_t>(c)] << "')";
        msg << ": '" << rows[r][static_cast<std::size_t>(c)] << "' (line " << line_numbers[r] << ")";
        throw ParseError(msg.str(), static_cast<long>(r + 1), c + 1);
      }
      data.points(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(f)) = value;
    }
  }

  if (label_col) {
    std::map<std::string, int> codes;
    std::vector<int> labels;
    labels.reserve(rows.size());
    for (const auto& row : rows) {
      const std::string& raw = row[static_cast<std::size_t>(*label_col)];
      const auto [it, inserted] = codes.try_emplace(raw, static_cast<int>(codes.size()));
      labels.push_back(it->second);
    }
    data.labels = std::move(labels);
  }

  auto warn = [&](const std::string& text) {
    if (warnings)
      warnings->push_back(text);
  };
  if (manifest.expected_rows && *manifest.expected_rows != data.size())
    warn("expected " + std::to_string(*manifest.expected_rows) + " rows, read " + std::to_string(data.size()));
  if (manifest.expected_classes && *manifest.expected_classes != data.class_count())
    warn("expected " + std::to_string(*manifest.expected_classes) + " classes, read " +
         std::to_string(data.class_count()));

  data = apply_scaling(std::move(data), manifest.scaling);
  data.validate();
  return data;
}

} // namespace nyspec
