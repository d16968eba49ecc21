#pragma once

#include "nyspec/kernel.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace nyspec {

/// Column reference by header name or zero-based index.
using ColumnRef = std::variant<std::string, int>;

struct DatasetManifest {
  std::filesystem::path path;
  std::string format = "csv";
  std::optional<ColumnRef> label_column;
  char delimiter = ',';
  bool has_header = true;
  std::optional<std::vector<ColumnRef>> feature_columns;
  Scaling scaling = Scaling::none;
  std::string name;
  std::optional<int> expected_rows;
  std::optional<int> expected_classes;
};

/// Reads a JSON manifest; a relative `path` is resolved against the
/// manifest's directory.
DatasetManifest read_manifest(const std::filesystem::path& manifest_path);

/// Manifest for a bare CSV: header row, label in the last column.
DatasetManifest default_manifest(const std::filesystem::path& csv_path);

/// `.json` paths are read as manifests, anything else as a bare CSV.
DatasetManifest resolve_manifest(const std::filesystem::path& path);

/// Features are parsed as reals in column order; labels are factor-encoded
/// in order of first appearance. Mismatches against expected_rows /
/// expected_classes are reported in `warnings`.
FeatureMatrix load_dataset(const DatasetManifest& manifest, std::vector<std::string>* warnings = nullptr);

} // namespace nyspec
