#pragma once

#include "nyspec/eval.hpp"
#include "nyspec/nystrom.hpp"
#include "nyspec/sampling.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace nyspec {

/// Format tag written into every model file.
inline constexpr const char* model_format_tag = "nyspec-model/1";

/// Models plus mixture weights (a single model has weight 1).
struct ModelBundle {
  std::vector<NystromModel> models;
  std::vector<double> weights;
  /// What the eigenpairs decompose: "affinity" (S) or "normalized-affinity"
  /// (D^{-1/2} S D^{-1/2} with block-estimated degrees).
  std::string blocks = "affinity";
};

void save_models(const std::filesystem::path& path, const ModelBundle& bundle);
ModelBundle load_models(const std::filesystem::path& path);

/// Six significant digits, the float contract of every CSV we write.
std::string format_real(double value);

/// Column order of records.csv. wall_time_ms is last and is the only column
/// outside the byte-reproducibility contract.
const std::vector<std::string>& record_columns();

void write_records_csv(std::ostream& out, const std::vector<ResultRecord>& records);
std::vector<ResultRecord> read_records_csv(std::istream& in);
void write_aggregates_csv(std::ostream& out, const ExperimentResult& result);
/// Per (sampler, fraction) Frobenius error table for error-curve.
void write_error_curve_csv(std::ostream& out, const ExperimentResult& result);

std::string landmark_kind_name(const LandmarkSet& landmarks);

} // namespace nyspec
