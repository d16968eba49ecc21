#include "nyspec/io.hpp"

#include "nyspec/error.hpp"

#include "json.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace nyspec {

using nlohmann::json;

namespace {

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, Eigen::Index cols_hint = -1) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : std::max<Eigen::Index>(cols_hint, 0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j[static_cast<std::size_t>(i)].size()) != cols)
      throw ConfigError("model file: ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c)
      m(i, c) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

json model_to_json(const NystromModel& model) {
  json landmarks = {
      {"kind", landmark_kind_name(model.landmarks)},
      {"sampler", model.landmarks.sampler},
      {"seed", model.landmarks.seed},
  };
  if (model.landmarks.is_virtual()) {
    landmarks["coordinates"] = matrix_to_json(model.landmarks.coordinates);
    landmarks["support"] = model.landmarks.support;
    landmarks["support_cluster"] = model.landmarks.support_cluster;
  } else {
    landmarks["indices"] = model.landmarks.indices;
  }
  std::vector<double> eigvals(model.landmark_eigvals.data(), model.landmark_eigvals.data() + model.landmark_eigvals.size());
  return {
      {"rank", model.rank},
      {"kernel", {{"kind", to_string(model.spec.kind)}, {"bandwidth", model.spec.bandwidth}}},
      {"landmarks", std::move(landmarks)},
      {"landmark_eigvals", std::move(eigvals)},
      {"landmark_eigvecs", matrix_to_json(model.landmark_eigvecs)},
      {"extended_eigvecs", matrix_to_json(model.extended_eigvecs)},
  };
}

NystromModel model_from_json(const json& j) {
  NystromModel model;
  model.rank = j.at("rank").get<int>();
  model.spec.kind = parse_kernel_kind(j.at("kernel").at("kind").get<std::string>());
  model.spec.bandwidth = j.at("kernel").at("bandwidth").get<double>();
  const json& l = j.at("landmarks");
  const std::string kind = l.at("kind").get<std::string>();
  model.landmarks.sampler = l.at("sampler").get<std::string>();
  model.landmarks.seed = l.at("seed").get<std::uint64_t>();
  if (kind == "virtual") {
    model.landmarks.kind = LandmarkKind::virtual_points;
    model.landmarks.coordinates = matrix_from_json(l.at("coordinates"));
    model.landmarks.support = l.value("support", std::vector<PointId>{});
    model.landmarks.support_cluster = l.value("support_cluster", std::vector<int>{});
  } else if (kind == "indices") {
    model.landmarks.indices = l.at("indices").get<std::vector<PointId>>();
  } else {
    throw ConfigError("model file: unknown landmark kind '" + kind + "'");
  }
  const auto eig = j.at("landmark_eigvals").get<std::vector<double>>();
  model.landmark_eigvals = Eigen::Map<const Vector>(eig.data(), static_cast<Eigen::Index>(eig.size()));
  model.landmark_eigvecs = matrix_from_json(j.at("landmark_eigvecs"), model.rank);
  model.extended_eigvecs = matrix_from_json(j.at("extended_eigvecs"), model.rank);
  return model;
}

} // namespace

std::string landmark_kind_name(const LandmarkSet& landmarks) { return landmarks.is_virtual() ? "virtual" : "indices"; }

void save_models(const std::filesystem::path& path, const ModelBundle& bundle) {
  json doc = {{"format", model_format_tag}, {"blocks", bundle.blocks}, {"weights", bundle.weights}};
  json models = json::array();
  for (const NystromModel& m : bundle.models)
    models.push_back(model_to_json(m));
  doc["models"] = std::move(models);
  std::ofstream out(path);
  if (!out)
    throw Error("cannot write model file " + path.string());
  out << doc.dump(1) << '\n';
}

ModelBundle load_models(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open model file " + path.string());
  ModelBundle bundle;
  try {
    json doc;
    in >> doc;
    if (doc.at("format").get<std::string>() != model_format_tag)
      throw ConfigError("model file: unsupported format tag '" + doc.at("format").get<std::string>() + "'");
    bundle.blocks = doc.value("blocks", std::string("affinity"));
    bundle.weights = doc.at("weights").get<std::vector<double>>();
    for (const json& m : doc.at("models"))
      bundle.models.push_back(model_from_json(m));
  } catch (const json::exception& e) {
    throw ConfigError("model file " + path.string() + ": " + e.what());
  }
  return bundle;
}

std::string format_real(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  return buf;
}

const std::vector<std::string>& record_columns() {
  static const std::vector<std::string> columns = {
      "dataset",         "sampler",
      "fraction",        "repetition",
      "seed",            "status",
      "accuracy",        "frobenius_error",
      "relative_frobenius_error", "switch_branch",
      "message",         "wall_time_ms",
  };
  return columns;
}

namespace {

// Free text cannot carry the delimiter or line breaks.
std::string clean(std::string text) {
  for (char& c : text) {
    if (c == ',')
      c = ';';
    else if (c == '\n' || c == '\r')
      c = ' ';
    else if (c == '"')
      c = '\'';
  }
  return text;
}

std::string optional_real(const std::optional<double>& v) { return v ? format_real(*v) : std::string(); }

std::optional<double> parse_optional(const std::string& text) {
  if (text.empty())
    return std::nullopt;
  return std::stod(text);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ','))
    cells.push_back(cell);
  if (!line.empty() && line.back() == ',')
    cells.emplace_back();
  return cells;
}

} // namespace

void write_records_csv(std::ostream& out, const std::vector<ResultRecord>& records) {
  const auto& cols = record_columns();
  for (std::size_t i = 0; i < cols.size(); ++i)
    out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const ResultRecord& r : records) {
    out << clean(r.dataset) << ',' << clean(r.sampler) << ',' << format_real(r.fraction) << ',' << r.repetition << ','
        << r.seed << ',' << (r.ok ? "ok" : "failed") << ',' << optional_real(r.accuracy) << ','
        << optional_real(r.frobenius_error) << ',' << optional_real(r.relative_frobenius_error) << ','
        << clean(r.switch_branch) << ',' << clean(r.message) << ',' << format_real(r.wall_time_ms) << '\n';
  }
}

std::vector<ResultRecord> read_records_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line))
    throw ParseError("records.csv: missing header", 0, 0);
  if (split_csv(line) != record_columns())
    throw ParseError("records.csv: unexpected header", 0, 0);
  std::vector<ResultRecord> records;
  long row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty())
      continue;
    const auto cells = split_csv(line);
    if (cells.size() != record_columns().size())
      throw RaggedRows("records.csv: row " + std::to_string(row) + " has " + std::to_string(cells.size()) + " cells");
    try {
      ResultRecord r;
      r.dataset = cells[0];
      r.sampler = cells[1];
      r.fraction = std::stod(cells[2]);
      r.repetition = std::stoi(cells[3]);
      r.seed = std::stoull(cells[4]);
      r.ok = cells[5] == "ok";
      r.accuracy = parse_optional(cells[6]);
      r.frobenius_error = parse_optional(cells[7]);
      r.relative_frobenius_error = parse_optional(cells[8]);
      r.switch_branch = cells[9];
      r.message = cells[10];
      r.wall_time_ms = std::stod(cells[11]);
      records.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw ParseError("records.csv: malformed value in row " + std::to_string(row), row, 0);
    }
  }
  return records;
}

void write_aggregates_csv(std::ostream& out, const ExperimentResult& result) {
  out << "sampler,fraction,count,failures,mean_accuracy,std_accuracy,mean_frobenius_error,std_frobenius_error,"
         "mean_relative_frobenius_error,std_relative_frobenius_error,mean_wall_time_ms\n";
  auto row = [&](const Summary& s) {
    out << clean(s.sampler) << ',' << (s.fraction ? format_real(*s.fraction) : std::string("all")) << ',' << s.count
        << ',' << s.failures << ',' << format_real(s.mean_accuracy) << ',' << format_real(s.std_accuracy) << ','
        << optional_real(s.mean_frobenius) << ',' << optional_real(s.std_frobenius) << ','
        << optional_real(s.mean_relative_frobenius) << ',' << optional_real(s.std_relative_frobenius) << ','
        << format_real(s.mean_wall_time_ms) << '\n';
  };
  for (const Summary& s : result.per_fraction)
    row(s);
  for (const Summary& s : result.pooled)
    row(s);
}

void write_error_curve_csv(std::ostream& out, const ExperimentResult& result) {
  out << "sampler,fraction,reps,failures,mean_frobenius_error,std_frobenius_error,mean_relative_frobenius_error,"
         "std_relative_frobenius_error\n";
  for (const Summary& s : result.per_fraction) {
    out << clean(s.sampler) << ',' << format_real(s.fraction.value_or(0.0)) << ',' << s.count << ',' << s.failures
        << ',' << optional_real(s.mean_frobenius) << ',' << optional_real(s.std_frobenius) << ','
        << optional_real(s.mean_relative_frobenius) << ',' << optional_real(s.std_relative_frobenius) << '\n';
  }
}

} // namespace nyspec
