#include "nyspec/cli.hpp"

#include "nyspec/dataset.hpp"
#include "nyspec/error.hpp"
#include "nyspec/eval.hpp"
#include "nyspec/io.hpp"
#include "nyspec/spectral.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <thread>

namespace nyspec {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

struct DataArgs {
  std::string data;
  std::string kernel = "cosine";
  double bandwidth = 1.0;
  std::string scale;
  std::string zero_vector = "similarity_zero";
};

void add_data_options(CLI::App* cmd, DataArgs& a) {
  cmd->add_option("--data", a.data, "Dataset manifest (.json) or CSV with a header and the label last")->required();
  cmd->add_option("--kernel", a.kernel, "Similarity kernel: cosine | rbf")->capture_default_str();
  cmd->add_option("--bandwidth", a.bandwidth, "rbf bandwidth")->capture_default_str();
  cmd->add_option("--scale", a.scale, "Feature scaling: none | standardize | minmax (overrides the manifest)");
  cmd->add_option("--zero-vector", a.zero_vector, "Cosine of a zero vector: similarity_zero | error")
      ->capture_default_str();
}

KernelSpec kernel_from(const DataArgs& a) {
  KernelSpec spec;
  try {
    spec.kind = parse_kernel_kind(a.kernel);
  } catch (const ConfigError&) {
    throw ConfigError("--kernel: expected cosine or rbf, got '" + a.kernel + "'");
  }
  spec.bandwidth = a.bandwidth;
  if (spec.kind == KernelKind::rbf && !(a.bandwidth > 0.0))
    throw ConfigError("--bandwidth must be positive");
  if (a.zero_vector == "similarity_zero")
    spec.zero_vector_policy = ZeroVectorPolicy::similarity_zero;
  else if (a.zero_vector == "error")
    spec.zero_vector_policy = ZeroVectorPolicy::error;
  else
    throw ConfigError("--zero-vector: expected similarity_zero or error");
  return spec;
}

DatasetManifest manifest_from(const DataArgs& a) {
  DatasetManifest m;
  try {
    m = resolve_manifest(a.data);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("--data: ") + e.what());
  }
  if (!a.scale.empty()) {
    try {
      m.scaling = parse_scaling(a.scale);
    } catch (const ConfigError&) {
      throw ConfigError("--scale: expected none, standardize or minmax, got '" + a.scale + "'");
    }
  }
  return m;
}

FeatureMatrix load(const DatasetManifest& manifest, std::ostream& err) {
  std::vector<std::string> warnings;
  FeatureMatrix data;
  try {
    data = load_dataset(manifest, &warnings);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("--data: ") + e.what());
  }
  for (const auto& w : warnings)
    err << "warning: " << data.name << ": " << w << '\n';
  return data;
}

fs::path sibling(const fs::path& out, const std::string& from_ext, const std::string& to_suffix) {
  if (out.extension() == from_ext) {
    fs::path p = out;
    return p.replace_extension(to_suffix);
  }
  return fs::path(out.string() + to_suffix);
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path())
    fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out)
    throw Error("cannot write " + path.string());
  return out;
}

json kernel_json(const KernelSpec& spec) {
  json j = {{"kind", to_string(spec.kind)}};
  if (spec.kind == KernelKind::rbf)
    j["bandwidth"] = spec.bandwidth;
  return j;
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

json diagnostic_json(const SpectrumDiagnostic& d) {
  return {
      {"subsample_size", d.subsample.size()},
      {"eigenvalues", to_std(d.eigenvalues)},
      {"lambda2", d.lambda2},
      {"tail_term", d.tail_term},
      {"use_cms3", d.use_cms3},
      {"branch", d.use_cms3 ? "cms3" : "ms3"},
      {"similarity_spectrum",
       {{"eigenvalues", to_std(d.similarity_eigenvalues)},
        {"lambda2", d.similarity_lambda2},
        {"tail_term", d.similarity_tail_term},
        {"use_cms3", d.similarity_use_cms3}}},
  };
}

// ---------------------------------------------------------------- cluster

struct ClusterArgs {
  DataArgs data;
  int k = 0;
  std::string sampler = "rs";
  double fraction = 0.0;
  int r = 0;
  double gamma = 0.1;
  double sm_fraction = 0.0;
  std::uint64_t seed = 0;
  bool exact = false;
  int ensemble_p = 0;
  std::string save_model;
  std::string out;
  std::string embedding = "laplacian";
  bool no_row_normalize = false;
  bool strict_bound = false;
};

int cmd_cluster(const ClusterArgs& a, std::ostream& out, std::ostream& err) {
  // Flag validation first; nothing is computed before this block passes.
  const KernelSpec spec = kernel_from(a.data);
  SpectralOptions options;
  options.spec = spec;
  options.seed = a.seed;
  options.row_normalize = !a.no_row_normalize;
  try {
    options.embedding = parse_embedding_kind(a.embedding);
  } catch (const ConfigError&) {
    throw ConfigError("--embedding: expected laplacian or affinity");
  }
  options.mode = a.exact ? ClusterMode::exact : ClusterMode::nystrom;
  if (a.exact && !a.save_model.empty())
    throw ConfigError("--save-model needs a Nystrom run; drop --exact");
  if (!a.exact) {
    if (!(a.fraction > 0.0 && a.fraction <= 1.0))
      throw ConfigError("--fraction must lie in (0, 1] (required unless --exact)");
    const auto parsed = parse_sampler_list({a.sampler}, a.ensemble_p > 0 ? std::vector<int>{a.ensemble_p} : std::vector<int>{});
    if (parsed.size() != 1)
      throw ConfigError("--sampler must name a single sampler");
    options.sampler = parsed.front().base;
    options.ensemble_p = parsed.front().ensemble_p;
    options.sampling.gamma = a.gamma;
    options.sampling.r = a.r;
    if (a.sm_fraction > 0.0)
      options.sampling.sm_fraction = a.sm_fraction;
    options.sampling.strict_alg1_bound = a.strict_bound;
    if (!(a.gamma > 0.0 && a.gamma <= 1.0))
      throw ConfigError("--gamma must lie in (0, 1]");
  }
  const DatasetManifest manifest = manifest_from(a.data);

  const auto start = Clock::now();
  const FeatureMatrix data = load(manifest, err);
  const double load_ms = ms_since(start);
  const int k = a.k > 0 ? a.k : data.class_count();
  if (k < 2)
    throw ConfigError("--k is required when the dataset has fewer than 2 classes");
  if (!a.exact) {
    if (a.fraction * static_cast<double>(data.size()) < 2.0 - 1e-9)
      throw ConfigError("--fraction yields fewer than 2 landmarks for n=" + std::to_string(data.size()));
    options.sampling.m = landmark_count(a.fraction, data.size());
    if (a.r > 0 && (a.r < options.sampling.m || a.r > data.size()))
      throw ConfigError("--r must satisfy m <= r <= n (m=" + std::to_string(options.sampling.m) + ")");
  }

  const auto run_start = Clock::now();
  const SpectralResult result = spectral_cluster(data, k, options);
  const double run_ms = ms_since(run_start);

  {
    std::ofstream labels = open_out(a.out);
    labels << "point_index,label\n";
    for (std::size_t i = 0; i < result.assignment.labels.size(); ++i)
      labels << i << ',' << result.assignment.labels[i] << '\n';
  }

  json summary = {
      {"command", "cluster"},
      {"dataset", {{"name", data.name}, {"path", manifest.path.string()}, {"n", data.size()}, {"d", data.dim()},
                   {"scaling", to_string(manifest.scaling)}}},
      {"k", k},
      {"mode", a.exact ? "exact" : "nystrom"},
      {"pipeline", result.assignment.pipeline},
      {"seed", a.seed},
      {"kernel", kernel_json(spec)},
      {"embedding", to_string(options.embedding)},
      {"row_normalize", options.row_normalize},
      {"inertia", result.assignment.inertia},
      {"kmeans_iterations", result.assignment.iterations},
      {"timings_ms", {{"load", load_ms}, {"cluster", run_ms}, {"total", ms_since(start)}}},
      {"warnings", result.warnings},
  };
  if (!a.exact) {
    summary["sampler"] = a.sampler;
    summary["fraction"] = a.fraction;
    summary["m"] = options.sampling.m;
    summary["gamma"] = options.sampling.gamma;
    summary["r"] = options.sampling.resolved_r(data.size());
    if (options.ensemble_p > 0)
      summary["ensemble_p"] = options.ensemble_p;
    json landmarks = json::array();
    for (const LandmarkSet& l : result.landmarks)
      landmarks.push_back({{"kind", landmark_kind_name(l)}, {"sampler", l.sampler}, {"count", l.size()}});
    summary["landmarks"] = std::move(landmarks);
  }
  if (result.diagnostic) {
    summary["switch_branch"] = result.diagnostic->use_cms3 ? "cms3" : "ms3";
    summary["spectrum"] = diagnostic_json(*result.diagnostic);
  }
  if (data.labels)
    summary["accuracy"] = clustering_accuracy(result.assignment, *data.labels);

  if (!a.save_model.empty()) {
    ModelBundle bundle{result.models, result.weights,
                       options.embedding == EmbeddingKind::laplacian ? "normalized-affinity" : "affinity"};
    save_models(a.save_model, bundle);
    summary["model"] = a.save_model;
  }

  open_out(sibling(a.out, ".csv", ".json")) << summary.dump(2) << '\n';
  out << "clustered " << data.size() << " points into " << k << " clusters";
  if (summary.contains("accuracy"))
    out << " (accuracy " << format_real(summary["accuracy"].get<double>()) << ")";
  out << '\n';
  return exit_ok;
}

// -------------------------------------------------------------- benchmark

struct SweepArgs {
  DataArgs data;
  std::vector<std::string> samplers;
  std::vector<double> fractions{0.02, 0.04, 0.06, 0.08, 0.10};
  int reps = 10;
  std::vector<int> ensemble_p;
  std::uint64_t seed = 0;
  std::string out;
  int jobs = 0;
  double gamma = 0.1;
  int k = 0;
  long frobenius_max_n = 3000;
  bool no_frobenius = false;
  std::string embedding = "laplacian";
  bool no_row_normalize = false;
  bool strict_bound = false;
};

void add_sweep_options(CLI::App* cmd, SweepArgs& a) {
  add_data_options(cmd, a.data);
  cmd->add_option("--samplers", a.samplers, "Comma-separated samplers: rs,ks,ss,ms3,cms3,cms3-tuned,ensemble-<base>")
      ->required()
      ->delimiter(',');
  cmd->add_option("--fractions", a.fractions, "Comma-separated sampling fractions")->delimiter(',')->capture_default_str();
  cmd->add_option("--reps", a.reps, "Repetitions per cell")->capture_default_str();
  cmd->add_option("--ensemble-p", a.ensemble_p, "Ensemble sizes for ensemble-* samplers (e.g. 2,5,10)")->delimiter(',');
  cmd->add_option("--seed", a.seed, "Base seed")->capture_default_str();
  cmd->add_option("--jobs", a.jobs, "Worker threads (default: available cores)");
  cmd->add_option("--gamma", a.gamma, "Greedy candidate-pool fraction")->capture_default_str();
  cmd->add_option("--strict-alg1-bound", a.strict_bound, "Sum over landmarks 0..i-2 in greedy steps");
}

ExperimentSpec experiment_from(const SweepArgs& a, const KernelSpec& spec) {
  ExperimentSpec e;
  e.samplers = parse_sampler_list(a.samplers, a.ensemble_p);
  e.fractions = a.fractions;
  e.repetitions = a.reps;
  e.base_seed = a.seed;
  e.gamma = a.gamma;
  e.k = a.k;
  e.spec = spec;
  e.strict_alg1_bound = a.strict_bound;
  e.frobenius_max_n = a.frobenius_max_n;
  e.record_frobenius = !a.no_frobenius;
  e.row_normalize = !a.no_row_normalize;
  try {
    e.embedding = parse_embedding_kind(a.embedding);
  } catch (const ConfigError&) {
    throw ConfigError("--embedding: expected laplacian or affinity");
  }
  e.jobs = a.jobs > 0 ? a.jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (a.reps < 1)
    throw ConfigError("--reps must be at least 1");
  if (!(a.gamma > 0.0 && a.gamma <= 1.0))
    throw ConfigError("--gamma must lie in (0, 1]");
  for (double f : a.fractions)
    if (!(f > 0.0 && f <= 1.0))
      throw ConfigError("--fractions values must lie in (0, 1]");
  return e;
}

json summary_json(const ExperimentResult& r) {
  json pooled = json::array();
  for (const Summary& s : r.pooled) {
    json row = {{"sampler", s.sampler}, {"count", s.count}, {"failures", s.failures},
                {"mean_accuracy", s.mean_accuracy}, {"std_accuracy", s.std_accuracy}};
    if (s.mean_frobenius) {
      row["mean_frobenius_error"] = *s.mean_frobenius;
      row["std_frobenius_error"] = *s.std_frobenius;
    }
    pooled.push_back(std::move(row));
  }
  return pooled;
}

int cmd_benchmark(const SweepArgs& a, std::ostream& out, std::ostream& err) {
  const KernelSpec spec = kernel_from(a.data);
  ExperimentSpec e = experiment_from(a, spec);
  const DatasetManifest manifest = manifest_from(a.data);
  const FeatureMatrix data = load(manifest, err);
  e.dataset_name = data.name;
  e.validate(data);

  const auto start = Clock::now();
  const ExperimentResult result = run_experiment(data, e);
  const double total_ms = ms_since(start);

  const fs::path dir(a.out);
  fs::create_directories(dir);
  {
    std::ofstream records = open_out(dir / "records.csv");
    write_records_csv(records, result.records);
    std::ofstream aggregates = open_out(dir / "aggregates.csv");
    write_aggregates_csv(aggregates, result);
  }

  std::vector<std::string> sampler_labels;
  for (const SamplerSpec& s : e.samplers)
    sampler_labels.push_back(s.label());
  json summary = {
      {"command", "benchmark"},
      {"dataset", {{"name", data.name}, {"n", data.size()}, {"d", data.dim()}, {"classes", data.class_count()},
                   {"scaling", to_string(manifest.scaling)}}},
      {"samplers", sampler_labels},
      {"fractions", e.fractions},
      {"repetitions", e.repetitions},
      {"base_seed", e.base_seed},
      {"gamma", e.gamma},
      {"kernel", kernel_json(spec)},
      {"embedding", to_string(e.embedding)},
      {"records", result.records.size()},
      {"pooled", summary_json(result)},
      {"total_time_ms", total_ms},
  };
  open_out(dir / "summary.json") << summary.dump(2) << '\n';

  int failures = 0;
  for (const ResultRecord& r : result.records)
    failures += r.ok ? 0 : 1;
  for (const Summary& s : result.pooled)
    out << s.sampler << ": accuracy " << format_real(s.mean_accuracy) << " +- " << format_real(s.std_accuracy)
        << " over " << s.count << " runs\n";
  if (failures > 0)
    err << "warning: " << failures << " cell(s) failed; see records.csv\n";
  return exit_ok;
}

// ----------------------------------------------------------- error-curve

int cmd_error_curve(const SweepArgs& a, std::ostream& out, std::ostream& err) {
  const KernelSpec spec = kernel_from(a.data);
  ExperimentSpec e = experiment_from(a, spec);
  e.cluster = false;
  e.record_frobenius = true;
  const DatasetManifest manifest = manifest_from(a.data);
  const FeatureMatrix data = load(manifest, err);
  if (data.size() > e.frobenius_max_n)
    throw ConfigError("error-curve is desk-scale only: n=" + std::to_string(data.size()) + " exceeds --frobenius-max-n");
  e.dataset_name = data.name;
  e.validate(data);
  const ExperimentResult result = run_experiment(data, e);
  std::ofstream table = open_out(a.out);
  write_error_curve_csv(table, result);
  for (const Summary& s : result.per_fraction)
    out << s.sampler << " @ " << format_real(s.fraction.value_or(0.0)) << ": frobenius "
        << format_real(s.mean_frobenius.value_or(0.0)) << " +- " << format_real(s.std_frobenius.value_or(0.0)) << '\n';
  return exit_ok;
}

// -------------------------------------------------------------- spectrum

struct SpectrumArgs {
  DataArgs data;
  double gamma = 0.1;
  double sm_fraction = 0.0;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_spectrum(const SpectrumArgs& a, std::ostream& out, std::ostream& err) {
  const KernelSpec spec = kernel_from(a.data);
  if (!(a.gamma > 0.0 && a.gamma <= 1.0))
    throw ConfigError("--gamma must lie in (0, 1]");
  if (a.sm_fraction < 0.0 || a.sm_fraction > 1.0)
    throw ConfigError("--sm-fraction must lie in (0, 1]");
  const DatasetManifest manifest = manifest_from(a.data);
  const FeatureMatrix data = load(manifest, err);

  SamplerConfig cfg;
  cfg.m = 2;
  cfg.gamma = a.gamma;
  if (a.sm_fraction > 0.0)
    cfg.sm_fraction = a.sm_fraction;
  cfg.seed = a.seed;
  const SpectrumDiagnostic d = spectrum_switch(data, cfg, spec);

  json doc = diagnostic_json(d);
  doc["command"] = "spectrum";
  doc["dataset"] = {{"name", data.name}, {"n", data.size()}, {"d", data.dim()}};
  doc["seed"] = a.seed;
  doc["sm_fraction"] = cfg.resolved_sm_fraction();
  doc["kernel"] = kernel_json(spec);
  const fs::path json_path(a.out);
  open_out(json_path) << doc.dump(2) << '\n';

  std::ofstream curve = open_out(sibling(json_path, ".json", ".csv"));
  curve << "index,eigenvalue,similarity_eigenvalue\n";
  for (Eigen::Index i = 0; i < d.eigenvalues.size(); ++i)
    curve << i + 1 << ',' << format_real(d.eigenvalues(i)) << ',' << format_real(d.similarity_eigenvalues(i)) << '\n';

  out << "|sm|=" << d.subsample.size() << " lambda2=" << format_real(d.lambda2)
      << " tail=" << format_real(d.tail_term) << " -> " << (d.use_cms3 ? "cms3" : "ms3") << '\n';
  return exit_ok;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Nystrom spectral clustering with landmark sampling", "nyspec"};
  app.require_subcommand(1);

  ClusterArgs ca;
  CLI::App* cluster = app.add_subcommand("cluster", "Cluster one dataset and write labels plus a JSON summary");
  add_data_options(cluster, ca.data);
  cluster->add_option("--k", ca.k, "Number of clusters (default: class count)");
  cluster->add_option("--sampler", ca.sampler, "rs | ks | ss | ms3 | cms3 | cms3-tuned | ensemble-<base>")
      ->capture_default_str();
  cluster->add_option("--fraction", ca.fraction, "Landmark fraction of n");
  cluster->add_option("--r", ca.r, "MS3 pre-sample size for cms3 (default 2m)");
  cluster->add_option("--gamma", ca.gamma, "Greedy candidate-pool fraction")->capture_default_str();
  cluster->add_option("--sm-fraction", ca.sm_fraction, "Switch subsample fraction (default: gamma)");
  cluster->add_option("--seed", ca.seed, "Seed")->capture_default_str();
  cluster->add_flag("--exact", ca.exact, "Use the full similarity matrix");
  cluster->add_option("--ensemble-p", ca.ensemble_p, "Experts for ensemble-* samplers");
  cluster->add_option("--save-model", ca.save_model, "Write the Nystrom model(s) as JSON");
  cluster->add_option("--out", ca.out, "Labels CSV path; the summary goes next to it as .json")->required();
  cluster->add_option("--embedding", ca.embedding, "laplacian | affinity")->capture_default_str();
  cluster->add_flag("--no-row-normalize", ca.no_row_normalize, "Skip unit-length row normalisation");
  cluster->add_flag("--strict-alg1-bound", ca.strict_bound, "Sum over landmarks 0..i-2 in greedy steps");

  SweepArgs ba;
  CLI::App* bench = app.add_subcommand("benchmark", "Sweep samplers x fractions x repetitions");
  add_sweep_options(bench, ba);
  bench->add_option("--out", ba.out, "Output directory")->required();
  bench->add_option("--k", ba.k, "Number of clusters (default: class count)");
  bench->add_option("--frobenius-max-n", ba.frobenius_max_n, "Record Frobenius error only for n up to this")
      ->capture_default_str();
  bench->add_flag("--no-frobenius", ba.no_frobenius, "Skip the Frobenius error column");
  bench->add_option("--embedding", ba.embedding, "laplacian | affinity")->capture_default_str();
  bench->add_flag("--no-row-normalize", ba.no_row_normalize, "Skip unit-length row normalisation");

  SweepArgs ea;
  CLI::App* curve = app.add_subcommand("error-curve", "Frobenius error per sampler and fraction");
  add_sweep_options(curve, ea);
  curve->add_option("--out", ea.out, "Output CSV")->required();
  curve->add_option("--frobenius-max-n", ea.frobenius_max_n, "Refuse datasets larger than this")->capture_default_str();

  SpectrumArgs sa;
  CLI::App* spectrum = app.add_subcommand("spectrum", "Eigenspectrum switch diagnostic");
  add_data_options(spectrum, sa.data);
  spectrum->add_option("--gamma", sa.gamma, "Subsample fraction")->capture_default_str();
  spectrum->add_option("--sm-fraction", sa.sm_fraction, "Overrides --gamma for the subsample");
  spectrum->add_option("--seed", sa.seed, "Seed")->capture_default_str();
  spectrum->add_option("--out", sa.out, "JSON path; the eigenvalue curve goes next to it as .csv")->required();

  std::vector<std::string> storage(args);
  std::vector<char*> argv;
  for (std::string& s : storage)
    argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_config;
  }

  try {
    if (cluster->parsed())
      return cmd_cluster(ca, out, err);
    if (bench->parsed())
      return cmd_benchmark(ba, out, err);
    if (curve->parsed())
      return cmd_error_curve(ea, out, err);
    if (spectrum->parsed())
      return cmd_spectrum(sa, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_runtime;
  }
  return exit_config;
}

} // namespace nyspec
