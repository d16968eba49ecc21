#pragma once

#include "nyspec/clustering.hpp"
#include "nyspec/kernel.hpp"
#include "nyspec/spectral.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace nyspec {

/// Fraction of points labelled correctly under the best one-to-one mapping
/// between predicted and true labels (Hungarian on the contingency table).
double clustering_accuracy(std::span<const int> predicted, std::span<const int> truth);
double clustering_accuracy(const ClusterAssignment& predicted, std::span<const int> truth);

/// A sampler cell of the sweep: base sampler, optionally wrapped in an
/// ensemble of p experts. Written as "rs" or "ensemble-rs/p5".
struct SamplerSpec {
  SamplerKind base = SamplerKind::rs;
  int ensemble_p = 0;

  std::string label() const;
};

/// Parses "rs", "cms3-tuned", "ensemble-ms3" (p taken from `ensemble_ps`,
/// one cell per p) or an explicit "ensemble-ms3/p5".
std::vector<SamplerSpec> parse_sampler_list(const std::vector<std::string>& names, const std::vector<int>& ensemble_ps);

/// Landmark count for a sampling fraction: ceil(fraction * n).
int landmark_count(double fraction, Eigen::Index n);

struct ExperimentSpec {
  std::string dataset_name;
  std::vector<SamplerSpec> samplers;
  std::vector<double> fractions{0.02, 0.04, 0.06, 0.08, 0.10};
  int repetitions = 10;
  int k = 0; // 0 = class count
  std::uint64_t base_seed = 0;
  double gamma = 0.1;
  std::optional<double> sm_fraction;
  bool strict_alg1_bound = false;
  KernelSpec spec;
  EmbeddingKind embedding = EmbeddingKind::laplacian;
  bool row_normalize = true;
  /// Frobenius error recorded only for n <= this.
  Eigen::Index frobenius_max_n = 3000;
  bool record_frobenius = true;
  /// Cluster (and score accuracy); off for error-only sweeps.
  bool cluster = true;
  int jobs = 1;

  void validate(const FeatureMatrix& data) const;
};

struct ResultRecord {
  std::string dataset;
  std::string sampler;
  double fraction = 0.0;
  int repetition = 0;
  std::uint64_t seed = 0;
  bool ok = true;
  std::optional<double> accuracy; // unset when the cell did not cluster
  std::optional<double> frobenius_error;
  std::optional<double> relative_frobenius_error;
  std::string switch_branch;
  std::string message;
  double wall_time_ms = 0.0;
};

struct Summary {
  std::string sampler;
  std::optional<double> fraction; // unset = pooled over fractions
  int count = 0;
  int failures = 0;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  std::optional<double> mean_frobenius;
  std::optional<double> std_frobenius;
  std::optional<double> mean_relative_frobenius;
  std::optional<double> std_relative_frobenius;
  double mean_wall_time_ms = 0.0;
};

struct ExperimentResult {
  std::vector<ResultRecord> records;
  std::vector<Summary> per_fraction;
  std::vector<Summary> pooled;
};

std::uint64_t cell_seed(std::uint64_t base_seed, const std::string& sampler, double fraction, int repetition);

/// One sweep cell; failures are captured in the record.
ResultRecord run_cell(const FeatureMatrix& data, const ExperimentSpec& spec, const SamplerSpec& sampler,
                      double fraction, int repetition, std::uint64_t seed);

/// Full sweep. Records come back sorted by (sampler, fraction, repetition)
/// whatever the execution order.
ExperimentResult run_experiment(const FeatureMatrix& data, const ExperimentSpec& spec);

/// Mean and sample standard deviation per (sampler, fraction) and per sampler.
void aggregate(ExperimentResult& result);

double mean(std::span<const double> values);
/// Sample (n - 1) standard deviation; 0 for fewer than two values.
double sample_std(std::span<const double> values);

} // namespace nyspec
