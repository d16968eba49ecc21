#include "nyspec/eval.hpp"

#include "nyspec/error.hpp"
#include "nyspec/hungarian.hpp"
#include "nyspec/rng.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <thread>

namespace nyspec {

double clustering_accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size())
    throw LengthMismatch("clustering_accuracy: prediction and truth lengths differ");
  if (predicted.empty())
    throw LengthMismatch("clustering_accuracy: empty labelling");
  const int kp = *std::max_element(predicted.begin(), predicted.end()) + 1;
  const int kt = *std::max_element(truth.begin(), truth.end()) + 1;
  if (*std::min_element(predicted.begin(), predicted.end()) < 0 || *std::min_element(truth.begin(), truth.end()) < 0)
    throw ConfigError("clustering_accuracy: labels must be non-negative");
  const int side = std::max(kp, kt);
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(side, side);
  for (std::size_t i = 0; i < predicted.size(); ++i)
    counts(predicted[i], truth[i]) += 1.0;
  const std::vector<int> match = solve_assignment(-counts);
  double hits = 0.0;
  for (int r = 0; r < side; ++r)
    hits += counts(r, match[static_cast<std::size_t>(r)]);
  return hits / static_cast<double>(predicted.size());
}

double clustering_accuracy(const ClusterAssignment& predicted, std::span<const int> truth) {
  return clustering_accuracy(std::span<const int>(predicted.labels), truth);
}

std::string SamplerSpec::label() const {
  if (ensemble_p >= 1)
    return "ensemble-" + to_string(base) + "/p" + std::to_string(ensemble_p);
  return to_string(base);
}

std::vector<SamplerSpec> parse_sampler_list(const std::vector<std::string>& names, const std::vector<int>& ensemble_ps) {
  std::vector<SamplerSpec> out;
  const std::string prefix = "ensemble-";
  for (const std::string& raw : names) {
    if (raw.rfind(prefix, 0) != 0) {
      out.push_back({parse_sampler_kind(raw), 0});
      continue;
    }
    std::string rest = raw.substr(prefix.size());
    const auto slash = rest.find("/p");
    if (slash != std::string::npos) {
      const std::string digits = rest.substr(slash + 2);
      int p = 0;
      try {
        p = std::stoi(digits);
      } catch (const std::exception&) {
        throw ConfigError("bad ensemble size in sampler '" + raw + "'");
      }
      if (p < 1)
        throw ConfigError("ensemble size must be at least 1 in sampler '" + raw + "'");
      out.push_back({parse_sampler_kind(rest.substr(0, slash)), p});
      continue;
    }
    const SamplerKind base = parse_sampler_kind(rest);
    if (ensemble_ps.empty())
      throw ConfigError("--ensemble-p is required for sampler '" + raw + "'");
    for (int p : ensemble_ps) {
      if (p < 1)
        throw ConfigError("--ensemble-p values must be at least 1");
      out.push_back({base, p});
    }
  }
  return out;
}

int landmark_count(double fraction, Eigen::Index n) {
  return static_cast<int>(candidate_pool_size(fraction, static_cast<std::size_t>(n)));
}

void ExperimentSpec::validate(const FeatureMatrix& data) const {
  if (samplers.empty())
    throw ConfigError("experiment: at least one sampler is required");
  if (fractions.empty())
    throw ConfigError("experiment: at least one fraction is required");
  if (repetitions < 1)
    throw ConfigError("experiment: repetitions must be at least 1");
  if (!(gamma > 0.0 && gamma <= 1.0))
    throw ConfigError("experiment: gamma must lie in (0, 1]");
  if (cluster && !data.labels)
    throw ConfigError("experiment: dataset has no labels to score accuracy against");
  const int clusters = k > 0 ? k : data.class_count();
  if (cluster && clusters < 2)
    throw ConfigError("experiment: need k >= 2 clusters");
  for (double f : fractions) {
    if (!(f > 0.0 && f <= 1.0))
      throw ConfigError("experiment: fractions must lie in (0, 1]");
    if (f * static_cast<double>(data.size()) < 2.0 - 1e-9)
      throw ConfigError("experiment: fraction " + std::to_string(f) + " yields fewer than 2 landmarks");
  }
  spec.validate();
}

std::uint64_t cell_seed(std::uint64_t base_seed, const std::string& sampler, double fraction, int repetition) {
  return derive_seed(base_seed, hash_string(sampler), static_cast<std::uint64_t>(std::llround(fraction * 1e6)),
                     static_cast<std::uint64_t>(repetition));
}

ResultRecord run_cell(const FeatureMatrix& data, const ExperimentSpec& spec, const SamplerSpec& sampler,
                      double fraction, int repetition, std::uint64_t seed) {
  ResultRecord rec;
  rec.dataset = spec.dataset_name.empty() ? data.name : spec.dataset_name;
  rec.sampler = sampler.label();
  rec.fraction = fraction;
  rec.repetition = repetition;
  rec.seed = seed;

  const auto start = std::chrono::steady_clock::now();
  try {
    SpectralOptions options;
    options.mode = ClusterMode::nystrom;
    options.sampler = sampler.base;
    options.ensemble_p = sampler.ensemble_p;
    options.sampling.m = landmark_count(fraction, data.size());
    options.sampling.gamma = spec.gamma;
    options.sampling.sm_fraction = spec.sm_fraction;
    options.sampling.strict_alg1_bound = spec.strict_alg1_bound;
    options.spec = spec.spec;
    options.seed = seed;
    options.row_normalize = spec.row_normalize;
    options.embedding = spec.embedding;

    std::vector<LandmarkSet> landmark_sets;
    if (spec.cluster) {
      const int k = spec.k > 0 ? spec.k : data.class_count();
      SpectralResult res = spectral_cluster(data, k, options);
      rec.accuracy = clustering_accuracy(res.assignment, *data.labels);
      if (res.diagnostic)
        rec.switch_branch = res.diagnostic->use_cms3 ? "cms3" : "ms3";
      landmark_sets = std::move(res.landmarks);
    } else {
      SamplerConfig cfg = options.sampling;
      if (sampler.ensemble_p >= 1) {
        for (int e = 0; e < sampler.ensemble_p; ++e) {
          cfg.seed = expert_seed(seed, e);
          landmark_sets.push_back(sample_landmarks(sampler.base, data, cfg, spec.spec));
        }
      } else {
        cfg.seed = seed;
        SpectrumDiagnostic diag;
        landmark_sets.push_back(sample_landmarks(sampler.base, data, cfg, spec.spec, &diag));
        if (sampler.base == SamplerKind::cms3_tuned)
          rec.switch_branch = diag.use_cms3 ? "cms3" : "ms3";
      }
    }

    if (spec.record_frobenius && data.size() <= spec.frobenius_max_n) {
      FrobeniusError err;
      if (landmark_sets.size() == 1 && sampler.ensemble_p < 1) {
        err = frobenius_error(data, fit_full_rank(data, landmark_sets.front(), spec.spec), spec.spec);
      } else {
        NystromEnsemble ensemble;
        for (const LandmarkSet& l : landmark_sets)
          ensemble.experts.push_back(fit_full_rank(data, l, spec.spec));
        ensemble.weights.assign(ensemble.experts.size(), 1.0 / static_cast<double>(ensemble.experts.size()));
        err = frobenius_error_dense(data, ensemble_reconstruct(ensemble), spec.spec);
      }
      rec.frobenius_error = err.value;
      rec.relative_frobenius_error = err.relative();
    }
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.accuracy.reset();
    rec.message = e.what();
  }
  rec.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

double mean(std::span<const double> values) {
  if (values.empty())
    return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double sample_std(std::span<const double> values) {
  if (values.size() < 2)
    return 0.0;
  const double mu = mean(values);
  double sq = 0.0;
  for (double v : values)
    sq += (v - mu) * (v - mu);
  return std::sqrt(sq / static_cast<double>(values.size() - 1));
}

namespace {

Summary summarize(const std::string& sampler, std::optional<double> fraction,
                  const std::vector<const ResultRecord*>& records) {
  Summary s;
  s.sampler = sampler;
  s.fraction = fraction;
  std::vector<double> acc, frob, rel, wall;
  for (const ResultRecord* r : records) {
    if (!r->ok) {
      ++s.failures;
      continue;
    }
    ++s.count;
    if (r->accuracy)
      acc.push_back(*r->accuracy);
    if (r->frobenius_error)
      frob.push_back(*r->frobenius_error);
    if (r->relative_frobenius_error)
      rel.push_back(*r->relative_frobenius_error);
    wall.push_back(r->wall_time_ms);
  }
  s.mean_accuracy = mean(acc);
  s.std_accuracy = sample_std(acc);
  if (!frob.empty()) {
    s.mean_frobenius = mean(frob);
    s.std_frobenius = sample_std(frob);
  }
  if (!rel.empty()) {
    s.mean_relative_frobenius = mean(rel);
    s.std_relative_frobenius = sample_std(rel);
  }
  s.mean_wall_time_ms = mean(wall);
  return s;
}

bool record_less(const ResultRecord& a, const ResultRecord& b) {
  if (a.sampler != b.sampler)
    return a.sampler < b.sampler;
  if (a.fraction != b.fraction)
    return a.fraction < b.fraction;
  return a.repetition < b.repetition;
}

} // namespace

void aggregate(ExperimentResult& result) {
  result.per_fraction.clear();
  result.pooled.clear();
  std::map<std::pair<std::string, double>, std::vector<const ResultRecord*>> cells;
  std::map<std::string, std::vector<const ResultRecord*>> pooled;
  for (const ResultRecord& r : result.records) {
    cells[{r.sampler, r.fraction}].push_back(&r);
    pooled[r.sampler].push_back(&r);
  }
  for (const auto& [key, records] : cells)
    result.per_fraction.push_back(summarize(key.first, key.second, records));
  for (const auto& [sampler, records] : pooled)
    result.pooled.push_back(summarize(sampler, std::nullopt, records));
}

ExperimentResult run_experiment(const FeatureMatrix& data, const ExperimentSpec& spec) {
  data.validate();
  spec.validate(data);

  struct Cell {
    const SamplerSpec* sampler;
    double fraction;
    int repetition;
  };
  std::vector<Cell> cells;
  for (const SamplerSpec& s : spec.samplers)
    for (double f : spec.fractions)
      for (int rep = 0; rep < spec.repetitions; ++rep)
        cells.push_back({&s, f, rep});

  ExperimentResult result;
  result.records.resize(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const Cell& c = cells[i];
      const std::string label = c.sampler->label();
      result.records[i] = run_cell(data, spec, *c.sampler, c.fraction, c.repetition,
                                   cell_seed(spec.base_seed, label, c.fraction, c.repetition));
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(spec.jobs, 1)), 1, cells.size());
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t)
      pool.emplace_back(worker);
  }

  std::stable_sort(result.records.begin(), result.records.end(), record_less);
  aggregate(result);
  return result;
}

} // namespace nyspec
