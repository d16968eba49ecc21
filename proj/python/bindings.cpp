#include "nyspec/clustering.hpp"
#include "nyspec/dataset.hpp"
#include "nyspec/error.hpp"
#include "nyspec/eval.hpp"
#include "nyspec/nystrom.hpp"
#include "nyspec/sampling.hpp"
#include "nyspec/spectral.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace nyspec;

namespace {

KernelSpec kernel_of(const std::string& kernel, double bandwidth) {
  KernelSpec spec;
  spec.kind = parse_kernel_kind(kernel);
  spec.bandwidth = bandwidth;
  spec.validate();
  return spec;
}

FeatureMatrix features(const Matrix& points, std::optional<std::vector<int>> labels = std::nullopt) {
  FeatureMatrix data{points, std::move(labels), "array"};
  data.validate();
  return data;
}

py::dict landmarks_dict(const LandmarkSet& l) {
  py::dict out;
  out["sampler"] = l.sampler;
  out["virtual"] = l.is_virtual();
  if (l.is_virtual()) {
    out["coordinates"] = l.coordinates;
    out["support"] = l.support;
  } else {
    out["indices"] = l.indices;
  }
  return out;
}

py::dict diagnostic_dict(const SpectrumDiagnostic& d) {
  py::dict out;
  out["eigenvalues"] = d.eigenvalues;
  out["lambda2"] = d.lambda2;
  out["tail_term"] = d.tail_term;
  out["branch"] = d.use_cms3 ? "cms3" : "ms3";
  out["subsample"] = d.subsample;
  out["similarity_eigenvalues"] = d.similarity_eigenvalues;
  return out;
}

SamplerConfig sampler_config(int m, double gamma, int r, std::optional<double> sm_fraction, std::uint64_t seed,
                             bool strict) {
  SamplerConfig cfg;
  cfg.m = m;
  cfg.r = r;
  cfg.gamma = gamma;
  cfg.sm_fraction = sm_fraction;
  cfg.seed = seed;
  cfg.strict_alg1_bound = strict;
  return cfg;
}

LandmarkSet index_landmarks(const std::vector<PointId>& indices) {
  LandmarkSet l;
  l.indices = indices;
  l.sampler = "given";
  return l;
}

} // namespace

PYBIND11_MODULE(_nyspec, m) {
  m.doc() = "Nystrom-sampled spectral clustering";

  static py::exception<Error> base(m, "NyspecError", PyExc_RuntimeError);
  static py::exception<DegenerateClustering> degenerate(m, "DegenerateClustering", base.ptr());
  static py::exception<RankDeficientLandmarks> deficient(m, "RankDeficientLandmarks", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p)
        std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const DegenerateClustering& e) {
      degenerate(e.what());
    } catch (const RankDeficientLandmarks& e) {
      deficient(e.what());
    } catch (const Error& e) {
      base(e.what());
    }
  });

  m.def(
      "similarity",
      [](const Matrix& points, const std::string& kernel, double bandwidth) {
        return full_similarity(features(points), kernel_of(kernel, bandwidth)).values;
      },
      py::arg("points"), py::arg("kernel") = "cosine", py::arg("bandwidth") = 1.0);

  m.def(
      "sample_landmarks",
      [](const Matrix& points, int count, const std::string& sampler, double gamma, int r,
         std::optional<double> sm_fraction, std::uint64_t seed, bool strict_alg1_bound, const std::string& kernel,
         double bandwidth) {
        const auto data = features(points);
        const auto cfg = sampler_config(count, gamma, r, sm_fraction, seed, strict_alg1_bound);
        SpectrumDiagnostic diag;
        const SamplerKind kind = parse_sampler_kind(sampler);
        py::dict out = landmarks_dict(
            sample_landmarks(kind, data, cfg, kernel_of(kernel, bandwidth),
                             kind == SamplerKind::cms3_tuned ? &diag : nullptr));
        if (kind == SamplerKind::cms3_tuned)
          out["switch"] = diagnostic_dict(diag);
        return out;
      },
      py::arg("points"), py::arg("m"), py::arg("sampler") = "ms3", py::arg("gamma") = 0.1, py::arg("r") = 0,
      py::arg("sm_fraction") = py::none(), py::arg("seed") = 0, py::arg("strict_alg1_bound") = false,
      py::arg("kernel") = "cosine", py::arg("bandwidth") = 1.0);

  m.def(
      "spectrum_switch",
      [](const Matrix& points, double gamma, std::optional<double> sm_fraction, std::uint64_t seed,
         const std::string& kernel, double bandwidth) {
        const auto data = features(points);
        return diagnostic_dict(
            spectrum_switch(data, sampler_config(2, gamma, 0, sm_fraction, seed, false), kernel_of(kernel, bandwidth)));
      },
      py::arg("points"), py::arg("gamma") = 0.1, py::arg("sm_fraction") = py::none(), py::arg("seed") = 0,
      py::arg("kernel") = "cosine", py::arg("bandwidth") = 1.0);

  m.def(
      "nystrom_fit",
      [](const Matrix& points, const std::vector<PointId>& landmarks, int k, const std::string& kernel,
         double bandwidth) {
        const auto data = features(points);
        const auto spec = kernel_of(kernel, bandwidth);
        const auto l = index_landmarks(landmarks);
        const NystromModel model = k > 0 ? fit(data, l, k, spec) : fit_full_rank(data, l, spec);
        py::dict out;
        out["rank"] = model.rank;
        out["landmark_eigvals"] = model.landmark_eigvals;
        out["landmark_eigvecs"] = model.landmark_eigvecs;
        out["extended_eigvecs"] = model.extended_eigvecs;
        return out;
      },
      py::arg("points"), py::arg("landmarks"), py::arg("k") = 0, py::arg("kernel") = "cosine",
      py::arg("bandwidth") = 1.0, "k <= 0 keeps every eigenpair above the rank cutoff.");

  m.def(
      "frobenius_error",
      [](const Matrix& points, const std::vector<PointId>& landmarks, const std::string& kernel, double bandwidth) {
        const auto data = features(points);
        const auto spec = kernel_of(kernel, bandwidth);
        const auto e = nyspec::frobenius_error(data, fit_full_rank(data, index_landmarks(landmarks), spec), spec);
        return py::make_tuple(e.value, e.relative());
      },
      py::arg("points"), py::arg("landmarks"), py::arg("kernel") = "cosine", py::arg("bandwidth") = 1.0,
      "Returns (absolute, relative) error of the full-rank reconstruction.");

  m.def(
      "kmeans",
      [](const Matrix& points, int k, std::uint64_t seed) {
        const auto a = nyspec::kmeans(points, k, seed);
        return py::make_tuple(a.labels, a.centroids, a.inertia);
      },
      py::arg("points"), py::arg("k"), py::arg("seed") = 0);

  m.def(
      "spectral_cluster",
      [](const Matrix& points, int k, const std::string& sampler, std::optional<double> fraction,
         std::optional<int> count, bool exact, int ensemble_p, double gamma, std::uint64_t seed,
         const std::string& embedding, bool row_normalize, const std::string& kernel, double bandwidth) {
        const auto data = features(points);
        SpectralOptions o;
        o.mode = exact ? ClusterMode::exact : ClusterMode::nystrom;
        o.sampler = parse_sampler_kind(sampler);
        o.ensemble_p = ensemble_p;
        o.sampling.gamma = gamma;
        o.sampling.m = count ? *count : landmark_count(fraction.value_or(0.1), data.size());
        o.seed = seed;
        o.embedding = parse_embedding_kind(embedding);
        o.row_normalize = row_normalize;
        o.spec = kernel_of(kernel, bandwidth);
        const auto r = nyspec::spectral_cluster(data, k, o);
        py::dict out;
        out["labels"] = r.assignment.labels;
        out["inertia"] = r.assignment.inertia;
        out["pipeline"] = r.assignment.pipeline;
        out["embedding"] = r.embedding.vectors;
        out["eigenvalues"] = r.embedding.eigenvalues;
        py::list landmarks;
        for (const auto& l : r.landmarks)
          landmarks.append(landmarks_dict(l));
        out["landmarks"] = landmarks;
        if (r.diagnostic)
          out["switch"] = diagnostic_dict(*r.diagnostic);
        out["warnings"] = r.warnings;
        return out;
      },
      py::arg("points"), py::arg("k"), py::arg("sampler") = "cms3-tuned", py::arg("fraction") = py::none(),
      py::arg("m") = py::none(), py::arg("exact") = false, py::arg("ensemble_p") = 0, py::arg("gamma") = 0.1,
      py::arg("seed") = 0, py::arg("embedding") = "laplacian", py::arg("row_normalize") = true,
      py::arg("kernel") = "cosine", py::arg("bandwidth") = 1.0);

  m.def(
      "clustering_accuracy",
      [](const std::vector<int>& predicted, const std::vector<int>& truth) {
        return nyspec::clustering_accuracy(predicted, truth);
      },
      py::arg("predicted"), py::arg("truth"));

  m.def("landmark_count", &landmark_count, py::arg("fraction"), py::arg("n"));

  m.def(
      "load_dataset",
      [](const std::string& path) {
        std::vector<std::string> warnings;
        auto data = nyspec::load_dataset(resolve_manifest(path), &warnings);
        py::object labels = data.labels ? py::cast(*data.labels) : py::none();
        return py::make_tuple(data.points, labels, data.name, warnings);
      },
      py::arg("path"), "Loads a CSV or JSON manifest; returns (points, labels, name, warnings).");
}
