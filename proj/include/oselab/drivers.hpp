#pragma once

#include <memory>

#include "oselab/holder.hpp"
#include "oselab/scenario.hpp"

namespace oselab {

/// Everything the pipelines derive from a scenario before producing reports.
struct Lab {
    Scenario scenario;
    LyapunovSpectrum spectrum;
    GeneratorAnalysis analysis;
    double grouping_tol = 0.0;
    double epsilon = 0.0;
    long truncation = 0;
    double a = 1.0;
    int k_levels = 1;
    BasePoint anchor;
    std::vector<long> samples;  // orbit indices of the sampled points
    std::shared_ptr<OrbitCache> cache;
};

/// Margins the cache must carry beyond the sampled window.
enum class LabUse { SpectrumOnly, FlagsOnly, Regularity, SeriesNorms, Filtration };

Lab build_lab(const Scenario& scenario, LabUse use, int threads);

struct RunResult {
    std::vector<std::string> files;  // written relative to out_dir (manifest excluded)
    int exit_code = 0;
};

RunResult run_spectrum(const Scenario& scenario, const std::string& out_dir, int threads);
RunResult run_splitting(const Scenario& scenario, const std::string& out_dir, int threads);
RunResult run_regular_set(const Scenario& scenario, const std::string& out_dir, int threads);
RunResult run_verify(const Scenario& scenario, const std::string& out_dir, int threads);
RunResult run_filtration(const Scenario& scenario, const std::string& out_dir, int threads);
RunResult run_lemma_lab(const Scenario& scenario, const std::string& out_dir, int threads);

/// 64-bit FNV-1a, hex-encoded; the digest used in run manifests.
std::string content_digest(const std::string& bytes);

/// Fixed shortest-roundtrip float formatting shared by every writer.
std::string format_double(double v);

}  // namespace oselab
