#pragma once

#include <map>
#include <string>

#include "oselab/generator.hpp"

namespace oselab {

/// Parsed scenario configuration: flat key = value lines under [section]
/// headers, '#' comments, all floats decimal.
class ConfigFile {
public:
    static ConfigFile parse_file(const std::string& path);
    static ConfigFile parse_text(const std::string& text);

    bool has(const std::string& section, const std::string& key) const;
    std::string get(const std::string& section, const std::string& key) const;
    std::string get_or(const std::string& section, const std::string& key,
                       const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key) const;
    double get_double_or(const std::string& section, const std::string& key, double fallback) const;
    long get_long_or(const std::string& section, const std::string& key, long fallback) const;
    std::vector<double> get_doubles(const std::string& section, const std::string& key) const;
    std::vector<long> get_longs_or(const std::string& section, const std::string& key,
                                   const std::vector<long>& fallback) const;

    const std::string& text() const { return text_; }

private:
    std::map<std::string, std::map<std::string, std::string>> values_;
    std::string text_;
};

struct Scenario {
    std::string name;
    BaseSystem base = BaseSystem::doubling_map();
    CocycleGenerator generator =
        CocycleGenerator::constant(Matrix::Identity(2, 2), NormKind::L2);

    long spectrum_horizon = 4096;
    double grouping_tol = -1.0;  // < 0: derived from the analytic gap or 1e-2

    double epsilon = -1.0;  // < 0: min gap / 200 once the spectrum is known
    double tail_target = 1e-9;
    int f_levels = 1;

    double gamma = -1.0;  // regular-set target; exclusive with ell
    double ell = -1.0;
    double ell_cap = 1 << 20;
    long ck_horizon = 24;

    SampleScheme scheme = SampleScheme::OrbitBirkhoff;
    int sample_count = 192;
    std::uint64_t seed = 1;

    std::vector<long> verify_levels;  // 1-based; empty = all regular levels
    int pair_count = 160;
    int distance_bins = 8;
    long flag_margin = 1024;

    std::vector<long> filtration_levels;
    long filtration_cert_horizon = 16;
    int block_window = 64;

    std::string out_dir = "out";
    std::string raw_text;

    static Scenario load(const std::string& path);
    static Scenario from_config(const ConfigFile& cfg, const std::string& name);
};

}  // namespace oselab
