#include "oselab/scenario.hpp"

#include <fstream>
#include <sstream>

namespace oselab {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream is(s);
    std::vector<std::string> out;
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

}  // namespace

ConfigFile ConfigFile::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str());
}

ConfigFile ConfigFile::parse_text(const std::string& text) {
    ConfigFile cfg;
    cfg.text_ = text;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("bad section header at line " + std::to_string(lineno));
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected key = value at line " + std::to_string(lineno));
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("empty key at line " + std::to_string(lineno));
        cfg.values_[section][key] = value;
    }
    return cfg;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
    auto s = values_.find(section);
    return s != values_.end() && s->second.count(key) > 0;
}

std::string ConfigFile::get(const std::string& section, const std::string& key) const {
    if (!has(section, key)) throw ConfigError("missing config key [" + section + "] " + key);
    return values_.at(section).at(key);
}

std::string ConfigFile::get_or(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
    return has(section, key) ? get(section, key) : fallback;
}

double ConfigFile::get_double(const std::string& section, const std::string& key) const {
    const std::string v = get(section, key);
    try {
        std::size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("bad number for [" + section + "] " + key + ": " + v);
    }
}

double ConfigFile::get_double_or(const std::string& section, const std::string& key,
                                 double fallback) const {
    return has(section, key) ? get_double(section, key) : fallback;
}

long ConfigFile::get_long_or(const std::string& section, const std::string& key,
                             long fallback) const {
    if (!has(section, key)) return fallback;
    return static_cast<long>(get_double(section, key));
}

std::vector<double> ConfigFile::get_doubles(const std::string& section,
                                            const std::string& key) const {
    std::vector<double> out;
    for (const auto& tok : split_ws(get(section, key))) {
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw ConfigError("bad number list for [" + section + "] " + key);
        }
    }
    return out;
}

std::vector<long> ConfigFile::get_longs_or(const std::string& section, const std::string& key,
                                           const std::vector<long>& fallback) const {
    if (!has(section, key)) return fallback;
    std::vector<long> out;
    for (double v : get_doubles(section, key)) out.push_back(static_cast<long>(v));
    return out;
}

namespace {

BaseSystem base_from_config(const ConfigFile& cfg) {
    const std::string kind = cfg.get("base", "kind");
    if (kind == "toral_automorphism") {
        // rows separated by ';'
        std::string m = cfg.get("base", "matrix");
        std::vector<std::vector<long>> rows;
        std::string row;
        std::istringstream is(m);
        while (std::getline(is, row, ';')) {
            std::vector<long> r;
            for (const auto& tok : split_ws(row)) r.push_back(std::stol(tok));
            if (!r.empty()) rows.push_back(r);
        }
        if (rows.empty()) throw ConfigError("empty toral matrix");
        Eigen::MatrixXi mat(rows.size(), rows[0].size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != rows[0].size()) throw ConfigError("ragged toral matrix");
            for (std::size_t j = 0; j < rows[i].size(); ++j)
                mat(static_cast<int>(i), static_cast<int>(j)) = static_cast<int>(rows[i][j]);
        }
        return BaseSystem::toral_automorphism(mat);
    }
    if (kind == "circle_rotation") return BaseSystem::circle_rotation(cfg.get_double("base", "angle"));
    if (kind == "doubling_map") return BaseSystem::doubling_map();
    if (kind == "full_shift")
        return BaseSystem::full_shift(static_cast<int>(cfg.get_long_or("base", "symbols", 2)));
    throw ConfigError("unknown base kind: " + kind);
}

ScalarField field_from_config(const ConfigFile& cfg, const std::string& section,
                              const std::string& prefix) {
    const std::string kind = cfg.get_or(section, prefix + "_kind", "zero");
    const double amp = cfg.get_double_or(section, prefix + "_amplitude", 0.0);
    const double phase = cfg.get_double_or(section, prefix + "_phase", 0.0);
    if (kind == "zero") return ScalarField::zero();
    if (kind == "constant") return ScalarField::constant(amp);
    if (kind == "cosine") return ScalarField::cosine(amp, phase);
    if (kind == "power")
        return ScalarField::power(amp, cfg.get_double_or(section, prefix + "_exponent", 1.0), phase);
    throw ConfigError("unknown scalar field kind: " + kind);
}

CocycleGenerator generator_from_config(const ConfigFile& cfg) {
    const std::string kind = cfg.get("generator", "kind");
    const NormKind norm = norm_from_string(cfg.get_or("generator", "norm", "l2"));
    const double nu = cfg.get_double_or("generator", "nu", 1.0);
    if (kind == "constant") {
        std::string m = cfg.get("generator", "matrix");
        std::vector<std::vector<double>> rows;
        std::string row;
        std::istringstream is(m);
        while (std::getline(is, row, ';')) {
            std::vector<double> r;
            for (const auto& tok : split_ws(row)) r.push_back(std::stod(tok));
            if (!r.empty()) rows.push_back(r);
        }
        Matrix mat(rows.size(), rows[0].size());
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t j = 0; j < rows[i].size(); ++j)
                mat(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
        return CocycleGenerator::constant(mat, norm, nu);
    }
    if (kind == "rotation_conjugated") {
        auto diag = cfg.get_doubles("generator", "diagonal");
        Vector d = Eigen::Map<Vector>(diag.data(), diag.size());
        return CocycleGenerator::rotation_conjugated(d, field_from_config(cfg, "generator", "angle"),
                                                     norm, nu);
    }
    if (kind == "coboundary") {
        auto diag = cfg.get_doubles("generator", "diagonal");
        Vector d = Eigen::Map<Vector>(diag.data(), diag.size());
        ConjugatorField conj;
        const std::string ck = cfg.get_or("generator", "conjugator", "givens");
        if (ck == "givens") {
            conj.kind = ConjugatorField::Kind::GivensChain;
            int planes = static_cast<int>(diag.size()) - 1;
            ScalarField base_field = field_from_config(cfg, "generator", "angle");
            for (int p = 0; p < planes; ++p) {
                ScalarField f = base_field;
                f.phase += 0.37 * p;  // decorrelate the planes
                conj.angles.push_back(f);
            }
        } else if (ck == "shear") {
            conj.kind = ConjugatorField::Kind::Shear;
            conj.strength = field_from_config(cfg, "generator", "strength");
        } else {
            throw ConfigError("unknown conjugator kind: " + ck);
        }
        return CocycleGenerator::coboundary(d, conj, norm, nu);
    }
    if (kind == "truncated_diagonal_compact") {
        return CocycleGenerator::truncated_diagonal_compact(
            static_cast<int>(cfg.get_long_or("generator", "dimension", 4)),
            cfg.get_double_or("generator", "top", 2.0), cfg.get_double_or("generator", "rate", 0.5),
            static_cast<int>(cfg.get_long_or("generator", "head_block", 2)), norm);
    }
    throw ConfigError("unknown generator kind: " + kind);
}

}  // namespace

Scenario Scenario::from_config(const ConfigFile& cfg, const std::string& name) {
    Scenario s;
    s.name = name;
    s.raw_text = cfg.text();
    s.base = base_from_config(cfg);
    s.generator = generator_from_config(cfg);

    s.spectrum_horizon = cfg.get_long_or("spectrum", "horizon", 4096);
    s.grouping_tol = cfg.get_double_or("spectrum", "grouping_tol", -1.0);

    s.epsilon = cfg.get_double_or("norms", "epsilon", -1.0);
    s.tail_target = cfg.get_double_or("norms", "tail_target", 1e-9);
    s.f_levels = static_cast<int>(cfg.get_long_or("norms", "f_levels", 1));

    s.gamma = cfg.get_double_or("regular_set", "gamma", -1.0);
    s.ell = cfg.get_double_or("regular_set", "ell", -1.0);
    s.ell_cap = cfg.get_double_or("regular_set", "ell_cap", 1 << 20);
    s.ck_horizon = cfg.get_long_or("regular_set", "ck_horizon", 24);

    const std::string scheme = cfg.get_or("sampling", "scheme", "orbit_birkhoff");
    if (scheme == "orbit_birkhoff")
        s.scheme = SampleScheme::OrbitBirkhoff;
    else if (scheme == "iid_uniform")
        s.scheme = SampleScheme::IidUniform;
    else
        throw ConfigError("unknown sampling scheme: " + scheme);
    s.sample_count = static_cast<int>(cfg.get_long_or("sampling", "count", 192));
    s.seed = static_cast<std::uint64_t>(cfg.get_long_or("sampling", "seed", 1));

    s.verify_levels = cfg.get_longs_or("verify", "levels", {});
    s.pair_count = static_cast<int>(cfg.get_long_or("verify", "pair_count", 160));
    s.distance_bins = static_cast<int>(cfg.get_long_or("verify", "distance_bins", 8));
    s.flag_margin = cfg.get_long_or("verify", "flag_margin", 1024);

    s.filtration_levels = cfg.get_longs_or("filtration", "levels", {});
    s.filtration_cert_horizon = cfg.get_long_or("filtration", "cert_horizon", 16);
    s.block_window = static_cast<int>(cfg.get_long_or("filtration", "block_window", 64));

    s.out_dir = cfg.get_or("output", "dir", "out");

    if (s.sample_count < 1) throw ConfigError("sample count must be positive");
    if (s.gamma > 0.0 && s.ell > 0.0)
        throw ConfigError("regular_set takes either gamma or ell, not both");
    return s;
}

Scenario Scenario::load(const std::string& path) {
    std::string name = path;
    std::size_t slash = name.find_last_of('/');
    if (slash != std::string::npos) name = name.substr(slash + 1);
    std::size_t dot = name.find_last_of('.');
    if (dot != std::string::npos) name = name.substr(0, dot);
    return from_config(ConfigFile::parse_file(path), name);
}

}  // namespace oselab
