#include "oselab/drivers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "oselab/parallel.hpp"
#include "oselab/quasirandom.hpp"

namespace oselab {

using nlohmann::json;

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string content_digest(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

class OutputWriter {
public:
    OutputWriter(std::string dir, const Scenario& scenario)
        : dir_(std::move(dir)), scenario_digest_(content_digest(scenario.raw_text)),
          scenario_name_(scenario.name) {}

    void add(const std::string& name, const std::string& bytes) { contents_[name] = bytes; }
    void time_stage(const std::string& stage, double seconds) { timings_[stage] = seconds; }

    RunResult finish(int exit_code) {
        std::filesystem::create_directories(dir_);
        RunResult res;
        res.exit_code = exit_code;
        json inventory = json::object();
        for (const auto& [name, bytes] : contents_) {
            std::ofstream out(dir_ + "/" + name, std::ios::binary);
            out << bytes;
            inventory[name] = content_digest(bytes);
            res.files.push_back(name);
        }
        json manifest;
        manifest["artifact_version"] = "0.1.0";
        manifest["scenario"] = scenario_name_;
        manifest["scenario_digest"] = scenario_digest_;
        manifest["outputs"] = inventory;
        json times = json::object();
        for (const auto& [stage, sec] : timings_) times[stage] = sec;
        manifest["wall_times_seconds"] = times;
        std::ofstream out(dir_ + "/manifest.json", std::ios::binary);
        out << manifest.dump(1) << "\n";
        return res;
    }

private:
    std::string dir_;
    std::map<std::string, std::string> contents_;
    std::map<std::string, double> timings_;
    std::string scenario_digest_;
    std::string scenario_name_;
};

json vector_to_json(const Vector& v) {
    json a = json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

json matrix_to_json(const Matrix& m) {
    // Row-major with a dimension header.
    json j;
    j["rows"] = static_cast<int>(m.rows());
    j["cols"] = static_cast<int>(m.cols());
    json data = json::array();
    for (int r = 0; r < m.rows(); ++r)
        for (int c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    j["data"] = data;
    return j;
}

double analytic_min_gap(const CocycleGenerator& gen) {
    Vector diag;
    if (gen.has_conjugator() || gen.kind() == GeneratorKind::TruncatedDiagonalCompact)
        diag = gen.diagonal();
    else if (gen.kind() == GeneratorKind::Constant && gen.constant_matrix().isDiagonal(1e-14))
        diag = gen.constant_matrix().diagonal();
    else
        return -1.0;
    std::vector<double> rates;
    for (int i = 0; i < diag.size(); ++i) rates.push_back(std::log(std::abs(diag[i])));
    std::sort(rates.begin(), rates.end(), std::greater<double>());
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < rates.size(); ++i)
        if (rates[i] - rates[i + 1] > 1e-9) gap = std::min(gap, rates[i] - rates[i + 1]);
    return std::isfinite(gap) ? gap : -1.0;
}

std::vector<int> regular_levels(const Lab& lab) {
    std::vector<int> levels;
    for (int i = 0; i < lab.k_levels; ++i) levels.push_back(i);
    return levels;
}

}  // namespace

Lab build_lab(const Scenario& scenario, LabUse use, int threads) {
    (void)threads;
    Lab lab;
    lab.scenario = scenario;
    const auto& base = scenario.base;
    const auto& gen = scenario.generator;

    SampledMeasure anchor_draw = sample_points(base, SampleScheme::OrbitBirkhoff, 1, scenario.seed);
    lab.anchor = anchor_draw.points.front();

    double tol = scenario.grouping_tol;
    if (tol <= 0.0) {
        double gap = analytic_min_gap(gen);
        tol = gap > 0.0 ? 0.05 * gap : 1e-2;
    }
    lab.grouping_tol = tol;
    lab.spectrum = lyapunov_spectrum(gen, base, lab.anchor, scenario.spectrum_horizon, tol);
    lab.analysis = analyze_generator(gen, base);

    lab.epsilon = scenario.epsilon;
    if (lab.epsilon <= 0.0)
        lab.epsilon = lab.spectrum.groups() > 1 ? lab.spectrum.min_gap() / 200.0 : 1e-3;
    lab.truncation = LyapunovNormParams::truncation_for(lab.epsilon, scenario.tail_target);

    int f_levels = scenario.f_levels;
    if (lab.spectrum.groups() <= f_levels) f_levels = lab.spectrum.groups() - 1;
    if (f_levels < 0) f_levels = 0;
    lab.k_levels = lab.spectrum.groups() - f_levels;
    lab.scenario.f_levels = f_levels;

    double prop_f = propagated_holder_constant(lab.analysis.a1, lab.analysis.sup_a,
                                               base.lipschitz_forward(), gen.holder_exponent());
    double prop_b = prop_f;
    if (base.invertible() && gen.invertible())
        prop_b = propagated_holder_constant(lab.analysis.a1_inv, lab.analysis.sup_a_inv,
                                            base.lipschitz_backward(), gen.holder_exponent());
    double lam_top = lab.spectrum.exponents.front();
    double lam_bot = lab.spectrum.exponents.back();
    lab.a = std::max({prop_f, prop_b, 1.05 * std::exp(lam_top + lab.epsilon),
                      1.05 * std::exp(-lam_bot + 2.0 * lab.epsilon)});

    if (use == LabUse::FlagsOnly || use == LabUse::Regularity || use == LabUse::SeriesNorms) {
        if (scenario.scheme != SampleScheme::OrbitBirkhoff)
            throw ConfigError("this pipeline needs orbit sampling");
        if (!(base.invertible() && gen.invertible()))
            throw NegativeIterateOfNonInvertible("splitting pipelines need an invertible cocycle");
        long lo = 0, hi = scenario.sample_count;
        if (use == LabUse::Regularity) {
            lo = -scenario.ck_horizon;
            hi = scenario.sample_count - 1 + scenario.ck_horizon;
        } else if (use == LabUse::SeriesNorms) {
            long w = lab.truncation + 64;
            lo = -w;
            hi = scenario.sample_count - 1 + w;
        }
        lab.cache = std::make_shared<OrbitCache>(gen, base, lab.anchor, lo, hi, scenario.flag_margin,
                                                 lab.spectrum, true);
    } else if (use == LabUse::Filtration) {
        if (scenario.scheme != SampleScheme::OrbitBirkhoff)
            throw ConfigError("the filtration pipeline needs orbit sampling");
        long hi = scenario.sample_count - 1 +
                  std::max<long>(scenario.block_window, scenario.filtration_cert_horizon) + 1;
        lab.cache = std::make_shared<OrbitCache>(gen, base, lab.anchor, 0, hi, scenario.flag_margin,
                                                 lab.spectrum, false);
    }
    for (int i = 0; i < scenario.sample_count; ++i) lab.samples.push_back(i);
    return lab;
}

RunResult run_spectrum(const Scenario& scenario, const std::string& out_dir, int threads) {
    Stopwatch total;
    OutputWriter writer(out_dir, scenario);
    Lab lab = build_lab(scenario, LabUse::SpectrumOnly, threads);
    const auto& base = scenario.base;
    const auto& gen = scenario.generator;

    SampledMeasure samples =
        sample_points(base, scenario.scheme, scenario.sample_count, scenario.seed);
    const int d = gen.dimension();
    std::vector<std::vector<double>> raw(samples.points.size());
    Stopwatch compute;
    parallel_for(static_cast<long>(samples.points.size()), threads, [&](long i) {
        LyapunovSpectrum s = lyapunov_spectrum(gen, base, samples.points[i],
                                               scenario.spectrum_horizon, lab.grouping_tol);
        raw[i] = s.raw;
    });
    writer.time_stage("compute", compute.seconds());

    std::ostringstream csv;
    csv << "index";
    for (int c = 0; c < base.dimension(); ++c) csv << ",x" << c;
    for (int e = 0; e < d; ++e) csv << ",raw_" << e;
    csv << "\n";
    for (std::size_t i = 0; i < samples.points.size(); ++i) {
        csv << i;
        for (int c = 0; c < base.dimension(); ++c)
            csv << "," << format_double(samples.points[i].coords[c]);
        for (int e = 0; e < d; ++e) csv << "," << format_double(raw[i][e]);
        csv << "\n";
    }
    writer.add("spectrum.csv", csv.str());

    std::vector<double> pooled(d, 0.0), spread(d, 0.0);
    for (const auto& r : raw)
        for (int e = 0; e < d; ++e) pooled[e] += r[e];
    for (int e = 0; e < d; ++e) pooled[e] /= static_cast<double>(raw.size());
    for (const auto& r : raw)
        for (int e = 0; e < d; ++e) spread[e] = std::max(spread[e], std::abs(r[e] - pooled[e]));

    GrowthRates rates = growth_rates(gen, base, samples.points.front(),
                                     std::max<long>(scenario.spectrum_horizon, 8),
                                     gen.declared_head_block());
    json summary;
    summary["horizon"] = scenario.spectrum_horizon;
    summary["grouping_tol"] = lab.grouping_tol;
    summary["pooled_raw"] = pooled;
    summary["max_deviation"] = spread;
    summary["anchor_exponents"] = lab.spectrum.exponents;
    summary["anchor_multiplicities"] = lab.spectrum.multiplicities;
    summary["lambda_hat"] = rates.lambda_hat;
    summary["alpha_hat"] = rates.alpha_hat;
    summary["alpha_is_floor"] = rates.alpha_is_floor;
    summary["sample_count"] = static_cast<int>(samples.points.size());
    summary["seed"] = scenario.seed;
    writer.add("spectrum_summary.json", summary.dump(1) + "\n");
    writer.time_stage("total", total.seconds());
    return writer.finish(0);
}

RunResult run_splitting(const Scenario& scenario, const std::string& out_dir, int threads) {
    Stopwatch total;
    OutputWriter writer(out_dir, scenario);
    Lab lab = build_lab(scenario, LabUse::FlagsOnly, threads);
    const OrbitCache& cache = *lab.cache;
    const int g = lab.spectrum.groups();
    const bool has_oracle = scenario.generator.has_conjugator();

    struct Row {
        long index;
        std::vector<double> equivariance, oracle;
        OseledetsSplitting splitting;
    };
    std::vector<Row> rows(lab.samples.size());
    Stopwatch compute;
    parallel_for(static_cast<long>(lab.samples.size()), threads, [&](long i) {
        long j = lab.samples[i];
        Row row;
        row.index = j;
        row.splitting = oseledets_splitting(cache, j, lab.scenario.f_levels);
        for (int lv = 0; lv < g; ++lv) row.equivariance.push_back(equivariance_defect(cache, j, lv));
        if (has_oracle) {
            CoboundaryOracle oracle = coboundary_oracle(scenario.generator, cache.point(j));
            for (int lv = 0; lv < g && lv < static_cast<int>(oracle.groups.size()); ++lv)
                row.oracle.push_back(
                    hausdorff_distance(cache.group(j, lv), oracle.groups[lv]).value);
        }
        rows[i] = std::move(row);
    });
    writer.time_stage("compute", compute.seconds());

    double max_equiv = 0.0, max_oracle = 0.0;
    json points = json::array();
    for (const auto& row : rows) {
        json p;
        p["index"] = row.index;
        p["coords"] = vector_to_json(cache.point(row.index).coords);
        p["horizon"] = cache.margin();
        json groups = json::array();
        for (std::size_t lv = 0; lv < row.splitting.groups.size(); ++lv) {
            json gobj;
            bool is_f = row.splitting.has_f && lv + 1 == row.splitting.groups.size();
            gobj["role"] = is_f ? "tail" : "group";
            if (!is_f) {
                gobj["exponent"] = lab.spectrum.exponents[lv];
                gobj["multiplicity"] = lab.spectrum.multiplicities[lv];
            }
            gobj["basis"] = matrix_to_json(row.splitting.groups[lv].onb());
            if (lv < row.equivariance.size()) {
                gobj["equivariance_defect"] = row.equivariance[lv];
                max_equiv = std::max(max_equiv, row.equivariance[lv]);
            }
            if (lv < row.oracle.size()) {
                gobj["oracle_dhat"] = row.oracle[lv];
                max_oracle = std::max(max_oracle, row.oracle[lv]);
            }
            groups.push_back(gobj);
        }
        p["groups"] = groups;
        points.push_back(p);
    }
    json doc;
    doc["points"] = points;
    doc["exponents"] = lab.spectrum.exponents;
    doc["multiplicities"] = lab.spectrum.multiplicities;
    doc["norm"] = norm_to_string(scenario.generator.norm());
    writer.add("splittings.json", doc.dump(1) + "\n");

    json summary;
    summary["max_equivariance_defect"] = max_equiv;
    summary["max_oracle_dhat"] = has_oracle ? json(max_oracle) : json();
    summary["sample_count"] = static_cast<int>(lab.samples.size());
    summary["equivariance_tolerance"] = 1e-6;
    bool ok = max_equiv <= 1e-6 && (!has_oracle || max_oracle <= 1e-6);
    summary["pass"] = ok;
    writer.add("splitting_summary.json", summary.dump(1) + "\n");
    writer.time_stage("total", total.seconds());
    return writer.finish(ok ? 0 : 3);
}

RunResult run_regular_set(const Scenario& scenario, const std::string& out_dir, int threads) {
    Stopwatch total;
    OutputWriter writer(out_dir, scenario);
    long d_eps_probes = 0;
    {
        ConfigFile cfg = ConfigFile::parse_text(scenario.raw_text);
        d_eps_probes = cfg.get_long_or("regular_set", "d_eps_probes", 0);
    }
    Lab lab = build_lab(scenario, d_eps_probes > 0 ? LabUse::SeriesNorms : LabUse::Regularity,
                        threads);
    const OrbitCache& cache = *lab.cache;
    LyapunovNormParams params{lab.epsilon, lab.truncation, lab.spectrum, lab.scenario.f_levels};
    params.validate();

    std::optional<double> ell, gamma;
    if (scenario.ell > 0.0) ell = scenario.ell;
    if (scenario.gamma > 0.0) gamma = scenario.gamma;
    if (!ell && !gamma) gamma = 0.1;

    Stopwatch compute;
    RegularSet rs = build_regular_set(cache, lab.samples, regular_levels(lab), lab.epsilon,
                                      scenario.ck_horizon, ell, gamma, scenario.ell_cap);
    std::vector<double> d_eps(lab.samples.size(), 0.0);
    if (d_eps_probes > 0) {
        parallel_for(static_cast<long>(lab.samples.size()), threads, [&](long i) {
            d_eps[i] =
                d_epsilon(cache, lab.samples[i], params, static_cast<int>(d_eps_probes)).value;
        });
    }
    writer.time_stage("compute", compute.seconds());

    std::ostringstream csv;
    csv << "index";
    for (int c = 0; c < scenario.base.dimension(); ++c) csv << ",x" << c;
    for (int lv = 0; lv < lab.k_levels; ++lv) csv << ",c_" << (lv + 1) << ",k_" << (lv + 1);
    csv << ",max_ck,d_eps,member,member_next_ell\n";
    for (std::size_t i = 0; i < rs.records.size(); ++i) {
        const auto& rec = rs.records[i];
        csv << rec.index;
        for (int c = 0; c < scenario.base.dimension(); ++c)
            csv << "," << format_double(cache.point(rec.index).coords[c]);
        for (std::size_t lv = 0; lv < rec.c_per_level.size(); ++lv)
            csv << "," << format_double(rec.c_per_level[lv]) << ","
                << format_double(rec.k_per_level[lv]);
        csv << "," << format_double(rec.max_val) << "," << format_double(d_eps[i]);
        csv << "," << (rec.max_val <= rs.ell ? 1 : 0) << ","
            << (rec.max_val <= rs.ell + 1.0 ? 1 : 0) << "\n";
    }
    writer.add("regularity.csv", csv.str());

    json summary;
    summary["ell"] = rs.ell;
    summary["gamma_target"] = rs.gamma_target;
    summary["measure_estimate"] = rs.measure_estimate;
    summary["member_count"] = static_cast<int>(rs.members.size());
    summary["sample_count"] = static_cast<int>(lab.samples.size());
    summary["epsilon"] = lab.epsilon;
    summary["ck_horizon"] = scenario.ck_horizon;
    summary["d_eps_probes"] = d_eps_probes;
    writer.add("regular_set.json", summary.dump(1) + "\n");
    writer.time_stage("total", total.seconds());
    return writer.finish(0);
}

namespace {

struct PairChoice {
    long ix, iy;
    double distance;
};

// Stratified pair selection: log-uniform distance bins over the member pool,
// round-robin within bins in deterministic order.
std::vector<PairChoice> stratified_pairs(const OrbitCache& cache, const std::vector<long>& members,
                                         int pair_count, int bins) {
    std::vector<PairChoice> all;
    for (std::size_t i = 0; i < members.size(); ++i)
        for (std::size_t j = i + 1; j < members.size(); ++j) {
            double d = cache.system().metric(cache.point(members[i]), cache.point(members[j]));
            if (d > 0.0 && d < 1.0) all.push_back({members[i], members[j], d});
        }
    if (all.empty()) return all;
    double dmin = all.front().distance, dmax = all.front().distance;
    for (const auto& p : all) {
        dmin = std::min(dmin, p.distance);
        dmax = std::max(dmax, p.distance);
    }
    dmin = std::max(dmin, 1e-9);
    double span = std::log(dmax / dmin);
    if (span <= 0.0) span = 1.0;
    std::vector<std::vector<PairChoice>> binned(bins);
    for (const auto& p : all) {
        int b = static_cast<int>(std::floor(std::log(p.distance / dmin) / span * bins));
        b = std::clamp(b, 0, bins - 1);
        binned[b].push_back(p);
    }
    std::vector<PairChoice> chosen;
    std::size_t round = 0;
    while (static_cast<int>(chosen.size()) < pair_count) {
        bool any = false;
        for (int b = 0; b < bins && static_cast<int>(chosen.size()) < pair_count; ++b) {
            if (round < binned[b].size()) {
                chosen.push_back(binned[b][round]);
                any = true;
            }
        }
        if (!any) break;
        ++round;
    }
    std::sort(chosen.begin(), chosen.end(), [](const PairChoice& a, const PairChoice& b) {
        return a.distance < b.distance;
    });
    return chosen;
}

void append_pair_row(std::ostringstream& csv, const char* kind, const HolderPairReport& r) {
    csv << r.ix << "," << r.iy << "," << format_double(r.base_distance) << "," << r.level << ","
        << kind << "," << format_double(r.measured) << "," << format_double(r.bound) << ","
        << (r.pass ? 1 : 0) << "," << format_double(r.resolution) << "," << r.n_prime << ","
        << format_double(r.l_norm) << "," << format_double(r.fast_sum_distance) << ","
        << format_double(r.graph_lower) << "," << format_double(r.graph_upper) << ","
        << (r.graph_ok ? 1 : 0) << "," << format_double(r.term1_measured) << ","
        << format_double(r.term1_bound) << "," << format_double(r.term2_measured) << ","
        << format_double(r.term2_bound) << "," << format_double(r.delta_tilde) << ","
        << (r.triangle_ok ? 1 : 0) << "\n";
}

}  // namespace

RunResult run_verify(const Scenario& scenario, const std::string& out_dir, int threads) {
    Stopwatch total;
    OutputWriter writer(out_dir, scenario);
    Lab lab = build_lab(scenario, LabUse::Regularity, threads);
    const OrbitCache& cache = *lab.cache;

    LyapunovNormParams params{lab.epsilon, lab.truncation, lab.spectrum, lab.scenario.f_levels};
    params.validate();
    std::optional<double> ell, gamma;
    if (scenario.ell > 0.0) ell = scenario.ell;
    if (scenario.gamma > 0.0) gamma = scenario.gamma;
    if (!ell && !gamma) gamma = 0.1;
    RegularSet rs = build_regular_set(cache, lab.samples, regular_levels(lab), lab.epsilon,
                                      scenario.ck_horizon, ell, gamma, scenario.ell_cap);

    VerifierContext ctx;
    ctx.cache = &cache;
    ctx.params = params;
    ctx.regular = rs;
    ctx.ell = std::max(1.0, rs.ell);
    ctx.a = lab.a;
    ctx.nu = scenario.generator.holder_exponent();
    ctx.k_levels = lab.k_levels;

    std::vector<long> levels;
    if (scenario.verify_levels.empty())
        for (int i = 1; i <= lab.k_levels; ++i) levels.push_back(i);
    else
        levels = scenario.verify_levels;

    auto pairs = stratified_pairs(cache, rs.members, scenario.pair_count, scenario.distance_bins);

    // Regime discovery: the largest sampled distance below which every pair
    // clears the graph gates at every level.
    Stopwatch compute;
    std::vector<char> gate_ok(pairs.size(), 1);
    parallel_for(static_cast<long>(pairs.size()), threads, [&](long i) {
        const auto& p = pairs[i];
        bool ok = std::pow(p.distance, ctx.nu) < 0.25;
        for (long lv : levels) {
            if (!ok) break;
            try {
                Subspace ex = cache.fast_sum_flag(p.ix, static_cast<int>(lv) - 1);
                Subspace ey = cache.fast_sum_flag(p.iy, static_cast<int>(lv) - 1);
                double dist = hausdorff_distance(ex, ey).value;
                if (dist > 1.0 / ctx.ell) {
                    ok = false;
                    break;
                }
                Subspace em = cache.slow_flag(p.ix, static_cast<int>(lv));
                GraphOperator l = graph_operator(ex, em, ey);
                if (l.norm_value >= 0.5) ok = false;
            } catch (const Error&) {
                ok = false;
            }
        }
        gate_ok[i] = ok ? 1 : 0;
    });
    double delta2 = 0.0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (!gate_ok[i]) break;
        delta2 = pairs[i].distance;
    }
    std::vector<PairChoice> verified;
    for (const auto& p : pairs)
        if (p.distance <= delta2) verified.push_back(p);

    struct PairRows {
        std::vector<HolderPairReport> minus, plus, graph, main;
    };
    std::vector<PairRows> results(verified.size());
    parallel_for(static_cast<long>(verified.size()), threads, [&](long i) {
        const auto& p = verified[i];
        PairRows rows;
        for (long lv : levels) {
            int level = static_cast<int>(lv);
            rows.minus.push_back(verify_minus(ctx, p.ix, p.iy, level));
            rows.plus.push_back(verify_plus(ctx, p.ix, p.iy, level));
            rows.graph.push_back(verify_graph_bounds(ctx, p.ix, p.iy, level));
            rows.main.push_back(verify_main(ctx, p.ix, p.iy, level));
        }
        results[i] = std::move(rows);
    });
    writer.time_stage("compute", compute.seconds());

    std::ostringstream csv;
    csv << "ix,iy,distance,level,kind,measured,bound,pass,resolution,n_prime,l_norm,"
           "fast_sum_distance,graph_lower,graph_upper,graph_ok,term1_measured,term1_bound,"
           "term2_measured,term2_bound,delta_tilde,triangle_ok\n";
    bool all_pass = !verified.empty();
    long checks = 0, passed = 0;
    for (const auto& rows : results) {
        for (const auto& r : rows.minus) append_pair_row(csv, "slow_sum", r);
        for (const auto& r : rows.plus) append_pair_row(csv, "fast_sum", r);
        for (const auto& r : rows.graph) append_pair_row(csv, "graph", r);
        for (const auto& r : rows.main) append_pair_row(csv, "group", r);
        for (const auto* vec : {&rows.minus, &rows.plus, &rows.graph, &rows.main})
            for (const auto& r : *vec) {
                ++checks;
                passed += r.pass ? 1 : 0;
                all_pass = all_pass && r.pass;
            }
    }
    writer.add("holder_pairs.csv", csv.str());

    json summary;
    summary["ell"] = ctx.ell;
    summary["a"] = ctx.a;
    summary["epsilon"] = lab.epsilon;
    summary["nu"] = ctx.nu;
    summary["delta2"] = delta2;
    summary["pair_candidates"] = static_cast<int>(pairs.size());
    summary["pairs_verified"] = static_cast<int>(verified.size());
    summary["checks"] = checks;
    summary["checks_passed"] = passed;
    summary["member_count"] = static_cast<int>(rs.members.size());
    summary["measure_estimate"] = rs.measure_estimate;
    json constants = json::array();
    json fits = json::array();
    for (long lv : levels) {
        auto c = theoretical_constants(static_cast<int>(lv), lab.spectrum, lab.k_levels,
                                       lab.epsilon, ctx.ell, ctx.a, ctx.nu);
        json cj;
        cj["level"] = c.level;
        cj["c_minus"] = c.c_minus;
        cj["nu_minus"] = c.nu_minus;
        cj["c_plus"] = c.c_plus;
        cj["nu_plus"] = c.nu_plus;
        cj["c_hat"] = c.c_hat;
        cj["nu_hat"] = c.nu_hat;
        cj["c_main"] = c.c_main;
        cj["nu_main"] = c.nu_main;
        cj["omega"] = c.omega;
        cj["degenerate_first"] = c.degenerate_first;
        constants.push_back(cj);

        std::vector<std::pair<double, double>> pts;
        std::ostringstream dat;
        for (std::size_t i = 0; i < results.size(); ++i)
            for (const auto& r : results[i].main)
                if (r.level == lv && r.measured > 0.0) {
                    pts.emplace_back(r.base_distance, r.measured);
                    dat << format_double(std::log(r.base_distance)) << " "
                        << format_double(std::log(r.measured)) << "\n";
                }
        writer.add("loglog_level" + std::to_string(lv) + ".dat", dat.str());
        json fj;
        fj["level"] = lv;
        try {
            HolderFit fit = fit_holder_exponent(pts);
            fj["exponent"] = fit.exponent;
            fj["intercept"] = fit.intercept;
            fj["r_squared"] = fit.r_squared;
            fj["pair_count"] = fit.pair_count;
            fj["exponent_at_least_nu_main"] = fit.exponent >= c.nu_main;
        } catch (const Error& e) {
            fj["error"] = e.what();
        }
        fits.push_back(fj);
    }
    summary["constants"] = constants;
    summary["fits"] = fits;

    // Small built-in sweep of the perturbation-lemma lab.
    {
        int lab_pass = 0, lab_total = 0;
        for (std::uint64_t seed = 1; seed <= 16; ++seed) {
            L5Instance inst = synthesize_l5_instance(seed, 2 + static_cast<int>(seed % 3), 1, 2.0,
                                                     0.5, 1.0, 1e-3);
            L5Report rep = check_lemma_l5(inst);
            ++lab_total;
            lab_pass += (rep.pass && rep.cone_ok) ? 1 : 0;
        }
        summary["perturbation_lab_pass"] = lab_pass;
        summary["perturbation_lab_total"] = lab_total;
        all_pass = all_pass && lab_pass == lab_total;
    }
    summary["all_pass"] = all_pass;
    writer.add("holder_summary.json", summary.dump(1) + "\n");
    writer.time_stage("total", total.seconds());
    return writer.finish(all_pass ? 0 : 3);
}

RunResult run_filtration(const Scenario& scenario, const std::string& out_dir, int threads) {
    Stopwatch total;
    OutputWriter writer(out_dir, scenario);
    Lab lab = build_lab(scenario, LabUse::Filtration, threads);
    const OrbitCache& cache = *lab.cache;
    const auto& spec = lab.spectrum;

    std::vector<long> levels = scenario.filtration_levels;
    if (levels.empty())
        for (int i = 2; i <= spec.groups(); ++i) levels.push_back(i);

    double gamma = scenario.gamma > 0.0 ? scenario.gamma : 0.1;
    Stopwatch compute;

    // ell from the complement projections over the sampled points.
    double ell = 1.0;
    std::vector<Filtration> filts(lab.samples.size());
    parallel_for(static_cast<long>(lab.samples.size()), threads, [&](long i) {
        Filtration f = filtration(cache, lab.samples[i]);
        choose_complements(cache, f);
        filts[i] = std::move(f);
    });
    for (const auto& f : filts)
        for (std::size_t lv = 0; lv < f.proj_norm_u.size(); ++lv)
            ell = std::max({ell, f.proj_norm_u[lv], f.proj_norm_v[lv]});

    std::ostringstream pair_csv;
    pair_csv << "ix,iy,distance,level,kind,measured,bound,pass,resolution,n_prime,l_norm,"
                "fast_sum_distance,graph_lower,graph_upper,graph_ok,term1_measured,term1_bound,"
                "term2_measured,term2_bound,delta_tilde,triangle_ok\n";
    bool all_pass = true;
    json level_summaries = json::array();
    for (long lv : levels) {
        int level = static_cast<int>(lv);
        std::vector<long> onsets(lab.samples.size());
        parallel_for(static_cast<long>(lab.samples.size()), threads, [&](long i) {
            onsets[i] = filtration_certificate_onset(cache, lab.samples[i], level, lab.epsilon,
                                                     scenario.filtration_cert_horizon);
        });
        long n0 = scenario.filtration_cert_horizon + 1;
        for (long cand = 0; cand <= scenario.filtration_cert_horizon; ++cand) {
            long covered = 0;
            for (long o : onsets) covered += (o <= cand) ? 1 : 0;
            if (static_cast<double>(covered) / onsets.size() > 1.0 - gamma) {
                n0 = cand;
                break;
            }
        }
        FiltrationContext fctx;
        fctx.cache = &cache;
        fctx.eps = lab.epsilon;
        fctx.a = lab.a;
        fctx.nu = scenario.generator.holder_exponent();
        fctx.ell = ell;
        fctx.n0 = n0;
        fctx.cert_horizon = scenario.filtration_cert_horizon;
        for (std::size_t i = 0; i < lab.samples.size(); ++i)
            if (onsets[i] <= n0) fctx.members.push_back(lab.samples[i]);

        auto pairs = stratified_pairs(cache, fctx.members, scenario.pair_count,
                                      scenario.distance_bins);
        const double lam_i = spec.exponents[level - 1];
        const double threshold = std::pow(std::exp(lam_i + lab.epsilon) / lab.a,
                                          static_cast<double>(n0));
        long verified = 0, passed = 0;
        std::vector<std::pair<double, double>> fit_pts;
        for (const auto& p : pairs) {
            if (!(std::pow(p.distance, fctx.nu) < threshold)) continue;
            HolderPairReport rep = verify_filtration_holder(fctx, p.ix, p.iy, level);
            append_pair_row(pair_csv, "filtration", rep);
            ++verified;
            passed += rep.pass ? 1 : 0;
            all_pass = all_pass && rep.pass;
            if (rep.measured > 0.0) fit_pts.emplace_back(rep.base_distance, rep.measured);
        }
        if (verified == 0) all_pass = false;
        json ls;
        ls["level"] = level;
        ls["n0"] = n0;
        ls["member_count"] = static_cast<int>(fctx.members.size());
        ls["pairs_verified"] = verified;
        ls["pairs_passed"] = passed;
        ls["distance_threshold_nu"] = threshold;
        try {
            HolderFit fit = fit_holder_exponent(fit_pts);
            ls["fit_exponent"] = fit.exponent;
            ls["fit_r_squared"] = fit.r_squared;
        } catch (const Error& e) {
            ls["fit_error"] = e.what();
        }
        level_summaries.push_back(ls);
    }
    writer.add("filtration_pairs.csv", pair_csv.str());

    // Block decomposition audit on the first few samples.
    std::ostringstream blocks;
    blocks << "index,level,window,sum_defect_rel,invariance_defect_rel,min_b_gain,"
              "recursion_defect_rel\n";
    double worst_sum = 0.0, worst_rec = 0.0;
    int audit_points = std::min<int>(8, static_cast<int>(lab.samples.size()));
    for (int i = 0; i < audit_points; ++i) {
        for (long lv : levels) {
            BlockDecomposition big =
                block_cocycle(cache, lab.samples[i], static_cast<int>(lv) - 1, scenario.block_window);
            BlockDecomposition small =
                block_cocycle(cache, lab.samples[i], static_cast<int>(lv) - 1, 8);
            worst_sum = std::max(worst_sum, big.sum_defect_rel);
            worst_rec = std::max(worst_rec, small.recursion_defect_rel);
            blocks << lab.samples[i] << "," << lv << "," << scenario.block_window << ","
                   << format_double(big.sum_defect_rel) << ","
                   << format_double(big.invariance_defect_rel) << ","
                   << format_double(big.min_b_gain) << ","
                   << format_double(small.recursion_defect_rel) << "\n";
        }
    }
    writer.add("blocks_audit.csv", blocks.str());
    writer.time_stage("compute", compute.seconds());

    all_pass = all_pass && worst_sum <= 1e-10 && worst_rec <= 1e-10;
    json summary;
    summary["ell"] = ell;
    summary["a"] = lab.a;
    summary["epsilon"] = lab.epsilon;
    summary["levels"] = level_summaries;
    summary["block_sum_defect_max"] = worst_sum;
    summary["block_recursion_defect_max"] = worst_rec;
    summary["all_pass"] = all_pass;
    writer.add("filtration_summary.json", summary.dump(1) + "\n");
    writer.time_stage("total", total.seconds());
    return writer.finish(all_pass ? 0 : 3);
}

RunResult run_lemma_lab(const Scenario& scenario, const std::string& out_dir, int threads) {
    (void)threads;
    Stopwatch total;
    OutputWriter writer(out_dir, scenario);
    std::ostringstream csv;
    csv << "seed,dim,dim_e,alpha1,alpha2,ell,a,delta,n_star,measured,bound,slack,cone_worst,pass\n";
    const int dims[] = {2, 3, 4, 6};
    int pass = 0, totaln = 0;
    Stopwatch compute;
    for (int dim : dims) {
        for (std::uint64_t s = 0; s < 25; ++s) {
            std::uint64_t seed = scenario.seed * 1000 + dim * 100 + s;
            SplitMix64 rng(seed);
            double alpha2 = rng.next_in(0.3, 0.8);
            double alpha1 = rng.next_in(1.5, 4.0);
            double ell = rng.next_in(1.0, 3.0);
            int dim_e = 1 + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(dim - 1));
            double pert = std::pow(10.0, rng.next_in(-5.0, -1.3));
            L5Instance inst = synthesize_l5_instance(seed, dim, dim_e, alpha1, alpha2, ell, pert);
            L5Report rep = check_lemma_l5(inst);
            bool ok = rep.pass && rep.cone_ok;
            ++totaln;
            pass += ok ? 1 : 0;
            csv << seed << "," << dim << "," << dim_e << "," << format_double(alpha1) << ","
                << format_double(alpha2) << "," << format_double(ell) << ","
                << format_double(inst.a) << "," << format_double(inst.delta) << "," << inst.n_star
                << "," << format_double(rep.measured) << "," << format_double(rep.bound) << ","
                << format_double(rep.slack) << "," << format_double(rep.cone_worst) << ","
                << (ok ? 1 : 0) << "\n";
        }
    }
    writer.time_stage("compute", compute.seconds());
    writer.add("l5_instances.csv", csv.str());
    json summary;
    summary["instances"] = totaln;
    summary["passed"] = pass;
    summary["all_pass"] = pass == totaln;
    writer.add("l5_summary.json", summary.dump(1) + "\n");
    writer.time_stage("total", total.seconds());
    return writer.finish(pass == totaln ? 0 : 3);
}

}  // namespace oselab
