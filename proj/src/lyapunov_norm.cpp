#include "oselab/lyapunov_norm.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "oselab/quasirandom.hpp"

namespace oselab {

namespace {

// logsumexp accumulator.
struct LogSum {
    double max_term = -std::numeric_limits<double>::infinity();
    double acc = 0.0;  // sum of exp(term - max_term)

    void add(double term) {
        if (term == -std::numeric_limits<double>::infinity()) return;
        if (term <= max_term) {
            acc += std::exp(term - max_term);
            return;
        }
        acc = acc * std::exp(max_term - term) + 1.0;
        max_term = term;
    }
    double log_total() const {
        return acc > 0.0 ? max_term + std::log(acc) : -std::numeric_limits<double>::infinity();
    }
};

// One component of the series norm: a two-sided exponent group E_i, or the
// folded tail F (one-sided at the top tail rate).
struct NormPart {
    double lambda = 0.0;
    bool two_sided = true;
    std::function<Subspace(long)> subspace_at;
};

std::vector<NormPart> norm_parts(const OrbitCache& cache, const LyapunovNormParams& params) {
    const auto& spec = params.spectrum;
    const int g = spec.groups();
    const int k = g - params.f_levels;
    if (k > 0 && !cache.has_backward_flags())
        throw ConfigError("two-sided series components need backward flags in the cache");
    std::vector<NormPart> parts;
    for (int i = 0; i < k; ++i) {
        NormPart p;
        p.lambda = spec.exponents[i];
        p.two_sided = true;
        p.subspace_at = [&cache, i](long at) { return cache.group(at, i); };
        parts.push_back(std::move(p));
    }
    if (params.f_levels > 0) {
        NormPart p;
        p.lambda = spec.exponents[k];  // top rate of the folded tail
        p.two_sided = false;
        p.subspace_at = [&cache, k](long at) { return cache.slow_flag(at, k); };
        parts.push_back(std::move(p));
    }
    return parts;
}

DirectSum decomposition(const OrbitCache& cache, long j, const std::vector<NormPart>& parts,
                        NormKind norm) {
    std::vector<Subspace> subs;
    subs.reserve(parts.size());
    for (const auto& p : parts) subs.push_back(p.subspace_at(j));
    return DirectSum(subs, norm);
}

struct ComponentSeries {
    double log_value = -std::numeric_limits<double>::infinity();
    bool decay_warning = false;
};

// Series of one component known to lie in the part's subspace at index j0.
// The vector is pushed along the orbit and re-projected onto the cached
// invariant subspace each step: an exact-arithmetic identity that keeps
// finite precision from leaking growth across groups.
ComponentSeries component_series(const OrbitCache& cache, long j0, const NormPart& part,
                                 const Vector& u_i, double eps, long n_tr, NormKind norm) {
    ComponentSeries out;
    double u2 = u_i.norm();
    if (u2 <= 0.0) return out;
    LogSum sum;
    double head_max = -std::numeric_limits<double>::infinity();
    double tail_max = -std::numeric_limits<double>::infinity();
    auto record = [&](double term, long n) {
        sum.add(term);
        if (std::labs(n) <= n_tr / 2)
            head_max = std::max(head_max, term);
        else
            tail_max = std::max(tail_max, term);
    };
    record(std::log(vector_norm(u_i, norm)), 0);
    auto walk = [&](int dir) {
        Vector w = u_i / u2;
        double logw2 = std::log(u2);
        for (long m = 1; m <= n_tr; ++m) {
            long at = j0 + dir * m;
            w = (dir > 0) ? Vector(cache.matrix(at - 1) * w) : Vector(cache.matrix_inverse(at) * w);
            double n2 = w.norm();
            if (n2 <= 0.0) break;
            w /= n2;
            logw2 += std::log(n2);
            Subspace target = part.subspace_at(at);
            Vector proj = target.onb() * (target.onb().transpose() * w);
            double p2 = proj.norm();
            if (p2 <= 1e-8) break;  // component annihilated by noise; stop the walk
            w = proj / p2;
            logw2 += std::log(p2);
            double term = logw2 + std::log(vector_norm(w, norm)) -
                          static_cast<double>(dir * m) * part.lambda -
                          static_cast<double>(m) * eps;
            record(term, dir * m);
        }
    };
    walk(+1);
    if (part.two_sided) walk(-1);
    out.log_value = sum.log_total();
    out.decay_warning = tail_max > head_max;
    return out;
}

std::vector<Vector> probe_set(int dim, int probe_count) {
    std::vector<Vector> probes;
    for (int i = 0; i < dim; ++i) {
        Vector e = Vector::Zero(dim);
        e[i] = 1.0;
        probes.push_back(e);
    }
    for (int i = 0; i < dim; ++i)
        for (int j = i + 1; j < dim; ++j) {
            Vector v = Vector::Zero(dim);
            v[i] = 1.0;
            v[j] = 1.0;
            probes.push_back(v / std::sqrt(2.0));
        }
    int extra = probe_count - static_cast<int>(probes.size());
    if (extra > 0)
        for (const auto& v : sphere_directions(dim, extra)) probes.push_back(v);
    return probes;
}

}  // namespace

long LyapunovNormParams::truncation_for(double epsilon, double tail_target) {
    if (epsilon <= 0.0) throw ConfigError("epsilon must be positive");
    return static_cast<long>(std::ceil(2.0 * std::log(1.0 / tail_target) / epsilon));
}

void LyapunovNormParams::validate() const {
    if (epsilon <= 0.0) throw ConstraintViolation("epsilon must be positive");
    if (spectrum.groups() > 1 && epsilon >= spectrum.min_gap() / 100.0)
        throw ConstraintViolation("epsilon must stay below min gap / 100");
    if (truncation < 1) throw ConstraintViolation("series truncation must be positive");
}

double LyapunovNormParams::tail_bound() const {
    double q = std::exp(-epsilon / 2.0);
    return std::exp(-static_cast<double>(truncation) * epsilon / 2.0) / (1.0 - q);
}

LyapunovNormResult lyapunov_norm(const OrbitCache& cache, long j, const LyapunovNormParams& params,
                                 const Vector& u) {
    const NormKind norm = cache.generator().norm();
    auto parts = norm_parts(cache, params);
    LyapunovNormResult out;
    out.tail_bound = params.tail_bound();
    if (u.norm() <= 0.0) {
        out.component_values.assign(parts.size(), 0.0);
        return out;
    }
    DirectSum split = decomposition(cache, j, parts, norm);
    double total = 0.0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        Vector u_i = split.projection(static_cast<int>(i)) * u;
        if (u_i.norm() <= 1e-14 * u.norm()) {
            out.component_values.push_back(0.0);
            continue;
        }
        auto series = component_series(cache, j, parts[i], u_i, params.epsilon, params.truncation, norm);
        double v = std::exp(series.log_value);
        out.component_values.push_back(v);
        out.decay_warning = out.decay_warning || series.decay_warning;
        total += v;
    }
    out.value = total;
    return out;
}

SandwichReport lyapunov_sandwich_check(const OrbitCache& cache, long j,
                                       const LyapunovNormParams& params, long n_max,
                                       double rel_slack) {
    const NormKind norm = cache.generator().norm();
    auto parts = norm_parts(cache, params);
    SandwichReport rep;
    rep.pass = true;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const NormPart& part = parts[i];
        Subspace e_i = part.subspace_at(j);
        for (int col = 0; col < e_i.dim(); ++col) {
            Vector u = e_i.onb().col(col);
            auto base = component_series(cache, j, part, u, params.epsilon, params.truncation, norm);
            Vector w = u;
            double logw2 = 0.0;
            for (long n = 1; n <= n_max; ++n) {
                w = cache.matrix(j + n - 1) * w;
                double n2 = w.norm();
                w /= n2;
                logw2 += std::log(n2);
                Subspace target = part.subspace_at(j + n);
                Vector proj = target.onb() * (target.onb().transpose() * w);
                double p2 = proj.norm();
                if (p2 <= 1e-8) break;
                w = proj / p2;
                logw2 += std::log(p2);
                auto pushed =
                    component_series(cache, j + n, part, w, params.epsilon, params.truncation, norm);
                double log_lhs = pushed.log_value + logw2;
                SandwichRow row;
                row.level = static_cast<int>(i);
                row.n = n;
                double nn = static_cast<double>(n);
                double log_upper = nn * (part.lambda + params.epsilon) + base.log_value;
                row.upper_ratio = std::exp(log_lhs - log_upper);
                rep.worst_violation = std::max(rep.worst_violation, row.upper_ratio - 1.0);
                if (part.two_sided) {
                    double log_lower = nn * (part.lambda - params.epsilon) + base.log_value;
                    row.lower_ratio = std::exp(log_lhs - log_lower);
                    rep.worst_violation = std::max(rep.worst_violation, 1.0 - row.lower_ratio);
                } else {
                    row.lower_ratio = 1.0;
                }
                row.ok = row.upper_ratio <= 1.0 + rel_slack && row.lower_ratio >= 1.0 - rel_slack;
                rep.pass = rep.pass && row.ok;
                rep.rows.push_back(row);
            }
        }
    }
    return rep;
}

DEpsilonResult d_epsilon(const OrbitCache& cache, long j, const LyapunovNormParams& params,
                         int probe_count) {
    const int d = params.spectrum.dimension;
    if (probe_count < 2 * d) throw ConfigError("d_epsilon needs at least 2*dim probes");
    const NormKind norm = cache.generator().norm();
    auto probes = probe_set(d, probe_count);
    DEpsilonResult out;
    out.probe_count = static_cast<int>(probes.size());
    double best = 1.0;
    for (const auto& u : probes) {
        auto r = lyapunov_norm(cache, j, params, u);
        best = std::max(best, r.value / vector_norm(u, norm));
    }
    out.value = best;
    return out;
}

double c_function(const OrbitCache& cache, long j, int level, double epsilon, long horizon) {
    const auto& spec = cache.spectrum();
    const NormKind norm = cache.generator().norm();
    const int g = spec.groups();
    if (level < 0 || level >= g) throw ConfigError("c_function level out of range");
    const double lam_i = spec.exponents[level];
    const bool has_minus = level + 1 < g;
    const double lam_next = has_minus ? spec.exponents[level + 1] : 0.0;

    // Slow-sum envelope: forward push re-projected onto the invariant slow
    // flag at every index (identity in exact arithmetic; stops the machine
    // noise from riding the top rate).
    Matrix mminus = has_minus ? Matrix(cache.slow_flag(j, level + 1).onb()) : Matrix();
    double log_minus = 0.0;
    double c = 1.0;
    for (long n = 1; has_minus && n <= horizon; ++n) {
        Subspace target = cache.slow_flag(j + n, level + 1);
        mminus = target.onb() * (target.onb().transpose() * (cache.matrix(j + n - 1) * mminus));
        double sm = mminus.cwiseAbs().maxCoeff();
        mminus /= sm;
        log_minus += std::log(sm);
        double log_norm_minus = std::log(operator_norm(mminus, norm)) + log_minus;
        c = std::max(c, std::exp(log_norm_minus - static_cast<double>(n) * (lam_next + epsilon)));
    }
    // Fast-sum gain: the smallest stretch of a forward product is the
    // reciprocal largest stretch of the inverse restricted to the pushed
    // flag, which is numerically benign (largest values dominate).
    for (long n = 1; n <= horizon; ++n) {
        Matrix w = cache.fast_sum_flag(j + n, level).onb();
        double acc = 0.0;
        for (long m = n - 1; m >= 0; --m) {
            w = cache.matrix_inverse(j + m) * w;
            Subspace target = cache.fast_sum_flag(j + m, level);
            w = target.onb() * (target.onb().transpose() * w);
            double s = w.cwiseAbs().maxCoeff();
            w /= s;
            acc += std::log(s);
        }
        double log_inv_norm = std::log(operator_norm(w, norm)) + acc;
        c = std::max(c, std::exp(static_cast<double>(n) * (lam_i - epsilon) + log_inv_norm));
    }
    return c;
}

double k_function(const OrbitCache& cache, long j, int level, double epsilon, long horizon) {
    double k_val = 1.0;
    long lo = std::max(cache.lo(), j - horizon);
    long hi = std::min(cache.hi(), j + horizon);
    for (long m = lo; m <= hi; ++m) {
        double p = std::max(cache.fast_projection_norm(m, level), cache.slow_projection_norm(m, level));
        double discounted = p / std::exp(std::labs(m - j) * epsilon);
        k_val = std::max(k_val, discounted);
    }
    return k_val;
}

RegularSet build_regular_set(const OrbitCache& cache, const std::vector<long>& samples,
                             const std::vector<int>& levels, double epsilon, long horizon,
                             std::optional<double> ell, std::optional<double> gamma,
                             double ell_cap) {
    if (samples.empty()) throw ConfigError("regular set needs sample points");
    if (!ell && !gamma) throw ConfigError("regular set needs either ell or gamma");
    RegularSet out;
    out.records.reserve(samples.size());
    for (long idx : samples) {
        RegularityRecord rec;
        rec.index = idx;
        for (int lv : levels) {
            double c = c_function(cache, idx, lv, epsilon, horizon);
            double k = k_function(cache, idx, lv, epsilon, horizon);
            rec.c_per_level.push_back(c);
            rec.k_per_level.push_back(k);
            rec.c_val = std::max(rec.c_val, c);
            rec.k_val = std::max(rec.k_val, k);
        }
        rec.max_val = std::max(rec.c_val, rec.k_val);
        out.records.push_back(rec);
    }
    auto members_for = [&](double level) {
        std::vector<long> m;
        for (const auto& r : out.records)
            if (r.max_val <= level) m.push_back(r.index);
        return m;
    };
    if (ell) {
        out.ell = *ell;
        out.gamma_target = gamma.value_or(0.0);
        out.members = members_for(out.ell);
        out.measure_estimate = static_cast<double>(out.members.size()) / samples.size();
        return out;
    }
    out.gamma_target = *gamma;
    for (double cand = 1.0; cand <= ell_cap; cand += 1.0) {
        auto m = members_for(cand);
        double frac = static_cast<double>(m.size()) / samples.size();
        if (frac > 1.0 - *gamma) {
            out.ell = cand;
            out.members = std::move(m);
            out.measure_estimate = frac;
            return out;
        }
    }
    throw UnreachableGamma("no ell below the cap reaches the target fraction");
}

}  // namespace oselab
