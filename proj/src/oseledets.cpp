#include "oselab/oseledets.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace oselab {

namespace {

// Thin QR with positive diagonal; returns Q, accumulates log |diag R| into logs.
Matrix qr_positive(const Matrix& z, Vector* logs) {
    Eigen::HouseholderQR<Matrix> qr(z);
    Matrix q = qr.householderQ() * Matrix::Identity(z.rows(), z.cols());
    Matrix r = q.transpose() * z;
    for (int i = 0; i < z.cols(); ++i) {
        double rii = r(i, i);
        if (rii < 0.0) q.col(i) = -q.col(i);
        if (logs) (*logs)[i] += std::log(std::max(std::abs(rii), 1e-300));
    }
    return q;
}

// Frame columns ordered by descending accumulated stretch. Pushed frames
// sort themselves only for generic starts; exactly aligned starts (constant
// diagonal generators) keep their original column order, so the observed
// rates decide.
Matrix sort_frame_by_rate(const Matrix& frame, const Vector& logs) {
    const int d = static_cast<int>(frame.cols());
    std::vector<int> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return logs[a] > logs[b]; });
    Matrix out(frame.rows(), d);
    for (int i = 0; i < d; ++i) out.col(i) = frame.col(order[i]);
    return out;
}

std::vector<double> sorted_desc(Vector v) {
    std::vector<double> out(v.data(), v.data() + v.size());
    std::sort(out.begin(), out.end(), std::greater<double>());
    return out;
}

}  // namespace

int LyapunovSpectrum::offset(int i) const {
    int o = 0;
    for (int l = 0; l < i; ++l) o += multiplicities.at(l);
    return o;
}

double LyapunovSpectrum::min_gap() const {
    double g = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < exponents.size(); ++i)
        g = std::min(g, exponents[i] - exponents[i + 1]);
    return g;
}

namespace {

LyapunovSpectrum spectrum_run(const CocycleGenerator& gen, const BaseSystem& system,
                              const BasePoint& x, long horizon, double grouping_tol) {
    const int d = gen.dimension();
    Matrix q = Matrix::Identity(d, d);
    Vector logs = Vector::Zero(d);
    std::vector<double> half;
    BasePoint p = x;
    for (long n = 0; n < horizon; ++n) {
        q = qr_positive(gen.evaluate(system, p) * q, &logs);
        p = system.step(p);
        if (n + 1 == horizon / 2) {
            Vector r = logs / static_cast<double>(horizon / 2);
            half = sorted_desc(r);
        }
    }
    LyapunovSpectrum spec;
    spec.dimension = d;
    spec.horizon = horizon;
    spec.grouping_tol = grouping_tol;
    spec.raw = sorted_desc(logs / static_cast<double>(horizon));
    if (!half.empty()) {
        double drift = 0.0;
        for (int i = 0; i < d; ++i) drift = std::max(drift, std::abs(spec.raw[i] - half[i]));
        if (drift > 10.0 * grouping_tol)
            throw HorizonTooShort("half-horizon exponents drift beyond 10 x grouping tolerance");
    }
    // Merge raw rates closer than the tolerance.
    std::size_t i = 0;
    while (i < spec.raw.size()) {
        std::size_t j = i + 1;
        double sum = spec.raw[i];
        while (j < spec.raw.size() && spec.raw[j - 1] - spec.raw[j] <= grouping_tol) {
            sum += spec.raw[j];
            ++j;
        }
        spec.exponents.push_back(sum / static_cast<double>(j - i));
        spec.multiplicities.push_back(static_cast<int>(j - i));
        i = j;
    }
    return spec;
}

}  // namespace

LyapunovSpectrum lyapunov_spectrum(const CocycleGenerator& gen, const BaseSystem& system,
                                   const BasePoint& x, long horizon, double grouping_tol) {
    if (horizon < 64) throw ConfigError("spectrum horizon must be at least 64");
    return spectrum_run(gen, system, x, horizon, grouping_tol);
}

OrbitCache::OrbitCache(const CocycleGenerator& gen, const BaseSystem& system,
                       const BasePoint& anchor, long lo, long hi, long margin,
                       const LyapunovSpectrum& spectrum, bool backward_flags)
    : gen_(&gen),
      system_(&system),
      spectrum_(spectrum),
      lo_(lo),
      hi_(hi),
      margin_(margin),
      backward_flags_(backward_flags) {
    if (hi < lo || margin < 1) throw ConfigError("bad orbit cache window");
    if (backward_flags && !(system.invertible() && gen.invertible()))
        throw NegativeIterateOfNonInvertible("backward flags need an invertible cocycle and base");
    pts_lo_ = backward_flags ? lo - margin : lo;
    if (!system.invertible() && pts_lo_ < 0)
        throw NegativeIterateOfNonInvertible("orbit window reaches negative iterates");
    pts_hi_ = hi + margin;
    const long n = pts_hi_ - pts_lo_ + 1;
    points_.reserve(n);
    BasePoint p = system.evaluate_map(anchor, pts_lo_);
    for (long j = 0; j < n; ++j) {
        points_.push_back(p);
        p = system.step(p);
    }
    mats_.reserve(n);
    for (long j = 0; j < n; ++j) mats_.push_back(gen.evaluate(system, points_[j]));
    if (gen.invertible()) {
        mats_inv_.reserve(n);
        for (long j = 0; j < n; ++j) mats_inv_.push_back(gen.evaluate_inverse(system, points_[j]));
    }

    const int d = gen.dimension();
    // Forward slow flags: descending pass with transposes; the frame at index j
    // carries the singular flags of the forward cocycle based at j, columns
    // ordered fast to slow by the accumulated stretches.
    v_frames_.assign(hi - lo + 1, Matrix());
    {
        Matrix g = Matrix::Identity(d, d);
        Vector logs = Vector::Zero(d);
        for (long j = pts_hi_ - 1; j >= lo; --j) {
            g = qr_positive(matrix(j).transpose() * g, &logs);
            if (j <= hi) v_frames_[j - lo] = sort_frame_by_rate(g, logs);
        }
    }
    // Backward fast sums: ascending pass with inverse transposes; the frame
    // stored at j is the product accumulated up to j-1, columns ordered by
    // descending backward growth (i.e. slow-forward first).
    if (backward_flags) {
        eplus_frames_.assign(hi - lo + 1, Matrix());
        Matrix h = Matrix::Identity(d, d);
        Vector logs = Vector::Zero(d);
        for (long j = pts_lo_; j <= hi; ++j) {
            if (j >= lo) eplus_frames_[j - lo] = sort_frame_by_rate(h, logs);
            h = qr_positive(matrix_inverse(j).transpose() * h, &logs);
        }
    }

    const int g_count = spectrum_.groups();
    groups_.assign(hi - lo + 1, {});
    proj_fast_.assign(hi - lo + 1, {});
    proj_slow_.assign(hi - lo + 1, {});
    for (long j = lo; j <= hi; ++j) {
        auto& gs = groups_[j - lo];
        if (backward_flags) {
            gs.reserve(g_count);
            for (int i = 0; i < g_count; ++i)
                gs.push_back(intersect_subspaces(slow_flag(j, i), fast_sum_flag(j, i),
                                                 spectrum_.multiplicities[i]));
            auto& pf = proj_fast_[j - lo];
            auto& ps = proj_slow_[j - lo];
            for (int i = 0; i < g_count; ++i) {
                Subspace plus = fast_sum_flag(j, i);
                Subspace minus = slow_flag(j, i + 1);
                DirectSum split({plus, minus}, gen.norm());
                pf.push_back(operator_norm(split.projection(0), gen.norm()));
                ps.push_back(operator_norm(split.projection(1), gen.norm()));
            }
        }
    }
}

const BasePoint& OrbitCache::point(long j) const {
    if (j < pts_lo_ || j > pts_hi_) throw ConfigError("orbit index outside the cached window");
    return points_[j - pts_lo_];
}

const Matrix& OrbitCache::matrix(long j) const {
    if (j < pts_lo_ || j > pts_hi_) throw ConfigError("orbit index outside the cached window");
    return mats_[j - pts_lo_];
}

const Matrix& OrbitCache::matrix_inverse(long j) const {
    if (mats_inv_.empty()) throw SingularGenerator("generator has no inverse field");
    if (j < pts_lo_ || j > pts_hi_) throw ConfigError("orbit index outside the cached window");
    return mats_inv_[j - pts_lo_];
}

Subspace OrbitCache::slow_flag(long j, int level) const {
    if (j < lo_ || j > hi_) throw ConfigError("flag index outside the cached window");
    const int d = spectrum_.dimension;
    const int off = spectrum_.offset(level);
    if (off >= d) return Subspace::zero(d, gen_->norm());
    return Subspace(v_frames_[j - lo_].rightCols(d - off), gen_->norm());
}

Subspace OrbitCache::fast_sum_flag(long j, int level) const {
    if (!backward_flags_) throw ConfigError("cache was built without backward flags");
    if (j < lo_ || j > hi_) throw ConfigError("flag index outside the cached window");
    const int cum = spectrum_.cumulative(level);
    return Subspace(eplus_frames_[j - lo_].rightCols(cum), gen_->norm());
}

const Subspace& OrbitCache::group(long j, int i) const {
    if (j < lo_ || j > hi_) throw ConfigError("group index outside the cached window");
    return groups_[j - lo_].at(i);
}

double OrbitCache::fast_projection_norm(long j, int level) const {
    return proj_fast_.at(j - lo_).at(level);
}

double OrbitCache::slow_projection_norm(long j, int level) const {
    return proj_slow_.at(j - lo_).at(level);
}

DirectSum OseledetsSplitting::direct_sum(NormKind norm) const {
    return DirectSum(groups, norm);
}

OseledetsSplitting oseledets_splitting(const OrbitCache& cache, long j, int f_levels) {
    const auto& spec = cache.spectrum();
    const int g = spec.groups();
    if (f_levels < 0 || f_levels >= g) throw ConfigError("f_levels outside [0, groups)");
    OseledetsSplitting s;
    s.at = cache.point(j);
    s.orbit_index = j;
    s.k = g - f_levels;
    s.has_f = f_levels > 0;
    s.horizon = cache.margin();
    for (int i = 0; i < s.k; ++i) s.groups.push_back(cache.group(j, i));
    if (s.has_f) {
        Matrix f_basis(spec.dimension, spec.dimension - spec.offset(s.k));
        int col = 0;
        for (int i = s.k; i < g; ++i) {
            const Subspace& gi = cache.group(j, i);
            f_basis.block(0, col, spec.dimension, gi.dim()) = gi.onb();
            col += gi.dim();
        }
        s.groups.push_back(Subspace(f_basis, cache.generator().norm()));
    }
    return s;
}

OseledetsSplitting oseledets_splitting(const CocycleGenerator& gen, const BaseSystem& system,
                                       const BasePoint& x, long horizon, double grouping_tol,
                                       int f_levels) {
    LyapunovSpectrum spec = lyapunov_spectrum(gen, system, x, horizon, grouping_tol);
    OrbitCache cache(gen, system, x, 0, 0, horizon, spec, true);
    return oseledets_splitting(cache, 0, f_levels);
}

std::pair<Subspace, Subspace> fast_slow(const OrbitCache& cache, long j, int level) {
    return {cache.fast_sum_flag(j, level), cache.slow_flag(j, level + 1)};
}

std::pair<Subspace, Subspace> fast_slow(const OseledetsSplitting& splitting, int level) {
    if (level < 0 || level >= static_cast<int>(splitting.groups.size()))
        throw ConfigError("fast_slow level out of range");
    const int d = splitting.groups.front().ambient_dim();
    const NormKind k = splitting.groups.front().norm();
    auto concat = [&](std::size_t from, std::size_t to) {
        int cols = 0;
        for (std::size_t i = from; i < to; ++i) cols += splitting.groups[i].dim();
        Matrix b(d, cols);
        int at = 0;
        for (std::size_t i = from; i < to; ++i) {
            b.block(0, at, d, splitting.groups[i].dim()) = splitting.groups[i].onb();
            at += splitting.groups[i].dim();
        }
        return cols > 0 ? Subspace(b, k) : Subspace::zero(d, k);
    };
    return {concat(0, level + 1), concat(level + 1, splitting.groups.size())};
}

Filtration filtration(const OrbitCache& cache, long j) {
    const auto& spec = cache.spectrum();
    Filtration f;
    f.at = cache.point(j);
    f.orbit_index = j;
    f.horizon = cache.margin();
    for (int i = 0; i < spec.groups(); ++i) {
        f.spaces.push_back(cache.slow_flag(j, i));
        f.codims.push_back(spec.offset(i));
    }
    return f;
}

Filtration filtration(const CocycleGenerator& gen, const BaseSystem& system, const BasePoint& x,
                      long horizon, double grouping_tol) {
    LyapunovSpectrum spec = lyapunov_spectrum(gen, system, x, horizon, grouping_tol);
    OrbitCache cache(gen, system, x, 0, 0, horizon, spec, false);
    return filtration(cache, 0);
}

void choose_complements(const OrbitCache& cache, Filtration& f) {
    const NormKind k = cache.generator().norm();
    const int d = cache.spectrum().dimension;
    f.u_tilde.clear();
    f.u.clear();
    f.proj_norm_u.clear();
    f.proj_norm_v.clear();
    for (std::size_t i = 0; i < f.spaces.size(); ++i) {
        const Subspace& vi = f.spaces[i];
        Subspace vnext = (i + 1 < f.spaces.size()) ? f.spaces[i + 1] : Subspace::zero(d, k);
        // Orthogonal complement of V_{i+1} inside V_i under the reference
        // inner product.
        Matrix residual = vi.onb();
        if (vnext.dim() > 0) residual -= vnext.onb() * (vnext.onb().transpose() * vi.onb());
        Eigen::JacobiSVD<Matrix> svd(residual, Eigen::ComputeThinU);
        int keep = 0;
        for (int c = 0; c < svd.singularValues().size(); ++c)
            if (svd.singularValues()[c] > kRankTol) ++keep;
        f.u_tilde.push_back(keep > 0 ? Subspace(svd.matrixU().leftCols(keep), k)
                                     : Subspace::zero(d, k));
        Subspace ui = (vi.dim() == d) ? Subspace::zero(d, k) : Subspace(vi.orthogonal_complement(), k);
        f.u.push_back(ui);
        if (ui.dim() == 0 || vi.dim() == 0) {
            f.proj_norm_u.push_back(ui.dim() == 0 ? 0.0 : 1.0);
            f.proj_norm_v.push_back(vi.dim() == 0 ? 0.0 : 1.0);
        } else {
            DirectSum split({vi, ui}, k);
            f.proj_norm_v.push_back(operator_norm(split.projection(0), k));
            f.proj_norm_u.push_back(operator_norm(split.projection(1), k));
        }
    }
    f.complements_ready = true;
}

BlockDecomposition block_cocycle(const OrbitCache& cache, long j, int level, int n) {
    if (level < 1 || level >= cache.spectrum().groups())
        throw ConfigError("block decomposition needs a level with a non-trivial complement");
    if (n < 1) throw ConfigError("block decomposition window must be positive");
    const NormKind k = cache.generator().norm();
    const int d = cache.spectrum().dimension;

    // Projections pi_v (onto V_level) and pi_u (onto its orthogonal complement)
    // at every index of the window.
    std::vector<Matrix> pv(n + 1), pu(n + 1), qv(n + 1), qu(n + 1);
    for (int m = 0; m <= n; ++m) {
        Subspace v = cache.slow_flag(j + m, level);
        qv[m] = v.onb();
        qu[m] = v.orthogonal_complement();
        pv[m] = qv[m] * qv[m].transpose();
        pu[m] = Matrix::Identity(d, d) - pv[m];
    }

    std::vector<Matrix> bs(n), cs(n), ds(n);
    BlockDecomposition out;
    out.invariance_defect_rel = 0.0;
    double min_gain = std::numeric_limits<double>::infinity();
    for (int m = 0; m < n; ++m) {
        const Matrix& a = cache.matrix(j + m);
        bs[m] = pu[m + 1] * a * pu[m];
        cs[m] = pv[m + 1] * a * pu[m];
        ds[m] = pv[m + 1] * a * pv[m];
        double an = operator_norm(a, k);
        out.invariance_defect_rel =
            std::max(out.invariance_defect_rel, operator_norm(pu[m + 1] * a * pv[m], k) / an);
        if (qu[m].cols() > 0) {
            Eigen::JacobiSVD<Matrix> svd(qu[m + 1].transpose() * a * qu[m]);
            const auto& sv = svd.singularValues();
            min_gain = std::min(min_gain, sv[sv.size() - 1]);
        }
    }
    out.min_b_gain = std::isfinite(min_gain) ? min_gain : 0.0;
    if (out.min_b_gain <= 1e-10)
        throw BlockSingular("fast block is numerically singular on the complement");

    out.b = bs[0];
    out.c = cs[0];
    out.d = ds[0];

    // Prefix products of B, suffix products of D positioned along the orbit.
    std::vector<Matrix> b_prefix(n + 1), d_suffix(n + 1);
    b_prefix[0] = Matrix::Identity(d, d);
    for (int m = 0; m < n; ++m) b_prefix[m + 1] = bs[m] * b_prefix[m];
    d_suffix[n] = Matrix::Identity(d, d);
    for (int m = n - 1; m >= 0; --m) d_suffix[m] = d_suffix[m + 1] * ds[m];

    out.b_n = b_prefix[n];
    out.d_n = d_suffix[0];
    out.c_n = Matrix::Zero(d, d);
    for (int m = 0; m < n; ++m) out.c_n += d_suffix[m + 1] * cs[m] * b_prefix[m];

    Matrix acc = Matrix::Identity(d, d);
    for (int m = 0; m < n; ++m) acc = cache.matrix(j + m) * acc;
    out.cocycle_n = acc;
    out.c_n_direct = pv[n] * acc * pu[0];
    double an = std::max(operator_norm(acc, k), 1e-300);
    out.sum_defect_rel = operator_norm(acc - (out.b_n + out.c_n + out.d_n), k) / an;
    out.recursion_defect_rel = operator_norm(out.c_n - out.c_n_direct, k) / an;
    return out;
}

CoboundaryOracle coboundary_oracle(const CocycleGenerator& gen, const BasePoint& x) {
    if (!gen.has_conjugator() && gen.kind() != GeneratorKind::TruncatedDiagonalCompact &&
        !(gen.kind() == GeneratorKind::Constant && gen.constant_matrix().isDiagonal(1e-14)))
        throw ConfigError("closed-form oracle needs a coboundary or diagonal generator");
    Vector diag = gen.has_conjugator() || gen.kind() == GeneratorKind::TruncatedDiagonalCompact
                      ? gen.diagonal()
                      : Vector(gen.constant_matrix().diagonal());
    const int d = static_cast<int>(diag.size());
    std::vector<int> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return std::abs(diag[a]) > std::abs(diag[b]);
    });
    Matrix c = gen.conjugator_at(x);
    CoboundaryOracle oracle;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t jj = i + 1;
        while (jj < order.size() &&
               std::abs(std::log(std::abs(diag[order[jj - 1]])) -
                        std::log(std::abs(diag[order[jj]]))) <= 1e-12)
            ++jj;
        Matrix basis(d, jj - i);
        for (std::size_t l = i; l < jj; ++l) basis.col(l - i) = c.col(order[l]);
        oracle.groups.push_back(Subspace(basis, gen.norm()));
        oracle.exponents.push_back(std::log(std::abs(diag[order[i]])));
        oracle.multiplicities.push_back(static_cast<int>(jj - i));
        i = jj;
    }
    for (std::size_t g = 0; g < oracle.groups.size(); ++g) {
        int off = 0;
        for (std::size_t l = 0; l < g; ++l) off += oracle.multiplicities[l];
        Matrix basis(d, d - off);
        int col = 0;
        for (int l = off; l < d; ++l) basis.col(col++) = c.col(order[l]);
        oracle.spaces.push_back(Subspace(basis, gen.norm()));
    }
    return oracle;
}

double equivariance_defect(const OrbitCache& cache, long j, int i) {
    const Subspace& e = cache.group(j, i);
    const Subspace& e_next = cache.group(j + 1, i);
    Subspace pushed(cache.matrix(j) * e.onb(), cache.generator().norm());
    return hausdorff_distance(pushed, e_next).value;
}

}  // namespace oselab
