#include "oselab/subspace.hpp"

#include <algorithm>
#include <cmath>

#include "oselab/quasirandom.hpp"

namespace oselab {

namespace {

Matrix orthonormalize_or_throw(const Matrix& basis) {
    if (basis.cols() == 0) return basis;
    Eigen::JacobiSVD<Matrix> svd(basis, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    if (sv[sv.size() - 1] <= kRankTol * sv[0])
        throw RankDeficientBasis("basis columns are numerically dependent");
    return svd.matrixU();
}

void check_compatible(const Subspace& e, const Subspace& f) {
    if (e.ambient_dim() != f.ambient_dim())
        throw AmbientMismatch("subspaces live in different ambient dimensions");
    if (e.norm() != f.norm()) throw NormMismatch("subspaces carry different norms");
}

// Covering-radius based bound for sampled suprema of 1-Lipschitz functions
// on the lp unit sphere of a p-dimensional subspace.
double outer_resolution(int ambient, int subspace_dim, int samples) {
    if (subspace_dim <= 1) return 0.0;
    return 4.0 * ambient * sphere_covering_radius(subspace_dim, samples);
}

// Subsets of {0..n-1} of size k, lexicographic.
bool next_combination(std::vector<int>& idx, int n) {
    int k = static_cast<int>(idx.size());
    for (int i = k - 1; i >= 0; --i) {
        if (idx[i] < n - k + i) {
            ++idx[i];
            for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
            return true;
        }
    }
    return false;
}

double dist_l2(const Vector& v, const Matrix& b, Vector* c_out) {
    if (b.cols() == 0) {
        if (c_out) c_out->resize(0);
        return v.norm();
    }
    Vector c = b.colPivHouseholderQr().solve(v);
    if (c_out) *c_out = c;
    return (v - b * c).norm();
}

// Least-absolute-deviations distance by vertex enumeration: some optimum
// interpolates p residuals to zero when b has full column rank.
double dist_l1(const Vector& v, const Matrix& b, Vector* c_out) {
    const int d = static_cast<int>(b.rows());
    const int p = static_cast<int>(b.cols());
    if (p == 0) {
        if (c_out) c_out->resize(0);
        return v.lpNorm<1>();
    }
    Vector c_ls = b.colPivHouseholderQr().solve(v);
    double best = (v - b * c_ls).lpNorm<1>();
    Vector best_c = c_ls;
    if (p >= d) {
        if (c_out) *c_out = best_c;
        return best;
    }
    std::vector<int> idx(p);
    for (int i = 0; i < p; ++i) idx[i] = i;
    do {
        Matrix bs(p, p);
        Vector vs(p);
        for (int i = 0; i < p; ++i) {
            bs.row(i) = b.row(idx[i]);
            vs[i] = v[idx[i]];
        }
        Eigen::FullPivLU<Matrix> lu(bs);
        if (!lu.isInvertible()) continue;
        Vector c = lu.solve(vs);
        double obj = (v - b * c).lpNorm<1>();
        if (obj < best) {
            best = obj;
            best_c = c;
        }
    } while (next_combination(idx, d));
    if (c_out) *c_out = best_c;
    return best;
}

// Chebyshev distance via enumeration of the LP vertices: p+1 active
// coordinates with a sign pattern, solved as a square system in (c, t).
double dist_linf(const Vector& v, const Matrix& b, Vector* c_out) {
    const int d = static_cast<int>(b.rows());
    const int p = static_cast<int>(b.cols());
    if (p == 0) {
        if (c_out) c_out->resize(0);
        return v.lpNorm<Eigen::Infinity>();
    }
    Vector c_ls = b.colPivHouseholderQr().solve(v);
    double best = (v - b * c_ls).lpNorm<Eigen::Infinity>();
    Vector best_c = c_ls;
    if (p >= d) {
        if (c_out) *c_out = best_c;
        return best;
    }
    const int m = p + 1;
    std::vector<int> idx(m);
    for (int i = 0; i < m; ++i) idx[i] = i;
    do {
        // Sign patterns modulo a global flip: a vertex with the flipped
        // pattern yields the same c with t negated, so |t| recovers it.
        for (int mask = 0; mask < (1 << (m - 1)); ++mask) {
            Matrix sys(m, m);
            Vector rhs(m);
            for (int i = 0; i < m; ++i) {
                double s = (i == 0) ? 1.0 : ((mask >> (i - 1)) & 1 ? 1.0 : -1.0);
                sys.block(i, 0, 1, p) = b.row(idx[i]);
                sys(i, p) = s;
                rhs[i] = v[idx[i]];
            }
            Eigen::FullPivLU<Matrix> lu(sys);
            if (!lu.isInvertible()) continue;
            Vector sol = lu.solve(rhs);
            double t = std::abs(sol[p]);
            Vector c = sol.head(p);
            double actual = (v - b * c).lpNorm<Eigen::Infinity>();
            if (actual <= t + 1e-9 * (1.0 + t) && actual < best) {
                best = actual;
                best_c = c;
            }
        }
    } while (next_combination(idx, d));
    if (c_out) *c_out = best_c;
    return best;
}

double dist_to_span(const Vector& v, const Matrix& b, NormKind k, Vector* c_out) {
    switch (k) {
        case NormKind::L1: return dist_l1(v, b, c_out);
        case NormKind::L2: return dist_l2(v, b, c_out);
        case NormKind::Linf: return dist_linf(v, b, c_out);
    }
    return 0.0;
}

// dist(v, S_F) for an lp-unit v: exact minimizer over F renormalized to the
// sphere (guarantees the value stays within twice dist(v,F)), refined by the
// l2 projection candidate and sampled sphere points.
double sphere_distance_upper(const Vector& v, const Subspace& f, NormKind k,
                             const std::vector<Vector>& f_sphere) {
    Vector c;
    dist_to_span(v, f.onb(), k, &c);
    double best = std::numeric_limits<double>::infinity();
    if (c.size() > 0) {
        Vector u = f.onb() * c;
        double n = vector_norm(u, k);
        if (n > 1e-12) best = vector_norm(v - u / n, k);
    }
    Vector u2 = f.onb() * (f.onb().transpose() * v);
    double n2 = vector_norm(u2, k);
    if (n2 > 1e-12) best = std::min(best, vector_norm(v - u2 / n2, k));
    for (const auto& u : f_sphere) {
        best = std::min(best, vector_norm(v - u, k));
        best = std::min(best, vector_norm(v + u, k));
    }
    return best;
}

}  // namespace

Subspace::Subspace(const Matrix& basis, NormKind norm) {
    ambient_ = static_cast<int>(basis.rows());
    if (basis.cols() > basis.rows()) throw RankDeficientBasis("more basis vectors than ambient dimension");
    norm_ = norm;
    raw_ = basis;
    onb_ = orthonormalize_or_throw(basis);
}

Subspace Subspace::zero(int ambient_dim, NormKind norm) {
    return Subspace(Matrix::Zero(ambient_dim, 0), norm);
}

Subspace Subspace::full(int ambient_dim, NormKind norm) {
    return Subspace(Matrix::Identity(ambient_dim, ambient_dim), norm);
}

Subspace Subspace::coordinate_span(int ambient_dim, const std::vector<int>& coords, NormKind norm) {
    Matrix b = Matrix::Zero(ambient_dim, static_cast<int>(coords.size()));
    for (int j = 0; j < static_cast<int>(coords.size()); ++j) b(coords[j], j) = 1.0;
    return Subspace(b, norm);
}

Matrix Subspace::orthogonal_complement() const {
    if (dim() == 0) return Matrix::Identity(ambient_, ambient_);
    if (dim() == ambient_) return Matrix::Zero(ambient_, 0);
    Eigen::JacobiSVD<Matrix> svd(onb_, Eigen::ComputeFullU);
    return svd.matrixU().rightCols(ambient_ - dim());
}

bool Subspace::contains(const Vector& v, double tol) const {
    double n = v.norm();
    if (n < 1e-300) return true;
    if (dim() == 0) return false;
    return (v - onb_ * (onb_.transpose() * v)).norm() <= tol * n;
}

GapValue deviation(const Subspace& e, const Subspace& f, const GapOptions& opt) {
    check_compatible(e, f);
    if (e.dim() == 0) return {0.0, 0.0};
    const NormKind k = e.norm();
    if (k == NormKind::L2) {
        if (f.dim() == 0) return {1.0, 0.0};
        Matrix proj_residual = e.onb() - f.onb() * (f.onb().transpose() * e.onb());
        return {operator_norm_l2(proj_residual), 0.0};
    }
    double sup = 0.0;
    for (const auto& v : lp_unit_samples(e, opt.outer_samples))
        sup = std::max(sup, dist_to_span(v, f.onb(), k, nullptr));
    return {sup, outer_resolution(e.ambient_dim(), e.dim(), opt.outer_samples)};
}

GapValue gap(const Subspace& e, const Subspace& f, const GapOptions& opt) {
    GapValue a = deviation(e, f, opt);
    GapValue b = deviation(f, e, opt);
    return {std::max(a.value, b.value), std::max(a.resolution, b.resolution)};
}

GapValue hausdorff_distance(const Subspace& e, const Subspace& f, const GapOptions& opt) {
    check_compatible(e, f);
    if (e.dim() == 0 || f.dim() == 0)
        throw ConfigError("Hausdorff sphere distance needs non-trivial subspaces");
    const NormKind k = e.norm();
    if (k == NormKind::L2) {
        auto one_side = [](const Subspace& a, const Subspace& b) {
            // 2 sin(theta/2) at the largest principal angle, assembled from
            // sin (residual) and cos (overlap) separately: the naive
            // sqrt(2 - 2 cos) loses half the digits near equality.
            Matrix residual = a.onb() - b.onb() * (b.onb().transpose() * a.onb());
            double sin_max = operator_norm_l2(residual);
            Eigen::JacobiSVD<Matrix> svd(b.onb().transpose() * a.onb());
            const auto& sv = svd.singularValues();
            double cos_max = sv.size() > 0 ? sv[sv.size() - 1] : 0.0;
            if (b.dim() < a.dim()) {
                sin_max = 1.0;
                cos_max = 0.0;
            }
            cos_max = std::clamp(cos_max, 0.0, 1.0);
            sin_max = std::clamp(sin_max, 0.0, 1.0);
            return sin_max * std::sqrt(2.0 / (1.0 + cos_max));
        };
        return {std::max(one_side(e, f), one_side(f, e)), 0.0};
    }
    auto e_sphere = lp_unit_samples(e, opt.inner_samples);
    auto f_sphere = lp_unit_samples(f, opt.inner_samples);
    double sup = 0.0;
    for (const auto& v : lp_unit_samples(e, opt.outer_samples))
        sup = std::max(sup, sphere_distance_upper(v, f, k, f_sphere));
    for (const auto& v : lp_unit_samples(f, opt.outer_samples))
        sup = std::max(sup, sphere_distance_upper(v, e, k, e_sphere));
    return {sup, outer_resolution(e.ambient_dim(), std::max(e.dim(), f.dim()), opt.outer_samples)};
}

Vector principal_angles(const Subspace& e, const Subspace& f) {
    check_compatible(e, f);
    Eigen::JacobiSVD<Matrix> svd(e.onb().transpose() * f.onb());
    Vector cosines = svd.singularValues();
    int n = std::min(e.dim(), f.dim());
    Vector angles(n);
    for (int i = 0; i < n; ++i) angles[i] = std::acos(std::clamp(cosines[i], -1.0, 1.0));
    std::sort(angles.data(), angles.data() + n, std::greater<double>());
    return angles;
}

double distance_to_subspace(const Vector& v, const Matrix& b, NormKind k) {
    return dist_to_span(v, b, k, nullptr);
}

std::vector<Vector> lp_unit_samples(const Subspace& s, int count) {
    std::vector<Vector> out;
    if (s.dim() == 0) return out;
    for (const auto& c : sphere_directions(s.dim(), count)) {
        Vector v = s.onb() * c;
        double n = vector_norm(v, s.norm());
        if (n > 1e-300) out.push_back(v / n);
    }
    return out;
}

DirectSum::DirectSum(std::vector<Subspace> parts, NormKind norm) : parts_(std::move(parts)), norm_(norm) {
    if (parts_.empty()) throw ConfigError("direct sum needs at least one part");
    ambient_ = parts_[0].ambient_dim();
    int total = 0;
    offsets_.resize(parts_.size());
    for (std::size_t i = 0; i < parts_.size(); ++i) {
        if (parts_[i].ambient_dim() != ambient_) throw AmbientMismatch("direct sum parts disagree on ambient");
        offsets_[i] = total;
        total += parts_[i].dim();
    }
    if (total != ambient_) throw RankDeficientBasis("direct sum dimensions do not fill the ambient space");
    stacked_.resize(ambient_, ambient_);
    for (std::size_t i = 0; i < parts_.size(); ++i)
        if (parts_[i].dim() > 0) stacked_.block(0, offsets_[i], ambient_, parts_[i].dim()) = parts_[i].onb();
    Eigen::JacobiSVD<Matrix> svd(stacked_);
    const auto& sv = svd.singularValues();
    if (sv[sv.size() - 1] <= 0.0) throw RankDeficientBasis("direct sum parts are dependent");
    condition_ = sv[0] / sv[sv.size() - 1];
    stacked_inv_ = stacked_.partialPivLu().inverse();
}

Matrix DirectSum::projection(int i) const {
    if (i < 0 || i >= count()) throw ConfigError("direct sum part index out of range");
    if (condition_ > 1e12) throw IllConditionedSplitting("splitting condition number exceeds 1e12");
    const int p = parts_[i].dim();
    if (p == 0) return Matrix::Zero(ambient_, ambient_);
    return stacked_.block(0, offsets_[i], ambient_, p) * stacked_inv_.block(offsets_[i], 0, p, ambient_);
}

ComplementationReport complementation_persists(const Subspace& e, const Subspace& e_prime,
                                               const Subspace& f, double proj_norm) {
    ComplementationReport rep;
    rep.dhat = hausdorff_distance(e, e_prime).value;
    rep.threshold = 1.0 / proj_norm;
    rep.hypothesis_holds = rep.dhat <= rep.threshold;
    Matrix stacked(e.ambient_dim(), e_prime.dim() + f.dim());
    if (e_prime.dim() > 0) stacked.leftCols(e_prime.dim()) = e_prime.onb();
    if (f.dim() > 0) stacked.rightCols(f.dim()) = f.onb();
    bool spans = (e_prime.dim() + f.dim() == e.ambient_dim());
    if (spans && stacked.cols() > 0) {
        Eigen::JacobiSVD<Matrix> svd(stacked);
        const auto& sv = svd.singularValues();
        spans = sv[sv.size() - 1] > kRankTol * sv[0];
    }
    rep.conclusion_holds = spans;
    rep.falsified = rep.hypothesis_holds && !rep.conclusion_holds;
    return rep;
}

GraphOperator graph_operator(const Subspace& eplus_x, const Subspace& eminus_x,
                             const Subspace& eplus_y, const GapOptions& opt) {
    check_compatible(eplus_x, eminus_x);
    check_compatible(eplus_x, eplus_y);
    if (eplus_x.dim() != eplus_y.dim())
        throw TransversalityFailure("graph target dimension differs from the domain");
    const int pp = eplus_x.dim();
    const int pm = eminus_x.dim();
    DirectSum split({eplus_x, eminus_x}, eplus_x.norm());
    Matrix pi_plus = split.projection(0);
    Matrix w = eplus_y.onb();
    Matrix u = pi_plus * w;
    Matrix cu = eplus_x.onb().transpose() * u;  // pp x pp
    Eigen::FullPivLU<Matrix> lu(cu);
    if (!lu.isInvertible())
        throw TransversalityFailure("projection of the graph target onto the domain is singular");
    Matrix cr(pm, pp);
    if (pm > 0) cr = eminus_x.onb().transpose() * (w - u);
    GraphOperator g{eplus_x, eminus_x, eplus_y, Matrix(), 0.0, 0.0};
    g.matrix = (pm > 0) ? Matrix(cr * lu.inverse()) : Matrix::Zero(0, pp);
    if (eplus_x.norm() == NormKind::L2) {
        g.norm_value = (pm > 0) ? operator_norm_l2(g.matrix) : 0.0;
    } else if (pm > 0) {
        double sup = 0.0;
        for (const auto& c : sphere_directions(pp, opt.outer_samples)) {
            Vector dom = eplus_x.onb() * c;
            Vector img = eminus_x.onb() * (g.matrix * c);
            double nd = vector_norm(dom, eplus_x.norm());
            if (nd > 1e-300) sup = std::max(sup, vector_norm(img, eplus_x.norm()) / nd);
        }
        g.norm_value = sup;
    }
    Matrix graph_basis = eplus_x.onb();
    if (pm > 0) graph_basis += eminus_x.onb() * g.matrix;
    Subspace graph(graph_basis, eplus_x.norm());
    g.graph_defect = hausdorff_distance(graph, eplus_y, opt).value;
    return g;
}

Matrix neumann_series(const Matrix& m, NormKind k) {
    if (m.rows() != m.cols()) throw ConfigError("neumann_series needs a square operator");
    if (operator_norm(m, k) >= 1.0) throw SeriesDivergence("operator norm is not below 1");
    const int d = static_cast<int>(m.rows());
    Matrix id = Matrix::Identity(d, d);
    return (id + m).partialPivLu().solve(id) - id;
}

GraphOperator neumann_inverse(const GraphOperator& l, const GapOptions& opt) {
    if (l.norm_value >= 1.0) throw SeriesDivergence("graph operator norm is not below 1");
    const int pp = l.domain.dim();
    const int pm = l.codomain.dim();
    Matrix gm = l.domain.onb();
    if (pm > 0) gm += l.codomain.onb() * l.matrix;
    Matrix w = l.graph_target.onb();
    // Phi^-1 per target basis vector: solve u + Lu = w for u in the domain.
    Matrix cu = gm.colPivHouseholderQr().solve(w);  // pp x pp
    GraphOperator inv{l.graph_target, l.codomain, l.domain, Matrix(), 0.0, 0.0};
    inv.matrix = (pm > 0) ? Matrix(-l.matrix * cu) : Matrix::Zero(0, pp);
    if (l.domain.norm() == NormKind::L2) {
        inv.norm_value = (pm > 0) ? operator_norm_l2(inv.matrix) : 0.0;
    } else if (pm > 0) {
        double sup = 0.0;
        for (const auto& c : sphere_directions(pp, opt.outer_samples)) {
            Vector dom = l.graph_target.onb() * c;
            Vector img = l.codomain.onb() * (inv.matrix * c);
            double nd = vector_norm(dom, l.domain.norm());
            if (nd > 1e-300) sup = std::max(sup, vector_norm(img, l.domain.norm()) / nd);
        }
        inv.norm_value = sup;
    }
    double bound = l.norm_value / (1.0 - l.norm_value);
    if (inv.norm_value > bound * (1.0 + 1e-9) + 1e-12)
        throw SeriesDivergence("inverse graph operator exceeds its geometric-series bound");
    return inv;
}

Subspace intersect_subspaces(const Subspace& a, const Subspace& b, int expected_dim) {
    check_compatible(a, b);
    const int d = a.ambient_dim();
    if (a.dim() == d || b.dim() == d) {
        const Subspace& other = (a.dim() == d) ? b : a;
        if (expected_dim >= 0 && other.dim() != expected_dim)
            throw IntersectionRankDeficit("unexpected intersection dimension");
        return other;
    }
    Matrix ann_a = a.orthogonal_complement();
    Matrix ann_b = b.orthogonal_complement();
    Matrix stacked(ann_a.cols() + ann_b.cols(), d);
    stacked.topRows(ann_a.cols()) = ann_a.transpose();
    stacked.bottomRows(ann_b.cols()) = ann_b.transpose();
    Eigen::JacobiSVD<Matrix> svd(stacked, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    double cutoff = std::max(kRankTol * (sv.size() ? sv[0] : 0.0), 1e-12);
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv[i] > cutoff) ++rank;
    int null_dim = d - rank;
    if (expected_dim >= 0 && null_dim != expected_dim)
        throw IntersectionRankDeficit("numerical intersection dimension mismatch");
    if (null_dim == 0) return Subspace::zero(d, a.norm());
    return Subspace(svd.matrixV().rightCols(null_dim), a.norm());
}

}  // namespace oselab
