#include "oselab/base_system.hpp"

#include <cmath>
#include <sstream>

#include "oselab/quasirandom.hpp"

namespace oselab {

namespace {

double reduce_unit(double v) {
    double r = v - std::floor(v);
    if (r >= 1.0) r -= 1.0;  // guards against floor rounding at the seam
    if (r < 0.0) r += 1.0;
    return r;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// Toral coordinates are snapped to this dyadic grid. Integer-matrix steps on
// the grid are then exact in double arithmetic (row sums stay far below the
// 53-bit budget), which makes forward/backward iteration bit-exactly inverse.
constexpr double kDyadicScale = 1099511627776.0;  // 2^40

double snap_dyadic(double v) { return reduce_unit(std::round(reduce_unit(v) * kDyadicScale) / kDyadicScale); }

// Odd prime modulus of the expanding-map lattice; 2 is a primitive root, so
// the doubling orbit period is Q - 1.
constexpr std::int64_t kLatticeModulus = 499999999999999883LL;

std::int64_t snap_lattice(double v) {
    double r = reduce_unit(v);
    auto p = static_cast<std::int64_t>(std::llround(r * static_cast<double>(kLatticeModulus)));
    p %= kLatticeModulus;
    if (p < 0) p += kLatticeModulus;
    return p;
}

double lattice_view(std::int64_t p) {
    return static_cast<double>(p) / static_cast<double>(kLatticeModulus);
}

std::int64_t lattice_step(std::int64_t p, int factor) {
    __int128 v = static_cast<__int128>(p) * factor;
    return static_cast<std::int64_t>(v % kLatticeModulus);
}

}  // namespace

BaseSystem BaseSystem::toral_automorphism(const Eigen::MatrixXi& m) {
    if (m.rows() != m.cols() || m.rows() < 1) throw ConfigError("toral automorphism needs a square matrix");
    double det = m.cast<double>().determinant();
    if (std::abs(std::abs(det) - 1.0) > 1e-9)
        throw ConfigError("toral automorphism matrix must have determinant +-1");
    BaseSystem s;
    s.kind_ = MapKind::ToralAutomorphism;
    s.dim_ = static_cast<int>(m.rows());
    s.invertible_ = true;
    s.mat_ = m.cast<double>();
    // Integer inverse: round the double inverse entrywise.
    Eigen::MatrixXd inv = s.mat_.inverse();
    s.mat_inv_ = inv.unaryExpr([](double v) { return std::round(v); });
    Eigen::JacobiSVD<Eigen::MatrixXd> svd_f(s.mat_);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd_b(s.mat_inv_);
    s.lip_fwd_ = svd_f.singularValues()[0];
    s.lip_bwd_ = svd_b.singularValues()[0];
    std::ostringstream os;
    os << "toral_automorphism:" << m;
    s.tag_ = fnv1a(os.str());
    return s;
}

BaseSystem BaseSystem::circle_rotation(double angle) {
    BaseSystem s;
    s.kind_ = MapKind::CircleRotation;
    s.dim_ = 1;
    s.invertible_ = true;
    s.angle_ = angle;
    s.lip_fwd_ = 1.0;
    s.lip_bwd_ = 1.0;
    std::ostringstream os;
    os.precision(17);
    os << "circle_rotation:" << angle;
    s.tag_ = fnv1a(os.str());
    return s;
}

BaseSystem BaseSystem::doubling_map() {
    BaseSystem s;
    s.kind_ = MapKind::DoublingMap;
    s.dim_ = 1;
    s.invertible_ = false;
    s.symbols_ = 2;
    s.lip_fwd_ = 2.0;
    s.tag_ = fnv1a("doubling_map");
    return s;
}

BaseSystem BaseSystem::full_shift(int symbols) {
    if (symbols < 2) throw ConfigError("full shift needs at least 2 symbols");
    BaseSystem s;
    s.kind_ = MapKind::FullShift;
    s.dim_ = 1;
    s.invertible_ = false;
    s.symbols_ = symbols;
    s.lip_fwd_ = symbols;
    std::ostringstream os;
    os << "full_shift:" << symbols;
    s.tag_ = fnv1a(os.str());
    return s;
}

double BaseSystem::lipschitz_backward() const {
    if (!invertible_) throw NegativeIterateOfNonInvertible("backward Lipschitz constant undefined");
    return lip_bwd_;
}

std::string BaseSystem::describe() const {
    switch (kind_) {
        case MapKind::ToralAutomorphism: {
            std::ostringstream os;
            os << "toral_automorphism(d=" << dim_ << ")";
            return os.str();
        }
        case MapKind::CircleRotation: return "circle_rotation";
        case MapKind::DoublingMap: return "doubling_map";
        case MapKind::FullShift: return "full_shift";
    }
    return "?";
}

BasePoint BaseSystem::make_point(const Eigen::VectorXd& coords) const {
    if (coords.size() != dim_) throw ConfigError("point dimension does not match the base space");
    BasePoint p;
    p.space_tag = tag_;
    switch (kind_) {
        case MapKind::ToralAutomorphism:
            p.coords = coords.unaryExpr([](double v) { return snap_dyadic(v); });
            break;
        case MapKind::DoublingMap:
        case MapKind::FullShift:
            p.lattice = snap_lattice(coords[0]);
            p.coords.resize(1);
            p.coords[0] = lattice_view(p.lattice);
            break;
        case MapKind::CircleRotation:
            p.coords = coords.unaryExpr([](double v) { return reduce_unit(v); });
            break;
    }
    return p;
}

BasePoint BaseSystem::step_once(const BasePoint& x, bool backward) const {
    BasePoint y;
    y.space_tag = tag_;
    switch (kind_) {
        case MapKind::ToralAutomorphism:
            y.coords = ((backward ? mat_inv_ : mat_) * x.coords)
                           .unaryExpr([](double v) { return reduce_unit(v); });
            return y;
        case MapKind::CircleRotation:
            y.coords = x.coords;
            y.coords[0] = reduce_unit(y.coords[0] + (backward ? -angle_ : angle_));
            return y;
        case MapKind::DoublingMap:
        case MapKind::FullShift:
            y.lattice = lattice_step(x.lattice, symbols_);
            y.coords.resize(1);
            y.coords[0] = lattice_view(y.lattice);
            return y;
    }
    return y;
}

BasePoint BaseSystem::evaluate_map(const BasePoint& x, long n) const {
    if (x.space_tag != tag_) throw SpaceMismatch("point belongs to a different base system");
    if (n < 0 && !invertible_)
        throw NegativeIterateOfNonInvertible("negative iterate of a non-invertible map");
    BasePoint y = x;
    for (long i = 0; i < std::labs(n); ++i) y = step_once(y, n < 0);
    return y;
}

double BaseSystem::metric(const BasePoint& x, const BasePoint& y) const {
    if (x.space_tag != tag_ || y.space_tag != tag_)
        throw SpaceMismatch("metric arguments from different base systems");
    double acc = 0.0;
    for (int j = 0; j < dim_; ++j) {
        double w = std::abs(x.coords[j] - y.coords[j]);
        w = std::min(w, 1.0 - w);
        acc += w * w;
    }
    return std::sqrt(acc);
}

SampledMeasure sample_points(const BaseSystem& system, SampleScheme scheme, int count,
                             std::uint64_t seed) {
    if (count < 1) throw ConfigError("sample count must be at least 1");
    SampledMeasure out;
    out.seed = seed;
    out.scheme = scheme;
    out.points.reserve(count);
    SplitMix64 rng(seed);
    if (scheme == SampleScheme::IidUniform) {
        for (int i = 0; i < count; ++i) {
            Eigen::VectorXd c(system.dimension());
            for (int j = 0; j < system.dimension(); ++j) c[j] = rng.next_unit();
            out.points.push_back(system.make_point(c));
        }
        return out;
    }
    Eigen::VectorXd c(system.dimension());
    for (int j = 0; j < system.dimension(); ++j) c[j] = rng.next_unit();
    BasePoint x = system.make_point(c);
    x = system.evaluate_map(x, 1000);  // transient toward measure-typical behavior
    for (int i = 0; i < count; ++i) {
        out.points.push_back(x);
        x = system.step(x);
    }
    return out;
}

LipschitzEstimate lipschitz_estimate(const BaseSystem& system,
                                     const std::vector<std::pair<BasePoint, BasePoint>>& pairs) {
    if (pairs.empty()) throw ConfigError("lipschitz_estimate needs at least one pair");
    LipschitzEstimate est;
    est.has_backward = system.invertible();
    for (const auto& [x, y] : pairs) {
        double d0 = system.metric(x, y);
        if (d0 <= 0.0) throw ConfigError("lipschitz_estimate pairs must be distinct");
        double df = system.metric(system.step(x), system.step(y));
        est.forward = std::max(est.forward, df / d0);
        if (system.invertible()) {
            double db = system.metric(system.evaluate_map(x, -1), system.evaluate_map(y, -1));
            est.backward = std::max(est.backward, db / d0);
        }
    }
    return est;
}

}  // namespace oselab
