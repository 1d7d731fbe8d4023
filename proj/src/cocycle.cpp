#include "oselab/cocycle.hpp"

#include <cmath>

namespace oselab {

namespace {
constexpr int kRenormEvery = 16;
}

void ScaledOperator::renormalize() {
    double s = mat.cwiseAbs().maxCoeff();
    if (s > 0.0 && std::isfinite(s)) {
        mat /= s;
        log_scale += std::log(s);
    }
}

void ScaledOperator::apply_left(const Matrix& a, int& counter) {
    mat = a * mat;
    if (++counter >= kRenormEvery) {
        renormalize();
        counter = 0;
    }
}

double ScaledOperator::log_norm(NormKind k) const {
    double n = operator_norm(mat, k);
    return n > 0.0 ? std::log(n) + log_scale : -std::numeric_limits<double>::infinity();
}

Matrix ScaledOperator::dense() const {
    double cap = std::log(1e280 / std::max(1.0, mat.cwiseAbs().maxCoeff()));
    if (log_scale > cap) throw SeriesDivergence("scaled operator overflows double range");
    return mat * std::exp(log_scale);
}

ScaledOperator cocycle_scaled(const CocycleGenerator& gen, const BaseSystem& system,
                              const BasePoint& x, long n) {
    if (n < 0 && !gen.invertible())
        throw NegativeIterateOfNonInvertible("negative cocycle step of a non-invertible generator");
    if (n < 0 && !system.invertible())
        throw NegativeIterateOfNonInvertible("negative cocycle step over a non-invertible base");
    ScaledOperator acc = ScaledOperator::identity(gen.dimension());
    int counter = 0;
    BasePoint p = x;
    if (n >= 0) {
        for (long i = 0; i < n; ++i) {
            acc.apply_left(gen.evaluate(system, p), counter);
            p = system.step(p);
        }
    } else {
        for (long i = 0; i < -n; ++i) {
            p = system.evaluate_map(p, -1);
            acc.apply_left(gen.evaluate_inverse(system, p), counter);
        }
    }
    acc.renormalize();
    return acc;
}

Matrix cocycle(const CocycleGenerator& gen, const BaseSystem& system, const BasePoint& x, long n) {
    return cocycle_scaled(gen, system, x, n).dense();
}

GrowthRates growth_rates(const CocycleGenerator& gen, const BaseSystem& system, const BasePoint& x,
                         long horizon, int block_size) {
    if (horizon < 8) throw ConfigError("growth_rates horizon must be at least 8");
    if (block_size < 0) throw BlockSizeExceedsDimension("negative block size");
    const int d = gen.dimension();
    ScaledOperator acc = cocycle_scaled(gen, system, x, horizon);
    GrowthRates out;
    out.horizon = horizon;
    out.lambda_hat = acc.log_norm(gen.norm()) / static_cast<double>(horizon);
    if (block_size >= d) {
        out.alpha_hat = kAlphaFloor;
        out.alpha_is_floor = true;
        return out;
    }
    // ||A(x,N) P_tail|| needs its own scaling: relative to the full product
    // the tail underflows once N * (top gap) exceeds the double exponent range.
    ScaledOperator tail{Matrix::Zero(d, d - block_size), 0.0};
    tail.mat = Matrix::Identity(d, d).rightCols(d - block_size);
    int counter = 0;
    BasePoint p = x;
    for (long i = 0; i < horizon; ++i) {
        tail.apply_left(gen.evaluate(system, p), counter);
        p = system.step(p);
    }
    double tail_norm = operator_norm(tail.mat, gen.norm());
    if (tail_norm <= 0.0) {
        out.alpha_hat = kAlphaFloor;
        out.alpha_is_floor = true;
    } else {
        out.alpha_hat = (std::log(tail_norm) + tail.log_scale) / static_cast<double>(horizon);
        out.alpha_is_floor = false;
    }
    if (out.alpha_hat > out.lambda_hat) out.alpha_hat = out.lambda_hat;
    return out;
}

double propagated_holder_constant(double a1, double sup_a, double lipschitz, double nu) {
    if (a1 < 0.0 || sup_a <= 0.0 || lipschitz < 1.0 || nu <= 0.0 || nu > 1.0)
        throw ConfigError("propagated_holder_constant preconditions violated");
    return std::max(sup_a * std::pow(lipschitz, nu), a1 + sup_a);
}

HolderPropagationReport verify_cocycle_holder(const CocycleGenerator& gen, const BaseSystem& system,
                                              const BasePoint& x, const BasePoint& y, long n_max,
                                              double a) {
    const double dist = system.metric(x, y);
    if (dist <= 0.0) throw DegeneratePair("Hölder propagation needs distinct points");
    const double log_rhs_base = gen.holder_exponent() * std::log(dist);
    const double log_a = std::log(a);
    HolderPropagationReport rep;
    auto check = [&](long n) {
        ScaledOperator ax = cocycle_scaled(gen, system, x, n);
        ScaledOperator ay = cocycle_scaled(gen, system, y, n);
        // ||A(x,n) - A(y,n)|| evaluated at a common scale.
        double base = std::max(ax.log_scale, ay.log_scale);
        Matrix diff = ax.mat * std::exp(ax.log_scale - base) - ay.mat * std::exp(ay.log_scale - base);
        double nrm = operator_norm(diff, gen.norm());
        double log_lhs = nrm > 0.0 ? std::log(nrm) + base : -std::numeric_limits<double>::infinity();
        double ratio = std::exp(log_lhs - (std::labs(n) * log_a + log_rhs_base));
        rep.steps.push_back(n);
        rep.ratios.push_back(ratio);
        rep.max_ratio = std::max(rep.max_ratio, ratio);
    };
    for (long n = 1; n <= n_max; ++n) {
        check(n);
        if (gen.invertible() && system.invertible()) check(-n);
    }
    rep.pass = rep.max_ratio <= 1.0 + 1e-9;
    return rep;
}

}  // namespace oselab
