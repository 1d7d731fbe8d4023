#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

namespace oselab {

// Counter-based generator with a fixed, platform-independent bit stream.
// std engines are avoided for sampling because distribution adapters are not
// pinned by the standard; reproducibility here must be bit-exact.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0,1) with 53 significant bits.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double next_in(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    // Standard normal via Box-Muller on two fresh uniforms.
    double next_normal() {
        double u1 = next_unit();
        double u2 = next_unit();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

private:
    std::uint64_t state_;
};

// Additive-recurrence (Kronecker) low-discrepancy sequence in [0,1)^dim with
// alphas derived from the generalized golden ratio, x^(dim+1) = x + 1.
inline std::vector<Eigen::VectorXd> kronecker_sequence(int dim, int count) {
    double phi = 1.5;
    for (int it = 0; it < 64; ++it) phi = std::pow(1.0 + phi, 1.0 / (dim + 1));
    Eigen::VectorXd alpha(dim);
    double a = 1.0 / phi;
    for (int j = 0; j < dim; ++j) {
        alpha[j] = a;
        a /= phi;
    }
    std::vector<Eigen::VectorXd> out;
    out.reserve(count);
    Eigen::VectorXd x = Eigen::VectorXd::Constant(dim, 0.5);
    for (int n = 0; n < count; ++n) {
        x += alpha;
        for (int j = 0; j < dim; ++j) x[j] -= std::floor(x[j]);
        out.push_back(x);
    }
    return out;
}

// Acklam's rational approximation of the standard normal quantile.
inline double inverse_normal_cdf(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                               1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                               6.680131188771972e+01,  -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                               -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                               3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1.0 - plow;
    if (p <= 0.0) p = 1e-300;
    if (p >= 1.0) p = 1.0 - 1e-16;
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > phigh) {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    double q = p - 0.5, r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

// Deterministic unit directions on the Euclidean sphere S^{dim-1}.
// dim==1 gives {+1,-1}; dim==2 gives equispaced angles (covering radius pi/count);
// dim>=3 maps the Kronecker sequence through the normal quantile and normalizes.
std::vector<Eigen::VectorXd> sphere_directions(int dim, int count);

// Conservative covering-radius bound (Euclidean) declared for the sets above.
double sphere_covering_radius(int dim, int count);

}  // namespace oselab
