#include "oselab/quasirandom.hpp"

namespace oselab {

std::vector<Eigen::VectorXd> sphere_directions(int dim, int count) {
    std::vector<Eigen::VectorXd> out;
    if (dim <= 0 || count <= 0) return out;
    if (dim == 1) {
        Eigen::VectorXd p(1), m(1);
        p[0] = 1.0;
        m[0] = -1.0;
        out.push_back(p);
        out.push_back(m);
        return out;
    }
    if (dim == 2) {
        out.reserve(count);
        for (int j = 0; j < count; ++j) {
            double t = 6.283185307179586476925286766559 * (j + 0.5) / count;
            Eigen::VectorXd v(2);
            v << std::cos(t), std::sin(t);
            out.push_back(v);
        }
        return out;
    }
    auto seq = kronecker_sequence(dim, count);
    out.reserve(count);
    for (auto& u : seq) {
        Eigen::VectorXd v(dim);
        for (int j = 0; j < dim; ++j) v[j] = inverse_normal_cdf(u[j]);
        double n = v.norm();
        if (n < 1e-12) {
            v.setZero();
            v[0] = 1.0;
            n = 1.0;
        }
        out.push_back(v / n);
    }
    return out;
}

double sphere_covering_radius(int dim, int count) {
    if (dim <= 1) return 0.0;
    if (dim == 2) return 3.14159265358979323846 / count;
    // Declared (conservative) bound for the quantile-mapped Kronecker set.
    return 3.0 * std::sqrt(static_cast<double>(dim)) *
           std::pow(static_cast<double>(count), -1.0 / (dim - 1));
}

}  // namespace oselab
