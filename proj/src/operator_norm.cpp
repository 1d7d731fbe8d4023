#include "oselab/operator_norm.hpp"

namespace oselab {

NormKind norm_from_string(const std::string& s) {
    if (s == "l1") return NormKind::L1;
    if (s == "l2") return NormKind::L2;
    if (s == "linf") return NormKind::Linf;
    throw ConfigError("unknown norm kind: " + s);
}

std::string norm_to_string(NormKind k) {
    switch (k) {
        case NormKind::L1: return "l1";
        case NormKind::L2: return "l2";
        case NormKind::Linf: return "linf";
    }
    return "?";
}

double vector_norm(const Vector& v, NormKind k) {
    switch (k) {
        case NormKind::L1: return v.lpNorm<1>();
        case NormKind::L2: return v.norm();
        case NormKind::Linf: return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>();
    }
    return 0.0;
}

double operator_norm(const Matrix& m, NormKind k) {
    if (m.size() == 0) return 0.0;
    switch (k) {
        case NormKind::L1: return m.cwiseAbs().colwise().sum().maxCoeff();
        case NormKind::L2: {
            Eigen::JacobiSVD<Matrix> svd(m);
            return svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
        }
        case NormKind::Linf: return m.cwiseAbs().rowwise().sum().maxCoeff();
    }
    return 0.0;
}

double operator_metric(const Matrix& a, const Matrix& b, NormKind k) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw AmbientMismatch("operator_metric on mismatched shapes");
    Eigen::FullPivLU<Matrix> lua(a), lub(b);
    if (!lua.isInvertible() || !lub.isInvertible())
        throw SingularGenerator("operator_metric needs invertible operators");
    return operator_norm(a - b, k) + operator_norm(lua.inverse() - lub.inverse(), k);
}

double kuratowski_estimate(const Matrix& t, int block_size, NormKind k) {
    if (block_size < 0) throw BlockSizeExceedsDimension("negative block size");
    const int d = static_cast<int>(t.cols());
    if (block_size >= d) return 0.0;
    Matrix tail = t.rightCols(d - block_size);
    return operator_norm(tail, k);
}

}  // namespace oselab
