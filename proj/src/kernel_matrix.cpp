#include "fkd/kernel_matrix.hpp"

#include "fkd/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace fkd {

KernelMatrix KernelMatrix::square(Eigen::MatrixXd data) {
    require_finite(data, "kernel matrix");
    if (data.rows() != data.cols())
        throw ValidationError("square kernel must have equal row and column counts");
    const double scale = data.cwiseAbs().maxCoeff();
    const double asym = (data - data.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10 * std::max(scale, 1e-300))
        throw ValidationError("square kernel is asymmetric beyond tolerance");
    return KernelMatrix(std::move(data), KernelKind::square, true);
}

KernelMatrix KernelMatrix::cross(Eigen::MatrixXd data) {
    require_finite(data, "cross kernel");
    return KernelMatrix(std::move(data), KernelKind::cross, false);
}

std::uint64_t KernelMatrix::fingerprint() const {
    if (!fingerprint_)
        fingerprint_ = matrix_fingerprint(data_);
    return *fingerprint_;
}

std::pair<double, double> KernelMatrix::eigenvalue_range() const {
    if (kind_ != KernelKind::square)
        throw ValidationError("eigenvalue range requires a square kernel");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(data_, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw ValidationError("eigendecomposition failed");
    const auto& ev = es.eigenvalues();
    return {ev.minCoeff(), ev.maxCoeff()};
}

void KernelMatrix::validate_psd(double tol) const {
    auto [lo, hi] = eigenvalue_range();
    if (lo < -tol * std::max(hi, 0.0))
        throw ValidationError("kernel is not positive semi-definite within tolerance");
}

}  // namespace fkd
