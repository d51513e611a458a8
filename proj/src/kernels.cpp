#include "fkd/kernels.hpp"

#include "fkd/errors.hpp"

#include <cmath>

namespace fkd {

namespace {

void check_rbf(const RbfParams& params) {
    if (!(params.gamma > 0.0) || !std::isfinite(params.gamma))
        throw ValidationError("rbf gamma must be a positive finite number");
}

// Squared distances d_ij = |a_i|^2 + |b_j|^2 - 2 <a_i, b_j>, clamped at 0.
Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::VectorXd na = a.rowwise().squaredNorm();
    Eigen::VectorXd nb = b.rowwise().squaredNorm();
    Eigen::MatrixXd d = (-2.0 * a * b.transpose());
    d.colwise() += na;
    d.rowwise() += nb.transpose();
    return d.cwiseMax(0.0);
}

}  // namespace

KernelMatrix rbf_kernel(const Eigen::MatrixXd& features, const RbfParams& params) {
    require_finite(features, "feature matrix");
    check_rbf(params);
    const Eigen::Index n = features.rows();
    Eigen::MatrixXd d = squared_distances(features, features);
    Eigen::MatrixXd k(n, n);
    // Upper triangle only, mirrored; diagonal pinned to 1.
    for (Eigen::Index i = 0; i < n; ++i) {
        k(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = std::exp(-params.gamma * d(i, j));
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return KernelMatrix::square(std::move(k));
}

KernelMatrix rbf_cross_kernel(const Eigen::MatrixXd& test_features,
                              const Eigen::MatrixXd& train_features,
                              const RbfParams& params) {
    require_finite(test_features, "test feature matrix");
    require_finite(train_features, "train feature matrix");
    check_rbf(params);
    if (test_features.cols() != train_features.cols())
        throw ValidationError("feature dimension mismatch between test and train");
    Eigen::MatrixXd k =
        (-params.gamma * squared_distances(test_features, train_features)).array().exp();
    return KernelMatrix::cross(std::move(k));
}

KernelMatrix linear_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    require_finite(a, "feature matrix");
    require_finite(b, "feature matrix");
    if (a.cols() != b.cols())
        throw ValidationError("feature dimension mismatch");
    return KernelMatrix::cross(a * b.transpose());
}

}  // namespace fkd
