#pragma once

#include "fkd/kernel_matrix.hpp"

#include <Eigen/Dense>

namespace fkd {

struct RbfParams {
    double gamma = 0.05;
};

/// Gaussian kernel matrix over the rows of X: K_ij = exp(-gamma * |x_i - x_j|^2).
/// The result is exactly symmetric (upper triangle mirrored) with unit diagonal.
KernelMatrix rbf_kernel(const Eigen::MatrixXd& features, const RbfParams& params);

/// Rectangular RBF kernel, entry (i, j) = k(test_i, train_j).
KernelMatrix rbf_cross_kernel(const Eigen::MatrixXd& test_features,
                              const Eigen::MatrixXd& train_features,
                              const RbfParams& params);

/// Plain inner-product kernel, entry (i, j) = <a_i, b_j>.
KernelMatrix linear_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace fkd
