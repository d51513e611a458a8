#pragma once

#include "fkd/kernel_matrix.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace fkd {

/// Kernel ridge regression over a precomputed kernel. The coefficients solve
/// (K + alpha Id) c = y with residual at most 1e-8 times the target norm.
struct KrrModel {
    Eigen::VectorXd dual_coefficients;
    double alpha = 0.0;
    std::uint64_t train_fingerprint = 0;
};

/// Epsilon-insensitive support vector regression over a precomputed kernel.
/// dual_coefficients holds beta_i = alpha_i - alpha_i* from the standard dual;
/// every |beta_i| is at most cost and the coefficients sum to zero.
struct SvrModel {
    Eigen::VectorXd dual_coefficients;
    double bias = 0.0;
    double epsilon = 0.0;
    double cost = 0.0;
    std::vector<Eigen::Index> support_indices;
    std::uint64_t train_fingerprint = 0;
};

/// Predicts the training-target mean everywhere.
struct DummyModel {
    double mean = 0.0;
};

struct SvrParams {
    double epsilon = 0.01;
    double cost = 0.75;
    double tol = 1e-6;
};

/// Primal and dual objective values of a fitted support vector model. The gap
/// is nonnegative for any feasible dual point and near zero at an optimum.
struct SvrObjectives {
    double primal = 0.0;
    double dual = 0.0;
    double gap = 0.0;
};

KrrModel krr_fit(const KernelMatrix& k_train, const Eigen::VectorXd& y, double alpha = 0.25);
Eigen::VectorXd krr_predict(const KrrModel& model, const KernelMatrix& k_cross);

/// Solves the epsilon-SVR dual by pairwise coordinate ascent with
/// max-violating-pair selection. Kernels with marginal negative eigenvalues
/// (above -1e-8 times the largest) are repaired by clamping; larger
/// violations raise ConvexityError. Hitting the iteration cap raises
/// ConvergenceError carrying the best duality gap reached.
SvrModel svr_fit(const KernelMatrix& k_train, const Eigen::VectorXd& y,
                 const SvrParams& params = {});
Eigen::VectorXd svr_predict(const SvrModel& model, const KernelMatrix& k_cross);

/// Recomputes the primal and dual objectives of a fitted model against its
/// training data. Serves as an independent optimality check.
SvrObjectives svr_objectives(const SvrModel& model, const KernelMatrix& k_train,
                             const Eigen::VectorXd& y);

DummyModel dummy_fit(const Eigen::VectorXd& y);
Eigen::VectorXd dummy_predict(const DummyModel& model, Eigen::Index count);

}  // namespace fkd
