#include "fkd/regressors.hpp"

#include "fkd/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

namespace fkd {

namespace {

void check_training_inputs(const KernelMatrix& kernel, const Eigen::VectorXd& y,
                           const char* what) {
    if (kernel.kind() != KernelKind::square) {
        throw ValidationError(std::string(what) + " requires a square training kernel");
    }
    if (kernel.rows() != y.size()) {
        throw ValidationError(std::string(what) + ": kernel has " +
                              std::to_string(kernel.rows()) + " rows but the target has " +
                              std::to_string(y.size()) + " entries");
    }
    if (y.size() == 0) throw ValidationError(std::string(what) + ": empty target vector");
    if (!y.allFinite()) throw ValidationError(std::string(what) + ": target has non-finite entries");
}

void check_prediction_kernel(const KernelMatrix& k_cross, Eigen::Index train_size,
                             std::uint64_t train_fingerprint) {
    if (k_cross.cols() != train_size) {
        throw ValidationError("prediction kernel has " + std::to_string(k_cross.cols()) +
                              " columns but the model was trained on " +
                              std::to_string(train_size) + " points");
    }
    if (k_cross.provenance()) {
        if (*k_cross.provenance() != train_fingerprint) {
            throw ValidationError(
                "prediction kernel provenance does not match the kernel the model was fitted on");
        }
    } else if (k_cross.kind() == KernelKind::square &&
               k_cross.fingerprint() != train_fingerprint) {
        throw ValidationError(
            "square prediction kernel differs from the kernel the model was fitted on");
    }
}

// Bias satisfying the stationarity conditions: averaged over free support
// vectors when any exist, otherwise the midpoint of the admissible interval
// derived from the bound and inactive points.
double svr_bias(const Eigen::VectorXd& beta, const Eigen::VectorXd& predictions_without_bias,
                const Eigen::VectorXd& y, double epsilon, double cost) {
    double sum = 0.0;
    int free_count = 0;
    for (Eigen::Index i = 0; i < beta.size(); ++i) {
        const double b = beta[i];
        if (b != 0.0 && std::abs(b) < cost) {
            const double shift = b > 0.0 ? epsilon : -epsilon;
            sum += y[i] - predictions_without_bias[i] - shift;
            ++free_count;
        }
    }
    if (free_count > 0) return sum / free_count;

    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < beta.size(); ++i) {
        const double r = y[i] - predictions_without_bias[i];
        if (beta[i] == 0.0) {
            lo = std::max(lo, r - epsilon);
            hi = std::min(hi, r + epsilon);
        } else if (beta[i] > 0.0) {
            hi = std::min(hi, r - epsilon);
        } else {
            lo = std::max(lo, r + epsilon);
        }
    }
    if (!std::isfinite(lo)) return hi;
    if (!std::isfinite(hi)) return lo;
    return 0.5 * (lo + hi);
}

struct DualState {
    double primal = 0.0;
    double dual = 0.0;
    double gap = 0.0;
    double bias = 0.0;
};

// Both objectives cost O(n) given the cached residual g = K beta - y, since
// beta' K beta = beta' (g + y).
DualState svr_objective_state(const Eigen::VectorXd& beta, const Eigen::VectorXd& g,
                              const Eigen::VectorXd& y, double epsilon, double cost) {
    DualState state;
    const Eigen::VectorXd predictions = g + y;
    const double quad = beta.dot(predictions);
    state.dual = -0.5 * quad + beta.dot(y) - epsilon * beta.lpNorm<1>();
    state.bias = svr_bias(beta, predictions, y, epsilon, cost);
    double hinge = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        hinge += std::max(0.0, std::abs(y[i] - predictions[i] - state.bias) - epsilon);
    }
    state.primal = 0.5 * quad + cost * hinge;
    state.gap = state.primal - state.dual;
    return state;
}

// Clamp marginal negative eigenvalues to zero; anything below the relative
// floor means the kernel is not usable as a convex quadratic form.
Eigen::MatrixXd repaired_kernel(const KernelMatrix& kernel) {
    const Eigen::MatrixXd& k = kernel.data();
    const Eigen::Index n = k.rows();
    const double mean_diag = std::max(k.trace() / static_cast<double>(n), 1.0);
    Eigen::MatrixXd shifted = k;
    shifted.diagonal().array() += 1e-10 * mean_diag;
    if (Eigen::LLT<Eigen::MatrixXd>(shifted).info() == Eigen::Success) return k;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
    if (es.info() != Eigen::Success) throw ConvexityError("kernel eigendecomposition failed");
    const double lambda_max = std::max(es.eigenvalues().maxCoeff(), 0.0);
    const double floor = -1e-8 * std::max(lambda_max, 1e-12);
    const double lambda_min = es.eigenvalues().minCoeff();
    if (lambda_min < floor) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "kernel is not positive semi-definite: smallest eigenvalue %.3e is below "
                      "the repairable floor %.3e",
                      lambda_min, floor);
        throw ConvexityError(buf);
    }
    const Eigen::VectorXd clamped = es.eigenvalues().cwiseMax(0.0);
    Eigen::MatrixXd repaired =
        es.eigenvectors() * clamped.asDiagonal() * es.eigenvectors().transpose();
    repaired = 0.5 * (repaired + repaired.transpose());
    return repaired;
}

}  // namespace

KrrModel krr_fit(const KernelMatrix& k_train, const Eigen::VectorXd& y, double alpha) {
    check_training_inputs(k_train, y, "krr_fit");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw ValidationError("krr_fit: ridge penalty must be positive and finite");
    }
    Eigen::MatrixXd shifted = k_train.data();
    shifted.diagonal().array() += alpha;
    const Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() != Eigen::Success) {
        throw ConvexityError(
            "krr_fit: kernel plus ridge shift is not positive definite; the kernel has "
            "negative eigenvalues larger than the penalty");
    }
    Eigen::VectorXd coef = llt.solve(y);
    // Iterative refinement keeps the residual inside the model contract even
    // when the shifted system is badly conditioned.
    const double target = 1e-8 * y.norm();
    for (int pass = 0; pass < 3; ++pass) {
        const Eigen::VectorXd residual = y - shifted * coef;
        if (residual.norm() <= target) break;
        coef += llt.solve(residual);
    }
    if ((y - shifted * coef).norm() > target) {
        throw ConvexityError("krr_fit: refinement could not reach the required solve accuracy");
    }
    return KrrModel{std::move(coef), alpha, k_train.fingerprint()};
}

Eigen::VectorXd krr_predict(const KrrModel& model, const KernelMatrix& k_cross) {
    check_prediction_kernel(k_cross, model.dual_coefficients.size(), model.train_fingerprint);
    return k_cross.data() * model.dual_coefficients;
}

SvrModel svr_fit(const KernelMatrix& k_train, const Eigen::VectorXd& y, const SvrParams& params) {
    check_training_inputs(k_train, y, "svr_fit");
    if (!(params.epsilon >= 0.0) || !std::isfinite(params.epsilon)) {
        throw ValidationError("svr_fit: epsilon must be non-negative and finite");
    }
    if (!(params.cost > 0.0) || !std::isfinite(params.cost)) {
        throw ValidationError("svr_fit: cost must be positive and finite");
    }
    if (!(params.tol > 0.0) || !std::isfinite(params.tol)) {
        throw ValidationError("svr_fit: tolerance must be positive and finite");
    }

    const Eigen::MatrixXd k = repaired_kernel(k_train);
    const Eigen::Index n = y.size();
    const double epsilon = params.epsilon;
    const double cost = params.cost;

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd g = -y;  // residual K beta - y, maintained incrementally
    const double violation_floor = 1e-14 * std::max(1.0, y.cwiseAbs().maxCoeff());
    const long long iteration_cap = 100000LL * static_cast<long long>(n);
    const long long check_every = std::max<long long>(n, 32);

    DualState state;
    bool converged = false;
    long long next_check = 0;
    for (long long iter = 0;; ++iter) {
        if (iter >= next_check) {
            g.noalias() = k * beta - y;  // discard incremental drift
            state = svr_objective_state(beta, g, y, epsilon, cost);
            if (state.gap <= params.tol * (1.0 + std::abs(state.dual))) {
                converged = true;
                break;
            }
            next_check = iter + check_every;
        }
        if (iter >= iteration_cap) break;

        // Max-violating pair: steepest feasible descent direction +e_i, -e_j
        // of the primal-form dual objective under the sum constraint.
        double best_up = std::numeric_limits<double>::infinity();
        double best_down = std::numeric_limits<double>::infinity();
        Eigen::Index up = -1;
        Eigen::Index down = -1;
        for (Eigen::Index idx = 0; idx < n; ++idx) {
            const double b = beta[idx];
            const double grad = g[idx];
            if (b < cost) {
                const double d = grad + (b < 0.0 ? -epsilon : epsilon);
                if (d < best_up) {
                    best_up = d;
                    up = idx;
                }
            }
            if (b > -cost) {
                const double d = -grad + (b > 0.0 ? -epsilon : epsilon);
                if (d < best_down) {
                    best_down = d;
                    down = idx;
                }
            }
        }
        const double violation = best_up + best_down;
        if (up < 0 || down < 0 || up == down || violation >= -violation_floor) {
            // No improving direction remains at machine precision.
            g.noalias() = k * beta - y;
            state = svr_objective_state(beta, g, y, epsilon, cost);
            converged = state.gap <= params.tol * (1.0 + std::abs(state.dual));
            break;
        }

        double curvature = k(up, up) + k(down, down) - 2.0 * k(up, down);
        curvature = std::max(curvature, 1e-12);
        double step = -violation / curvature;
        // The step stops at sign crossings, where the 1-norm term changes
        // slope; the pair is simply re-selected afterwards if still violating.
        const double to_upper = cost - beta[up];
        const double to_lower = beta[down] + cost;
        step = std::min({step, to_upper, to_lower});
        if (beta[up] < 0.0) step = std::min(step, -beta[up]);
        if (beta[down] > 0.0) step = std::min(step, beta[down]);
        if (!(step > 0.0)) {
            g.noalias() = k * beta - y;
            state = svr_objective_state(beta, g, y, epsilon, cost);
            converged = state.gap <= params.tol * (1.0 + std::abs(state.dual));
            break;
        }
        // Snap to the exact bound when the step was clipped by it so the
        // support classification stays exact.
        double new_up = beta[up] + step;
        double new_down = beta[down] - step;
        if (step == to_upper) new_up = cost;
        if (step == to_lower) new_down = -cost;
        if (step == -beta[up]) new_up = 0.0;
        if (step == beta[down]) new_down = 0.0;
        beta[up] = new_up;
        beta[down] = new_down;
        g.noalias() += step * (k.col(up) - k.col(down));
    }

    if (!converged) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "svr_fit stopped without reaching tolerance %.1e (iteration cap %lld); "
                      "duality gap %.3e",
                      params.tol, iteration_cap, state.gap);
        throw ConvergenceError(buf, state.gap);
    }

    SvrModel model;
    model.dual_coefficients = std::move(beta);
    model.bias = state.bias;
    model.epsilon = epsilon;
    model.cost = cost;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (model.dual_coefficients[i] != 0.0) model.support_indices.push_back(i);
    }
    model.train_fingerprint = k_train.fingerprint();
    return model;
}

Eigen::VectorXd svr_predict(const SvrModel& model, const KernelMatrix& k_cross) {
    check_prediction_kernel(k_cross, model.dual_coefficients.size(), model.train_fingerprint);
    return (k_cross.data() * model.dual_coefficients).array() + model.bias;
}

SvrObjectives svr_objectives(const SvrModel& model, const KernelMatrix& k_train,
                             const Eigen::VectorXd& y) {
    check_training_inputs(k_train, y, "svr_objectives");
    check_prediction_kernel(k_train, model.dual_coefficients.size(), model.train_fingerprint);
    const Eigen::VectorXd& beta = model.dual_coefficients;
    const Eigen::VectorXd predictions = k_train.data() * beta;
    const double quad = beta.dot(predictions);
    const double dual = -0.5 * quad + beta.dot(y) - model.epsilon * beta.lpNorm<1>();
    double hinge = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        hinge += std::max(0.0, std::abs(y[i] - predictions[i] - model.bias) - model.epsilon);
    }
    const double primal = 0.5 * quad + model.cost * hinge;
    return SvrObjectives{primal, dual, primal - dual};
}

DummyModel dummy_fit(const Eigen::VectorXd& y) {
    if (y.size() == 0) throw ValidationError("dummy_fit: empty target vector");
    if (!y.allFinite()) throw ValidationError("dummy_fit: target has non-finite entries");
    return DummyModel{y.mean()};
}

Eigen::VectorXd dummy_predict(const DummyModel& model, Eigen::Index count) {
    if (count < 0) throw ValidationError("dummy_predict: negative prediction count");
    return Eigen::VectorXd::Constant(count, model.mean);
}

}  // namespace fkd
