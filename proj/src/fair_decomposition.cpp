#include "fkd/fair_decomposition.hpp"

#include "fkd/common.hpp"
#include "fkd/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace fkd {

namespace {

constexpr double k_direction_floor = 1e-12;   // |B p| relative to |p|
constexpr double k_gram_floor = 1e-12;        // smallest acceptable normalization Gram

struct StandardizedAttributes {
    Eigen::MatrixXd values;
    Eigen::VectorXd mean;
    Eigen::VectorXd std_dev;
};

StandardizedAttributes standardize_columns(const Eigen::MatrixXd& p, bool enabled) {
    const Eigen::Index l = p.cols();
    StandardizedAttributes out;
    out.mean = Eigen::VectorXd::Zero(l);
    out.std_dev = Eigen::VectorXd::Ones(l);
    if (!enabled || p.rows() == 0) {
        out.values = p;
        return out;
    }
    const auto n = static_cast<double>(p.rows());
    out.values.resize(p.rows(), l);
    for (Eigen::Index c = 0; c < l; ++c) {
        const double mean = p.col(c).mean();
        const Eigen::VectorXd centered = p.col(c).array() - mean;
        const double sd = std::sqrt(centered.squaredNorm() / n);
        out.mean(c) = mean;
        // A (near-)constant column stays a zero column here; the iteration
        // then reports it as degenerate rather than blowing up on 1/sd.
        const double divisor = sd > 1e-12 * (1.0 + std::abs(mean)) ? sd : 1.0;
        out.std_dev(c) = divisor;
        out.values.col(c) = centered / divisor;
    }
    return out;
}

// Signals raised by one iteration of the removal loop.
enum class IterationStop { none, degenerate, collinear };

struct NormalizationTerm {
    Eigen::MatrixXd inverse;   // l x l
    double diagnostic = 0.0;   // scalar reciprocal, or condition number for l > 1
    IterationStop stop = IterationStop::none;
};

// Inverts the l x l Gram of the fitted directions, reporting degeneracy
// instead of dividing by (near) zero or exceeding the normalization cap.
// `gram` is u^T K u for the fitted directions u = B p.
NormalizationTerm invert_normalization(const Eigen::MatrixXd& gram, Eigen::Index l,
                                       NormalizationPath path, double max_normalization) {
    NormalizationTerm term;
    const bool scalar = path == NormalizationPath::scalar ||
                        (path == NormalizationPath::automatic && l == 1);
    if (scalar) {
        const double g = gram(0, 0);
        if (!(g > k_gram_floor) || 1.0 / g >= max_normalization) {
            term.stop = IterationStop::degenerate;
            return term;
        }
        term.inverse = Eigen::MatrixXd::Constant(1, 1, 1.0 / g);
        term.diagnostic = 1.0 / g;
        return term;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    if (es.info() != Eigen::Success) {
        term.stop = IterationStop::collinear;
        return term;
    }
    const double min_eig = es.eigenvalues().minCoeff();
    const double max_eig = es.eigenvalues().maxCoeff();
    // The cap bounds the strongest magnification applied by the inverse,
    // matching the scalar path's 1/gram; the condition number alone can stay
    // small while both eigenvalues sink into the noise floor together.
    if (!(min_eig > k_gram_floor) || 1.0 / min_eig >= max_normalization) {
        term.stop = l > 1 ? IterationStop::collinear : IterationStop::degenerate;
        return term;
    }
    term.inverse = es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() *
                   es.eigenvectors().transpose();
    term.diagnostic = max_eig / min_eig;
    return term;
}

[[noreturn]] void throw_stop(IterationStop stop, int iteration, Eigen::Index column) {
    const std::string where = " at iteration " + std::to_string(iteration);
    if (stop == IterationStop::collinear) {
        throw CollinearityError(
            "protected attribute directions are linearly dependent" + where, iteration);
    }
    std::string msg = "no removable protected information left";
    if (column >= 0) msg += " for attribute column " + std::to_string(column);
    throw DegenerateAttributeError(msg + where, iteration);
}

void validate_decompose_inputs(const KernelMatrix& kernel, const ProtectedAttributes& attrs,
                               const DecompositionParams& params) {
    if (kernel.kind() != KernelKind::square) {
        throw ValidationError("decompose requires a square kernel");
    }
    if (attrs.count() != kernel.rows()) {
        throw ValidationError("protected attributes have " + std::to_string(attrs.count()) +
                              " rows but the kernel has " + std::to_string(kernel.rows()));
    }
    if (params.iterations < 0) throw ValidationError("iteration count must be non-negative");
    if (!(params.ridge_alpha > 0.0) || !std::isfinite(params.ridge_alpha)) {
        throw ValidationError("ridge_alpha must be positive and finite");
    }
    if (params.nystroem &&
        (params.nystroem->landmark_count < 1 || params.nystroem->landmark_count > kernel.rows())) {
        throw ValidationError("nystroem landmark_count must lie in [1, n]");
    }
    if (!(params.max_normalization > 1.0)) {
        throw ValidationError("max_normalization must exceed 1");
    }
    if (params.validate_input) kernel.validate_psd();
}

// Single left-to-right pass over the iterations, snapshotting the kernel and
// accumulated transform at each requested count. `checkpoints` is strictly
// ascending; the last entry is the total iteration count.
std::vector<DecompositionResult> run_decomposition(const KernelMatrix& kernel,
                                                   const ProtectedAttributes& attrs,
                                                   const DecompositionParams& params,
                                                   std::span<const int> checkpoints) {
    validate_decompose_inputs(kernel, attrs, params);

    const Eigen::Index n = kernel.rows();
    const Eigen::Index l = attrs.attributes();
    const StandardizedAttributes std_p =
        standardize_columns(attrs.data(), params.standardize_protected);
    const Eigen::MatrixXd& p = std_p.values;
    const Eigen::VectorXd p_norms = p.colwise().norm();

    const std::uint64_t source_fp = kernel.fingerprint();
    Eigen::MatrixXd k_cur = kernel.data();
    Eigen::MatrixXd t_total = Eigen::MatrixXd::Identity(n, n);
    std::vector<IterationDiagnostics> diagnostics;

    std::vector<DecompositionResult> out;
    out.reserve(checkpoints.size());
    auto snapshot = [&](int completed) {
        KernelMatrix km = KernelMatrix::square(k_cur);
        const std::uint64_t result_fp = km.fingerprint();
        out.push_back(DecompositionResult{
            std::move(km),
            FairTransform(t_total, completed, params.ridge_alpha, source_fp, result_fp,
                          diagnostics, std_p.mean, std_p.std_dev)});
    };

    std::size_t next_cp = 0;
    while (next_cp < checkpoints.size() && checkpoints[next_cp] == 0) {
        snapshot(0);
        ++next_cp;
    }

    const int total = checkpoints.empty() ? 0 : checkpoints.back();
    int completed = 0;
    for (int iter = 1; iter <= total; ++iter) {
        // Fitted directions u = (K + alpha Id)^{-1} p, one column per attribute.
        Eigen::MatrixXd u;
        if (params.nystroem) {
            NystroemParams draw = *params.nystroem;
            draw.seed = derive_seed(params.nystroem->seed, static_cast<std::uint64_t>(iter - 1));
            u.noalias() = nystroem_inverse(Eigen::Ref<const Eigen::MatrixXd>(k_cur),
                                           params.ridge_alpha, draw) *
                          p;
        } else {
            Eigen::MatrixXd shifted = k_cur;
            shifted.diagonal().array() += params.ridge_alpha;
            Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>> llt(shifted);
            if (llt.info() != Eigen::Success) {
                throw ValidationError("regularized kernel is not positive definite at iteration " +
                                      std::to_string(iter));
            }
            u = llt.solve(p);
        }

        IterationStop stop = IterationStop::none;
        Eigen::Index dead_column = -1;
        for (Eigen::Index c = 0; c < l; ++c) {
            if (u.col(c).norm() <= k_direction_floor * p_norms(c)) {
                stop = IterationStop::degenerate;
                dead_column = c;
                break;
            }
        }

        Eigen::MatrixXd v;
        NormalizationTerm term;
        if (stop == IterationStop::none) {
            v.noalias() = k_cur * u;                              // n x l
            Eigen::MatrixXd gram = u.transpose() * v;             // l x l
            gram = 0.5 * (gram + gram.transpose()).eval();
            term = invert_normalization(gram, l, params.normalization, params.max_normalization);
            stop = term.stop;
        }
        if (stop != IterationStop::none) {
            if (!params.stop_on_degenerate) throw_stop(stop, iter, dead_column);
            break;
        }

        if (params.lazy_updates) {
            // Rank-l update route: K' = K - V T V^T, T_total' = T_total - (T_total u) T V^T.
            const Eigen::MatrixXd vt = v * term.inverse;          // n x l
            k_cur.noalias() -= vt * v.transpose();
            const Eigen::MatrixXd tu = t_total * u;               // n x l
            t_total.noalias() -= tu * (term.inverse * v.transpose());
        } else {
            const Eigen::MatrixXd m_mat = u * term.inverse * u.transpose();  // n x n
            Eigen::MatrixXd t_step = -(m_mat * k_cur);
            t_step.diagonal().array() += 1.0;
            k_cur = (k_cur * t_step).eval();
            t_total = (t_total * t_step).eval();
        }
        k_cur = 0.5 * (k_cur + k_cur.transpose()).eval();

        IterationDiagnostics diag;
        diag.iteration = iter;
        diag.normalization = term.diagnostic;
        diag.residual_norm = (k_cur * u).colwise().norm().maxCoeff();
        diagnostics.push_back(diag);
        completed = iter;

        while (next_cp < checkpoints.size() && checkpoints[next_cp] == iter) {
            snapshot(completed);
            ++next_cp;
        }
    }

    // An early degenerate stop pins every remaining checkpoint at the final
    // state; the transform's iteration count records what actually ran.
    while (next_cp < checkpoints.size()) {
        snapshot(completed);
        ++next_cp;
    }
    return out;
}

void validate_checkpoints(std::span<const int> m_values) {
    if (m_values.empty()) throw ValidationError("checkpoint list must not be empty");
    for (std::size_t i = 0; i < m_values.size(); ++i) {
        if (m_values[i] < 0) throw ValidationError("checkpoint iteration counts must be >= 0");
        if (i > 0 && m_values[i] <= m_values[i - 1]) {
            throw ValidationError("checkpoint iteration counts must be strictly ascending");
        }
    }
}

}  // namespace

ProtectedAttributes::ProtectedAttributes(Eigen::MatrixXd values) : data_(std::move(values)) {
    if (data_.cols() < 1 || data_.rows() < 1) {
        throw ValidationError("protected attributes must have at least one row and column");
    }
    require_finite(data_, "protected attributes");
}

FairTransform::FairTransform(Eigen::MatrixXd t_total, int iterations, double ridge_alpha,
                             std::uint64_t source_fingerprint, std::uint64_t result_fingerprint,
                             std::vector<IterationDiagnostics> per_iteration,
                             Eigen::VectorXd protected_mean, Eigen::VectorXd protected_std)
    : t_total_(std::move(t_total)),
      iterations_(iterations),
      ridge_alpha_(ridge_alpha),
      source_fingerprint_(source_fingerprint),
      result_fingerprint_(result_fingerprint),
      per_iteration_(std::move(per_iteration)),
      protected_mean_(std::move(protected_mean)),
      protected_std_(std::move(protected_std)) {
    if (t_total_.rows() != t_total_.cols()) {
        throw ValidationError("transform matrix must be square");
    }
    if (iterations_ < 0) throw ValidationError("transform iteration count must be >= 0");
    require_finite(t_total_, "transform matrix");
}

FairTransform FairTransform::identity(Eigen::Index n, double ridge_alpha,
                                      std::uint64_t fingerprint) {
    return FairTransform(Eigen::MatrixXd::Identity(n, n), 0, ridge_alpha, fingerprint,
                         fingerprint, {}, Eigen::VectorXd(), Eigen::VectorXd());
}

DecompositionResult decompose(const KernelMatrix& kernel, const ProtectedAttributes& attrs,
                              const DecompositionParams& params) {
    const int m[] = {params.iterations};
    std::vector<DecompositionResult> results = run_decomposition(kernel, attrs, params, m);
    return std::move(results.front());
}

std::vector<DecompositionResult> decompose_checkpoints(const KernelMatrix& kernel,
                                                       const ProtectedAttributes& attrs,
                                                       const DecompositionParams& params,
                                                       std::span<const int> m_values) {
    validate_checkpoints(m_values);
    return run_decomposition(kernel, attrs, params, m_values);
}

KernelMatrix apply_transform(const KernelMatrix& cross, const FairTransform& transform) {
    if (cross.cols() != transform.size()) {
        throw ValidationError("cross kernel has " + std::to_string(cross.cols()) +
                              " columns but the transform expects " +
                              std::to_string(transform.size()));
    }
    if (cross.provenance() && *cross.provenance() != transform.source_fingerprint()) {
        throw ValidationError(
            "cross kernel was built against a different training kernel than this transform");
    }
    if (!cross.provenance() && cross.kind() == KernelKind::square &&
        cross.fingerprint() != transform.source_fingerprint()) {
        throw ValidationError(
            "square kernel does not match the training kernel this transform was fitted on");
    }
    KernelMatrix out = KernelMatrix::cross(cross.data() * transform.matrix());
    out.set_provenance(transform.result_fingerprint());
    return out;
}

OracleDecompositionResult oracle_decompose(const KernelMatrix& kernel,
                                           const ProtectedAttributes& attrs,
                                           const DecompositionParams& params,
                                           double eigen_cutoff_scale) {
    if (params.nystroem) {
        throw ValidationError("the eigendecomposition route supports the exact inverse only");
    }
    validate_decompose_inputs(kernel, attrs, params);

    const Eigen::Index n = kernel.rows();
    const Eigen::Index l = attrs.attributes();
    const StandardizedAttributes std_p =
        standardize_columns(attrs.data(), params.standardize_protected);
    const Eigen::MatrixXd& p = std_p.values;
    const Eigen::VectorXd p_norms = p.colwise().norm();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(kernel.data());
    if (es.info() != Eigen::Success) {
        throw ValidationError("eigendecomposition of the kernel failed");
    }

    EmpiricalFeatureSpace space;
    space.eigenvalues = es.eigenvalues().reverse();
    space.eigenvectors = es.eigenvectors().rowwise().reverse();
    const double lambda_max = std::max(space.eigenvalues(0), 0.0);
    const double cutoff = eigen_cutoff_scale * lambda_max;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (space.eigenvalues(i) < cutoff) space.eigenvalues(i) = 0.0;
    }
    space.g = space.eigenvectors * space.eigenvalues.cwiseSqrt().asDiagonal();

    Eigen::MatrixXd g = space.g;
    space.projection = Eigen::MatrixXd::Identity(n, n);
    int completed = 0;
    for (int iter = 1; iter <= params.iterations; ++iter) {
        Eigen::MatrixXd cov = g * g.transpose();
        cov.diagonal().array() += params.ridge_alpha;
        Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>> llt(cov);
        if (llt.info() != Eigen::Success) {
            throw ValidationError("regularized factor covariance is not positive definite");
        }
        const Eigen::MatrixXd w = g.transpose() * llt.solve(p);       // n x l

        IterationStop stop = IterationStop::none;
        Eigen::Index dead_column = -1;
        for (Eigen::Index c = 0; c < l; ++c) {
            if (w.col(c).norm() <= k_direction_floor * p_norms(c)) {
                stop = IterationStop::degenerate;
                dead_column = c;
                break;
            }
        }
        NormalizationTerm term;
        if (stop == IterationStop::none) {
            Eigen::MatrixXd gram = w.transpose() * w;                 // l x l
            gram = 0.5 * (gram + gram.transpose()).eval();
            term = invert_normalization(gram, l, params.normalization, params.max_normalization);
            stop = term.stop;
        }
        if (stop != IterationStop::none) {
            if (!params.stop_on_degenerate) throw_stop(stop, iter, dead_column);
            break;
        }

        Eigen::MatrixXd proj = -(w * term.inverse * w.transpose());
        proj.diagonal().array() += 1.0;
        g = (g * proj).eval();
        space.projection = (space.projection * proj).eval();
        space.w_history.push_back(w);
        completed = iter;
    }

    space.g_projected = g;
    Eigen::MatrixXd k_out = g * g.transpose();
    k_out = 0.5 * (k_out + k_out.transpose()).eval();

    OracleDecompositionResult result{KernelMatrix::square(std::move(k_out)), std::move(space),
                                     completed};
    return result;
}

Eigen::VectorXd residual_protected_norm(const KernelMatrix& k_prev, const KernelMatrix& k_next,
                                        const ProtectedAttributes& attrs, double ridge_alpha,
                                        bool standardize) {
    if (k_prev.kind() != KernelKind::square) {
        throw ValidationError("residual_protected_norm requires a square previous kernel");
    }
    if (k_next.cols() != k_prev.rows()) {
        throw ValidationError("kernel dimensions do not match");
    }
    if (attrs.count() != k_prev.rows()) {
        throw ValidationError("protected attribute rows do not match the kernel");
    }
    if (!(ridge_alpha > 0.0) || !std::isfinite(ridge_alpha)) {
        throw ValidationError("ridge_alpha must be positive and finite");
    }
    const Eigen::MatrixXd p = standardize_columns(attrs.data(), standardize).values;
    Eigen::MatrixXd shifted = k_prev.data();
    shifted.diagonal().array() += ridge_alpha;
    Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>> llt(shifted);
    if (llt.info() != Eigen::Success) {
        throw ValidationError("regularized kernel is not positive definite");
    }
    const Eigen::MatrixXd u = llt.solve(p);
    return (k_next.data() * u).colwise().norm();
}

}  // namespace fkd
