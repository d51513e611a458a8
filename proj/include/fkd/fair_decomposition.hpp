#pragma once

#include "fkd/kernel_matrix.hpp"
#include "fkd/nystroem.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace fkd {

/// One or more continuous protected attributes, one column per attribute.
class ProtectedAttributes {
public:
    explicit ProtectedAttributes(Eigen::MatrixXd values);

    const Eigen::MatrixXd& data() const { return data_; }
    Eigen::Index count() const { return data_.rows(); }
    Eigen::Index attributes() const { return data_.cols(); }

private:
    Eigen::MatrixXd data_;
};

/// How the l-by-l normalization term is inverted. `automatic` takes the
/// scalar reciprocal for a single attribute and a symmetric solve otherwise;
/// the explicit settings exist to cross-check the two routes.
enum class NormalizationPath { automatic, scalar, matrix };

struct DecompositionParams {
    int iterations = 0;          // m
    double ridge_alpha = 0.1;    // regularization of the direction fit
    /// Approximate the regularized inverse from sampled landmark columns;
    /// exact symmetric solves when unset.
    std::optional<NystroemParams> nystroem;
    /// Propagate each iteration as a rank-l update instead of materializing
    /// the n x n per-iteration transform. Same result within 1e-10.
    bool lazy_updates = false;
    /// Standardize each protected column to zero mean, unit variance before
    /// fitting directions (the stats are kept on the transform).
    bool standardize_protected = true;
    /// Check the input kernel for positive semi-definiteness (one eigensolve).
    bool validate_input = true;
    /// Stop cleanly (instead of throwing) when an iteration finds no
    /// removable information left; the transform then carries fewer
    /// iterations than requested.
    bool stop_on_degenerate = false;
    NormalizationPath normalization = NormalizationPath::automatic;
    /// Largest admissible magnification through the normalization term: the
    /// scalar reciprocal for one attribute, the reciprocal of the smallest
    /// Gram eigenvalue otherwise. An iteration above the cap counts as
    /// degenerate. Floating-point noise in an iteration is amplified by
    /// roughly machine epsilon times this value, so callers comparing
    /// against an independent route should lower it well below the default.
    double max_normalization = 1e12;
};

struct IterationDiagnostics {
    int iteration = 0;        // 1-based
    /// Normalization scale: the scalar reciprocal for one attribute, the
    /// condition number of the l-by-l normalization matrix otherwise.
    double normalization = 0.0;
    /// Max over protected columns of |K_i B_{i-1} p| after the update; the
    /// kernel-space image of the direction that was just removed.
    double residual_norm = 0.0;
};

/// The accumulated row transformation taking the original training kernel to
/// its decorrelated counterpart; applies unchanged to out-of-sample
/// cross-kernels against the same training set.
class FairTransform {
public:
    FairTransform(Eigen::MatrixXd t_total, int iterations, double ridge_alpha,
                  std::uint64_t source_fingerprint, std::uint64_t result_fingerprint,
                  std::vector<IterationDiagnostics> per_iteration,
                  Eigen::VectorXd protected_mean, Eigen::VectorXd protected_std);

    /// Identity transform for a kernel with the given fingerprint.
    static FairTransform identity(Eigen::Index n, double ridge_alpha, std::uint64_t fingerprint);

    const Eigen::MatrixXd& matrix() const { return t_total_; }
    Eigen::Index size() const { return t_total_.rows(); }
    int iterations() const { return iterations_; }
    double ridge_alpha() const { return ridge_alpha_; }
    std::uint64_t source_fingerprint() const { return source_fingerprint_; }
    std::uint64_t result_fingerprint() const { return result_fingerprint_; }
    const std::vector<IterationDiagnostics>& per_iteration() const { return per_iteration_; }
    const Eigen::VectorXd& protected_mean() const { return protected_mean_; }
    const Eigen::VectorXd& protected_std() const { return protected_std_; }

private:
    Eigen::MatrixXd t_total_;
    int iterations_;
    double ridge_alpha_;
    std::uint64_t source_fingerprint_;
    std::uint64_t result_fingerprint_;
    std::vector<IterationDiagnostics> per_iteration_;
    Eigen::VectorXd protected_mean_;
    Eigen::VectorXd protected_std_;
};

struct DecompositionResult {
    KernelMatrix kernel;       // K_(m)
    FairTransform transform;   // T_m with K_(m) = K_(0) T_m
};

/// Iteratively removes ridge-predictable information about the protected
/// attributes from a square kernel, entirely in kernel-matrix space.
DecompositionResult decompose(const KernelMatrix& kernel, const ProtectedAttributes& attrs,
                              const DecompositionParams& params);

/// Same pass as decompose, snapshotting the state at each requested iteration
/// count (ascending); larger counts continue from smaller ones instead of
/// recomputing.
std::vector<DecompositionResult> decompose_checkpoints(const KernelMatrix& kernel,
                                                       const ProtectedAttributes& attrs,
                                                       const DecompositionParams& params,
                                                       std::span<const int> m_values);

/// Applies a fitted transform to a k x n cross-kernel (rows: new points,
/// columns: original training points). Verifies provenance when the input
/// carries it, and stamps the output as compatible with the transformed
/// training kernel.
KernelMatrix apply_transform(const KernelMatrix& cross, const FairTransform& transform);

/// Explicit-feature-space route used to cross-check decompose: factor the
/// kernel through its eigendecomposition, project the factor iteratively, and
/// rebuild the kernel from the projected factor.
struct EmpiricalFeatureSpace {
    Eigen::MatrixXd g;                  // initial factor, g g^T = K
    Eigen::VectorXd eigenvalues;        // descending, clamped at 0 below cutoff
    Eigen::MatrixXd eigenvectors;       // orthonormal columns, same order
    Eigen::MatrixXd g_projected;        // factor after all iterations
    Eigen::MatrixXd projection;         // accumulated projection product
    std::vector<Eigen::MatrixXd> w_history;  // fitted direction(s) per iteration, n x l
};

struct OracleDecompositionResult {
    KernelMatrix kernel;
    EmpiricalFeatureSpace feature_space;
    int completed_iterations = 0;
};

/// Eigenvalues below `eigen_cutoff_scale * lambda_max` are clamped to zero
/// when building the factor. Lower the scale when the kernel spectrum spans
/// more than ten decades and the tail still carries signal, otherwise the
/// clamp itself becomes the dominant difference between the two routes.
/// Exact inverse mode only.
OracleDecompositionResult oracle_decompose(const KernelMatrix& kernel,
                                           const ProtectedAttributes& attrs,
                                           const DecompositionParams& params,
                                           double eigen_cutoff_scale = 1e-10);

/// Norm of K_next (K_prev + alpha I)^{-1} p per protected column: how visible
/// the fitted direction of K_prev still is in K_next. Near zero right after a
/// decomposition iteration. Columns are standardized first when `standardize`
/// is set, matching what decompose fits internally.
Eigen::VectorXd residual_protected_norm(const KernelMatrix& k_prev, const KernelMatrix& k_next,
                                        const ProtectedAttributes& attrs, double ridge_alpha,
                                        bool standardize = true);

}  // namespace fkd
