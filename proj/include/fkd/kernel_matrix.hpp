#pragma once

#include "fkd/common.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <utility>

namespace fkd {

enum class KernelKind { square, cross };

/// A Gram matrix (n x n, symmetric PSD) or a rectangular cross-kernel
/// (k x n, test rows against training columns), with provenance metadata.
///
/// The provenance field, when set, holds the fingerprint of the square
/// training kernel this matrix is compatible with; transform application and
/// model prediction verify it when available.
class KernelMatrix {
public:
    /// Wraps a square symmetric matrix. Throws ValidationError when the data
    /// is not square, not finite, or asymmetric beyond 1e-10 relative to the
    /// largest absolute entry.
    static KernelMatrix square(Eigen::MatrixXd data);

    /// Wraps a rectangular (or square) cross-kernel; only finiteness is checked.
    static KernelMatrix cross(Eigen::MatrixXd data);

    const Eigen::MatrixXd& data() const { return data_; }
    KernelKind kind() const { return kind_; }
    bool symmetric() const { return symmetric_; }
    Eigen::Index rows() const { return data_.rows(); }
    Eigen::Index cols() const { return data_.cols(); }

    /// Content hash, computed lazily and cached.
    std::uint64_t fingerprint() const;

    std::optional<std::uint64_t> provenance() const { return provenance_; }
    void set_provenance(std::uint64_t fp) { provenance_ = fp; }

    /// Smallest and largest eigenvalue of a square kernel (full symmetric
    /// eigensolve, eigenvalues only).
    std::pair<double, double> eigenvalue_range() const;

    /// Throws ValidationError unless min eigenvalue >= -tol * max eigenvalue.
    void validate_psd(double tol = 1e-8) const;

private:
    KernelMatrix(Eigen::MatrixXd data, KernelKind kind, bool symmetric)
        : data_(std::move(data)), kind_(kind), symmetric_(symmetric) {}

    Eigen::MatrixXd data_;
    KernelKind kind_;
    bool symmetric_;
    std::optional<std::uint64_t> provenance_;
    mutable std::optional<std::uint64_t> fingerprint_;
};

}  // namespace fkd
