#pragma once

#include "fkd/kernel_matrix.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace fkd {

struct NystroemParams {
    Eigen::Index landmark_count = 0;
    std::uint64_t seed = 0;
};

/// Draws landmark_count distinct indices from 0..n-1, uniformly without
/// replacement. Deterministic for a fixed seed, independent of platform.
std::vector<Eigen::Index> sample_landmarks(Eigen::Index n, const NystroemParams& params);

/// Approximates (K + alpha*Id)^{-1} from landmark_count sampled columns via
/// the matrix inversion lemma. Only a landmark_count-sized system is solved;
/// the result is symmetrized before returning. Exact when every column is a
/// landmark or the sampled columns span K's range.
Eigen::MatrixXd nystroem_inverse(const KernelMatrix& kernel, double alpha,
                                 const NystroemParams& params);

/// Operational core of the above for callers that already hold a validated
/// symmetric matrix (skips the KernelMatrix wrapping).
Eigen::MatrixXd nystroem_inverse(const Eigen::Ref<const Eigen::MatrixXd>& kernel, double alpha,
                                 const NystroemParams& params);

}  // namespace fkd
