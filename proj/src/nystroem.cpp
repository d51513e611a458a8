#include "fkd/nystroem.hpp"

#include "fkd/errors.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace fkd {

namespace {

void check_params(Eigen::Index n, const NystroemParams& params) {
    if (params.landmark_count < 1 || params.landmark_count > n) {
        throw ValidationError("landmark_count must lie in [1, " + std::to_string(n) + "], got " +
                              std::to_string(params.landmark_count));
    }
}

}  // namespace

std::vector<Eigen::Index> sample_landmarks(Eigen::Index n, const NystroemParams& params) {
    if (n < 1) throw ValidationError("cannot sample landmarks from an empty kernel");
    check_params(n, params);

    std::vector<Eigen::Index> pool(static_cast<std::size_t>(n));
    std::iota(pool.begin(), pool.end(), Eigen::Index{0});

    // Partial Fisher-Yates driven directly by the raw mt19937_64 stream;
    // std::uniform_int_distribution is implementation-defined and would break
    // cross-platform reproducibility of sampled landmarks.
    std::mt19937_64 rng(params.seed);
    const auto count = static_cast<std::size_t>(params.landmark_count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint64_t span = static_cast<std::uint64_t>(n) - i;
        const std::size_t j = i + static_cast<std::size_t>(rng() % span);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(count);
    return pool;
}

Eigen::MatrixXd nystroem_inverse(const Eigen::Ref<const Eigen::MatrixXd>& kernel, double alpha,
                                 const NystroemParams& params) {
    const Eigen::Index n = kernel.rows();
    if (kernel.cols() != n) throw ValidationError("nystroem_inverse requires a square matrix");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw ValidationError("nystroem_inverse requires a positive finite alpha");
    }
    check_params(n, params);

    const std::vector<Eigen::Index> landmarks = sample_landmarks(n, params);
    const auto p = static_cast<Eigen::Index>(landmarks.size());

    Eigen::MatrixXd k_np = kernel(Eigen::all, landmarks);            // n x p
    Eigen::MatrixXd k_pn = k_np.transpose();                         // p x n
    Eigen::MatrixXd k_pp = kernel(landmarks, landmarks);             // p x p

    // Small diagonal jitter guards the inner solve against near-singular
    // landmark blocks without visibly perturbing well-posed ones.
    const double jitter = 1e-10 * k_pp.trace() / static_cast<double>(p);
    k_pp.diagonal().array() += jitter;

    Eigen::MatrixXd inner = k_pp + (1.0 / alpha) * (k_pn * k_np);    // p x p
    inner = 0.5 * (inner + inner.transpose()).eval();

    Eigen::LLT<Eigen::MatrixXd> llt(inner);
    if (llt.info() != Eigen::Success) {
        throw LandmarkError(
            "landmark system is numerically singular; use more landmarks or a different seed");
    }

    const double inv_alpha = 1.0 / alpha;
    Eigen::MatrixXd b = -(inv_alpha * inv_alpha) * (k_np * llt.solve(k_pn));
    b.diagonal().array() += inv_alpha;
    b = 0.5 * (b + b.transpose()).eval();
    return b;
}

Eigen::MatrixXd nystroem_inverse(const KernelMatrix& kernel, double alpha,
                                 const NystroemParams& params) {
    if (kernel.kind() != KernelKind::square) {
        throw ValidationError("nystroem_inverse requires a square kernel");
    }
    return nystroem_inverse(Eigen::Ref<const Eigen::MatrixXd>(kernel.data()), alpha, params);
}

}  // namespace fkd
