#include "fkd/common.hpp"

#include "fkd/errors.hpp"

#include <bit>
#include <cstdio>
#include <stdexcept>

namespace fkd {

std::uint64_t matrix_fingerprint(const Eigen::Ref<const Eigen::MatrixXd>& m) {
    constexpr std::uint64_t kOffset = 14695981039346656037ull;
    constexpr std::uint64_t kPrime = 1099511628211ull;
    std::uint64_t h = kOffset;
    auto mix = [&h](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xffu;
            h *= kPrime;
        }
    };
    mix(static_cast<std::uint64_t>(m.rows()));
    mix(static_cast<std::uint64_t>(m.cols()));
    // Row-major traversal so the hash does not depend on Eigen's storage order.
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            mix(std::bit_cast<std::uint64_t>(m(i, j)));
    return h;
}

std::string fingerprint_hex(std::uint64_t fp) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fp));
    return std::string(buf);
}

std::uint64_t fingerprint_from_hex(const std::string& hex) {
    return std::stoull(hex, nullptr, 16);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    // splitmix64 over base xor a stream-offset constant
    std::uint64_t z = base + (stream + 1) * 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& m) {
    return m.allFinite();
}

void require_finite(const Eigen::Ref<const Eigen::MatrixXd>& m, const std::string& what) {
    if (m.size() == 0)
        throw ValidationError(what + ": empty matrix");
    if (!m.allFinite())
        throw ValidationError(what + ": contains NaN or Inf");
}

}  // namespace fkd
