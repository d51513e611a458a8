#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>

namespace fkd {

/// FNV-1a hash over the raw bytes of a matrix (plus its shape). Used as a
/// cheap content fingerprint to tie transforms and models back to the kernel
/// they were built from.
std::uint64_t matrix_fingerprint(const Eigen::Ref<const Eigen::MatrixXd>& m);

std::string fingerprint_hex(std::uint64_t fp);
std::uint64_t fingerprint_from_hex(const std::string& hex);

/// Counter-based seed split: derives an independent stream seed from a base
/// seed and a stream index, so parallel workers never share RNG state.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// True when every entry is finite.
bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& m);

/// Throws ValidationError when the matrix is empty or contains NaN/Inf.
void require_finite(const Eigen::Ref<const Eigen::MatrixXd>& m, const std::string& what);

}  // namespace fkd
