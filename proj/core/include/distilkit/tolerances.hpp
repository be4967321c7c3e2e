#pragma once

#include <cstddef>

namespace distilkit {

/// Tolerance for state validity: hermiticity, unit trace, positivity.
inline constexpr double kStateTol = 1e-9;
/// Tolerance for exact linear-algebra identities (traces, marginals, symmetry).
inline constexpr double kExactTol = 1e-12;
/// Filtered-weight floor below which a see-saw denominator counts as zero.
inline constexpr double kDegenerateWeight = 1e-14;
/// Default cap on the total operator dimension of a dense state.
inline constexpr std::size_t kDefaultMaxDimension = 4096;

/// Current cap on dense operator dimension; thread-safe.
std::size_t max_dimension() noexcept;
void set_max_dimension(std::size_t dim) noexcept;

}  // namespace distilkit
