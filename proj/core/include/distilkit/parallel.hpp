#pragma once

#include <cstddef>
#include <functional>

namespace distilkit {

/// Worker count used by parallel_for. Defaults to hardware concurrency.
std::size_t thread_count() noexcept;

/// Sets the worker count; 0 restores the default.
void set_thread_count(std::size_t n) noexcept;

/// Runs body(i) for i in [0, n). Results must be written to per-index slots so
/// that callers reduce deterministically, independent of the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace distilkit
