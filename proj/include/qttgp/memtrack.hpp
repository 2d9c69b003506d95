#pragma once

#include <atomic>
#include <cstdint>

namespace qttgp::memtrack {

namespace detail {
extern std::atomic<std::uint64_t> live_bytes;
extern std::atomic<std::uint64_t> peak_bytes;
extern std::atomic<std::uint64_t> total_bytes;
extern std::atomic<bool> hooked;
void on_alloc(std::uint64_t bytes) noexcept;
void on_free(std::uint64_t bytes) noexcept;
}  // namespace detail

/// True when the allocator instrumentation is linked into this binary.
bool active();

std::uint64_t live_bytes();   ///< currently allocated heap bytes
std::uint64_t peak_bytes();   ///< high-water mark since the last reset
std::uint64_t total_bytes();  ///< cumulative bytes allocated since the last reset

void reset_peak();   ///< peak := live
void reset_total();  ///< total := 0

}  // namespace qttgp::memtrack
