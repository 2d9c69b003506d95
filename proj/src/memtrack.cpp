#include "qttgp/memtrack.hpp"

namespace qttgp::memtrack {

namespace detail {

std::atomic<std::uint64_t> live_bytes{0};
std::atomic<std::uint64_t> peak_bytes{0};
std::atomic<std::uint64_t> total_bytes{0};
std::atomic<bool> hooked{false};

void on_alloc(std::uint64_t bytes) noexcept {
  total_bytes.fetch_add(bytes, std::memory_order_relaxed);
  const std::uint64_t live =
      live_bytes.fetch_add(bytes, std::memory_order_relaxed) + bytes;
  std::uint64_t peak = peak_bytes.load(std::memory_order_relaxed);
  while (live > peak &&
         !peak_bytes.compare_exchange_weak(peak, live, std::memory_order_relaxed)) {
  }
}

void on_free(std::uint64_t bytes) noexcept {
  live_bytes.fetch_sub(bytes, std::memory_order_relaxed);
}

}  // namespace detail

bool active() { return detail::hooked.load(std::memory_order_relaxed); }
std::uint64_t live_bytes() { return detail::live_bytes.load(std::memory_order_relaxed); }
std::uint64_t peak_bytes() { return detail::peak_bytes.load(std::memory_order_relaxed); }
std::uint64_t total_bytes() { return detail::total_bytes.load(std::memory_order_relaxed); }

void reset_peak() {
  detail::peak_bytes.store(detail::live_bytes.load(std::memory_order_relaxed),
                           std::memory_order_relaxed);
}

void reset_total() { detail::total_bytes.store(0, std::memory_order_relaxed); }

}  // namespace qttgp::memtrack
