#pragma once

#include <cstddef>
#include <exception>
#include <functional>

namespace burgan {

/// Worker count from --threads, falling back to BURGAN_THREADS, then hardware concurrency.
/// A value of 0 means "not set".
std::size_t resolve_thread_count(std::size_t requested);

/// Runs body(i) for i in [0, count) on up to `threads` workers. Work is handed out by index,
/// so results written to slot i are independent of scheduling. The first exception raised
/// (lowest index) is rethrown after all workers join.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& body);

}  // namespace burgan
