#pragma once

namespace burgan {

/// Keeps large freed blocks in the heap instead of returning them to the OS. Training allocates
/// and frees the same megabyte-sized tape matrices every step; with the default glibc settings
/// each one is a fresh mmap plus page faults. No-op off glibc.
void keep_freed_memory();

}  // namespace burgan
