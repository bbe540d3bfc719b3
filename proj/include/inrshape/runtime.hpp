#pragma once

namespace inrshape {

/// Keeps large freed blocks on the heap instead of returning them to the OS.
/// Training allocates and frees megabyte-sized activations every step, and the
/// default glibc policy turns each of those into page faults. No-op elsewhere.
void configure_allocator();

}  // namespace inrshape
