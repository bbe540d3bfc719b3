#pragma once

#include <cstdint>

namespace inrshape {

/// Independent child seed for stream `stream` of a base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace inrshape
