#include "inrshape/random.hpp"

#include <array>
#include <random>

namespace inrshape {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::seed_seq seq{std::uint32_t(base), std::uint32_t(base >> 32), std::uint32_t(stream),
                      std::uint32_t(stream >> 32)};
    std::array<std::uint32_t, 2> out{};
    seq.generate(out.begin(), out.end());
    return (std::uint64_t(out[1]) << 32) | out[0];
}

}  // namespace inrshape
