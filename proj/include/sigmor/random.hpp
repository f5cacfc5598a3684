#ifndef SIGMOR_RANDOM_HPP
#define SIGMOR_RANDOM_HPP

#include <cstdint>

namespace sigmor
{

/// splitmix64 finalizer; a bijective 64-bit mix.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Hash of a key tuple, usable as a counter-based stream position.
std::uint64_t hash_key(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0, std::uint64_t d = 0) noexcept;

/// Uniform in (0, 1) from a 64-bit counter value.
double counter_uniform(std::uint64_t key) noexcept;

/// Standard normal draw that depends only on the key (Box-Muller on two
/// derived uniforms).
double counter_normal(std::uint64_t key) noexcept;

} // namespace sigmor

#endif
