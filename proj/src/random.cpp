#include <sigmor/random.hpp>

#include <cmath>
#include <numbers>

namespace sigmor
{

std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t hash_key(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) noexcept
{
    std::uint64_t h = mix64(a);
    h = mix64(h ^ b);
    h = mix64(h ^ c);
    return mix64(h ^ d);
}

double counter_uniform(std::uint64_t key) noexcept
{
    // 53 random bits, shifted off zero
    return (static_cast<double>(mix64(key) >> 11) + 0.5) * 0x1.0p-53;
}

double counter_normal(std::uint64_t key) noexcept
{
    const double u1 = counter_uniform(key);
    const double u2 = counter_uniform(key ^ 0xd1b54a32d192ed03ULL);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

} // namespace sigmor
