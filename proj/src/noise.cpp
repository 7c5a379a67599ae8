#include "pathmkv/noise.hpp"

#include "pathmkv/errors.hpp"

#include <cmath>
#include <numbers>

namespace pathmkv {

namespace {

constexpr std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

std::uint64_t hash_key(std::uint64_t seed, Stream stream, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    std::uint64_t h = splitmix(seed);
    h = splitmix(h ^ static_cast<std::uint64_t>(stream));
    h = splitmix(h ^ a);
    h = splitmix(h ^ b);
    h = splitmix(h ^ c);
    return h;
}

double keyed_uniform(std::uint64_t seed, Stream stream, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    // 53 high bits, shifted by half an ulp to stay inside (0, 1).
    const std::uint64_t bits = hash_key(seed, stream, a, b, c) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double keyed_normal(std::uint64_t seed, Stream stream, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    const double u1 = keyed_uniform(seed, stream, a, b, 2 * c);
    const double u2 = keyed_uniform(seed, stream, a, b, 2 * c + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double NoiseStream::increment(std::uint64_t particle, std::uint64_t step, std::uint64_t coord, std::uint64_t steps,
                              double dt) const {
    if (steps == 0 || base_steps_ % steps != 0) {
        throw ConfigError("noise base grid (" + std::to_string(base_steps_) + " steps) is not a refinement of " +
                          std::to_string(steps) + " steps");
    }
    const std::uint64_t refine = base_steps_ / steps;
    if (refine == 1) {
        return std::sqrt(dt) * keyed_normal(seed_, Stream::brownian, particle, step, coord);
    }
    double sum = 0.0;
    for (std::uint64_t l = 0; l < refine; ++l) {
        sum += keyed_normal(seed_, Stream::brownian, particle, step * refine + l, coord);
    }
    return std::sqrt(dt / static_cast<double>(refine)) * sum;
}

} // namespace pathmkv
