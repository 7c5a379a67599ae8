#pragma once

#include <cstdint>

namespace pathmkv {

/// Stream tags separating independent uses of one root seed.
enum class Stream : std::uint64_t {
    brownian = 1,
    initial = 2,
    randomizer = 3,
    projection = 4,
    auxiliary = 5,
};

/// Stateless keyed hash (splitmix64 finalizer chain). Output depends only on the key.
std::uint64_t hash_key(std::uint64_t seed, Stream stream, std::uint64_t a, std::uint64_t b = 0,
                       std::uint64_t c = 0);

/// Uniform on the open interval (0, 1), keyed.
double keyed_uniform(std::uint64_t seed, Stream stream, std::uint64_t a, std::uint64_t b = 0,
                     std::uint64_t c = 0);

/// Standard normal via Box-Muller on two keyed uniforms.
double keyed_normal(std::uint64_t seed, Stream stream, std::uint64_t a, std::uint64_t b = 0,
                    std::uint64_t c = 0);

/// Brownian increments keyed by (particle, step, coordinate).
///
/// Increments are generated on a base grid of `base_steps` steps over the
/// horizon and summed when the integration grid is coarser, so that ladders of
/// step sizes see the same Brownian path.
class NoiseStream {
public:
    NoiseStream() = default;
    NoiseStream(std::uint64_t seed, std::uint64_t base_steps) : seed_(seed), base_steps_(base_steps) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t base_steps() const noexcept { return base_steps_; }

    /// Increment B_{t_{step+1}} - B_{t_step} of coordinate `coord` for a grid of
    /// `steps` steps with spacing dt. `steps` must divide base_steps.
    double increment(std::uint64_t particle, std::uint64_t step, std::uint64_t coord, std::uint64_t steps,
                     double dt) const;

private:
    std::uint64_t seed_ = 0;
    std::uint64_t base_steps_ = 0;
};

} // namespace pathmkv
