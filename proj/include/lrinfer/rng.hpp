#pragma once

#include <cstdint>
#include <random>

namespace lrinfer {

// splitmix64: cheap, well-mixed 64-bit hash used to derive independent
// stream seeds from a base seed.
std::uint64_t splitmix64(std::uint64_t x);

// All sampling goes through these helpers instead of <random> distributions:
// the std:: distributions are implementation-defined, and we need byte-exact
// reproducibility of every artefact for a given seed.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // Uniform integer in [0, n) via rejection sampling (unbiased).
    std::uint64_t uniform_below(std::uint64_t n);

    // Uniform double in [0, 1) with 53 random bits.
    double uniform01();

    // Uniform double in [lo, hi).
    double uniform(double lo, double hi);

    bool bernoulli(double p) { return uniform01() < p; }

    // Standard normal via Box-Muller (both values used, cached).
    double gaussian();

    std::uint64_t raw() { return eng_(); }

  private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Stream seeds for animal i of a pool. The trajectory stream drives stimuli,
// choices and any label coin flips; the noise stream drives additive update
// noise, so toggling noise on/off never perturbs the trajectory draws.
inline std::uint64_t animal_seed(std::uint64_t master_seed, std::uint64_t i) {
    return master_seed ^ i;
}
inline std::uint64_t noise_stream_seed(std::uint64_t animal_seed_v) {
    return splitmix64(animal_seed_v + 0x9E3779B97F4A7C15ULL);
}

}  // namespace lrinfer
