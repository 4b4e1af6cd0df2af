#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <stdexcept>
#include <vector>

namespace fedrules {

// splitmix64 finalizer. Used instead of the std engines because the std
// distributions are implementation-defined; every stochastic choice in the
// simulator has to replay identically from a seed.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Counter-based sub-seed derivation: a root seed plus a tag sequence
// (stream id, client id, round index, ...) yields an independent stream.
// Adding clients or rounds does not perturb other streams.
inline std::uint64_t derive_seed(std::uint64_t root,
                                 std::initializer_list<std::uint64_t> tags) {
    std::uint64_t h = mix64(root ^ 0x5bf0363546e92799ULL);
    for (std::uint64_t t : tags) h = mix64(h ^ mix64(t));
    return h;
}

// Stream ids for derive_seed. Kept in one place so streams never collide.
enum SeedStream : std::uint64_t {
    kSeedDataset = 1,
    kSeedPartition = 2,
    kSeedClientInit = 3,
    kSeedClientRound = 4,
    kSeedDegrade = 5,
};

/// Deterministic, platform-stable pseudo-random stream (splitmix64 core).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). n must be positive.
    std::size_t uniform_below(std::size_t n) {
        if (n == 0) throw std::invalid_argument("Rng::uniform_below: n must be positive");
        const std::uint64_t bound = static_cast<std::uint64_t>(n);
        const std::uint64_t limit =
            std::numeric_limits<std::uint64_t>::max() / bound * bound;
        std::uint64_t r;
        do {
            r = next_u64();
        } while (r >= limit);
        return static_cast<std::size_t>(r % bound);
    }

    /// One biased coin flip. Always consumes exactly one draw, so streams
    /// stay aligned between runs that differ only in the probability.
    bool bernoulli(double p) { return uniform01() < p; }

    /// Standard normal via Box-Muller.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform01();  // (0, 1]
        double u2 = uniform01();
        double radius = std::sqrt(-2.0 * std::log(u1));
        double angle = 2.0 * 3.141592653589793238462643 * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    /// In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& xs) {
        for (std::size_t i = xs.size(); i > 1; --i) {
            std::size_t j = uniform_below(i);
            std::swap(xs[i - 1], xs[j]);
        }
    }

    /// Index drawn from a discrete distribution given by non-negative weights.
    std::size_t pick_weighted(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        if (total <= 0.0)
            throw std::invalid_argument("Rng::pick_weighted: weights sum to zero");
        double x = uniform01() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
            acc += weights[i];
            if (x < acc) return i;
        }
        return weights.size() - 1;
    }

private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace fedrules
