#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ellv {

/// SplitMix64 finalizer. Whitens seeds and derives per-stream seeds.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// 64-bit FNV-1a, used to hash experiment names into the seeding policy.
inline std::uint64_t fnv1a64(const char* s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (; *s != '\0'; ++s) {
        h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(*s));
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Seed of stream `stream` split off `base`. Streams derived this way are
/// independent for Monte-Carlo purposes; sweeps hand one stream per trial.
inline std::uint64_t stream_seed(std::uint64_t base, std::uint64_t stream) {
    return mix64(base + 0x9e3779b97f4a7c15ULL * (stream + 1));
}

/// Deterministic random source: a std::mt19937_64 engine (fully specified by
/// the standard), uniforms from the top 53 bits, standard normals via the
/// polar Box-Muller (Marsaglia) transform. Identical seeds reproduce the
/// identical stream, which is what makes golden CSVs byte-stable.
///
/// Not thread-safe; use one instance per trial/thread.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

    /// Independent stream for trial `stream` of a sweep seeded with `base`.
    static Rng for_stream(std::uint64_t base, std::uint64_t stream) {
        return Rng(stream_seed(base, stream));
    }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0,1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Standard normal draw.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace ellv
