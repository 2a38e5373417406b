#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace microvol {

/// SplitMix64 finalizer. Used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seed of replication `path_index` under `master_seed`. A `stream` tag separates
/// independent experiments sharing one master seed (e.g. one tag per horizon).
constexpr std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t path_index,
                                    std::uint64_t stream = 0) noexcept {
    return mix64(mix64(master_seed ^ mix64(stream + 0x632be59bd9b4e019ULL)) + path_index);
}

/// Record of where a path's randomness came from.
struct SeedRecord {
    std::uint64_t master_seed = 0;
    std::uint64_t path_index = 0;
    std::uint64_t stream = 0;
    std::uint64_t seed = 0;
};

inline SeedRecord make_seed_record(std::uint64_t master_seed, std::uint64_t path_index,
                                   std::uint64_t stream = 0) {
    return {master_seed, path_index, stream, derive_seed(master_seed, path_index, stream)};
}

/// Per-path random source. Owns its engine; never shared between workers.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on the open interval (0, 1).
    double uniform() {
        double u;
        do {
            u = unit_(engine_);
        } while (u <= 0.0);
        return u;
    }
    double exponential(double rate) { return -std::log(uniform()) / rate; }
    double normal() { return normal_(engine_); }

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::mt19937_64 engine_;
    std::uniform_real_distribution<double> unit_{0.0, 1.0};
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace microvol
