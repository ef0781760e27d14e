#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace ivccp {

/// Seeded random stream. Two streams built from the same (seed, stream_id)
/// produce identical draw sequences; distinct stream ids are decorrelated
/// through std::seed_seq.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }

    double uniform(double lo = 0.0, double hi = 1.0);
    double normal();
    std::uint64_t next_u64() { return engine_(); }

    /// Uniformly random permutation of 0..n-1.
    std::vector<std::size_t> permutation(std::size_t n);

    /// Child stream for a sub-task; deterministic in (seed, stream_id, tag).
    RngStream derive(std::uint64_t tag) const;

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
};

}  // namespace ivccp
