#include "ivccp/numkit/rng.hpp"

#include <cmath>
#include <numeric>

namespace ivccp {
namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      0x9e3779b9u};
    return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(make_engine(seed, stream_id)) {}

double RngStream::uniform(double lo, double hi) {
    // 53 random bits -> [0, 1)
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
}

double RngStream::normal() {
    // Marsaglia polar method; avoids std::normal_distribution, whose
    // draw sequence is library-specific.
    for (;;) {
        const double a = uniform(-1.0, 1.0);
        const double b = uniform(-1.0, 1.0);
        const double r2 = a * a + b * b;
        if (r2 > 0.0 && r2 < 1.0) return a * std::sqrt(-2.0 * std::log(r2) / r2);
    }
}

std::vector<std::size_t> RngStream::permutation(std::size_t n) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(engine_() % i);
        std::swap(p[i - 1], p[j]);
    }
    return p;
}

RngStream RngStream::derive(std::uint64_t tag) const {
    return RngStream(seed_ ^ (0xd1b54a32d192ed03ULL * (tag + 1)), stream_id_ * 1000003ULL + tag + 1);
}

}  // namespace ivccp
