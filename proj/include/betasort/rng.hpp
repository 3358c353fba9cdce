#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace betasort {

// splitmix64 mixing step; the workhorse behind stream derivation.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Deterministic substream id from a root seed and a label path, e.g.
// derive_stream(seed, {kReplicationTag, r}). Replications, bootstrap draws
// and simulation stages each get their own stream so parallel scheduling
// cannot change any result.
inline std::uint64_t derive_stream(std::uint64_t seed,
                                   std::initializer_list<std::uint64_t> labels) {
    std::uint64_t state = seed;
    std::uint64_t h = splitmix64(state);
    for (std::uint64_t label : labels) {
        state ^= label + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        h = splitmix64(state);
    }
    return h;
}

// Stage labels used when deriving substreams.
inline constexpr std::uint64_t kFactorTag = 0xfac0;
inline constexpr std::uint64_t kPanelTag = 0x9a4e1;
inline constexpr std::uint64_t kDrawTag = 0xd4a3;
inline constexpr std::uint64_t kReplicationTag = 0x4e91;
inline constexpr std::uint64_t kPickTag = 0x91c4;

class RngStream {
  public:
    explicit RngStream(std::uint64_t stream_id) : eng_(stream_id) {}

    double normal() { return normal_(eng_); }
    double uniform() { return uniform_(eng_); }  // [0, 1)
    std::mt19937_64& engine() { return eng_; }

  private:
    std::mt19937_64 eng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace betasort
