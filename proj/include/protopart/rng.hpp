#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace protopart {

uint64_t splitmix64(uint64_t& x);
uint64_t fnv1a64(std::string_view s);

// Substream seed derivation: the master seed is mixed with the FNV-1a hash
// of the stream name through one splitmix64 step. Changing either input
// changes the whole stream.
uint64_t derive_seed(uint64_t master_seed, std::string_view name);

// xoshiro256++ generator. The entire state is four 64-bit words, which makes
// snapshots trivial and bit-exact. Distributions are implemented here rather
// than taken from <random> so that sequences do not depend on the standard
// library implementation.
class RngStream {
public:
    RngStream() : RngStream(0) {}
    explicit RngStream(uint64_t seed);

    uint64_t next_u64();
    // uniform in [0,1), 53 significant bits
    double next_double();
    // uniform integer in [0,n), rejection sampling (n > 0)
    uint64_t next_below(uint64_t n);
    // Box-Muller; consumes exactly two uniform draws per call
    double next_normal(double mean = 0.0, double sigma = 1.0);

    std::array<uint64_t, 4> state() const { return s_; }
    void set_state(const std::array<uint64_t, 4>& s) { s_ = s; }

private:
    std::array<uint64_t, 4> s_;
};

template <typename T>
void shuffle(std::vector<T>& v, RngStream& rng) {
    for (size_t i = v.size(); i > 1; --i) {
        size_t j = static_cast<size_t>(rng.next_below(i));
        std::swap(v[i - 1], v[j]);
    }
}

struct RngSnapshot {
    std::map<std::string, std::array<uint64_t, 4>> states;
};

struct EnvRecord {
    std::string platform;
    std::map<std::string, std::string> versions;
    std::map<std::string, int> batch_sizes;
};

// The fixed set of named substreams. Every source of randomness in the
// library draws from exactly one of these, so adding a consumer to one
// stream can never shift the sequences seen by the others.
const std::vector<std::string>& substream_names();

class ReproContext {
public:
    explicit ReproContext(uint64_t master_seed);

    uint64_t master_seed() const { return master_seed_; }
    // throws SchemaMismatch for names outside the fixed set
    RngStream& stream(const std::string& name);
    const RngStream& stream(const std::string& name) const;

    RngSnapshot capture() const;
    // throws SchemaMismatch if the snapshot's name set differs
    void restore(const RngSnapshot& snap);

    EnvRecord& env() { return env_; }
    const EnvRecord& env() const { return env_; }

    void write_seed_file(const std::string& path) const;
    void write_env_file(const std::string& path) const;

private:
    uint64_t master_seed_;
    std::map<std::string, RngStream> streams_;
    EnvRecord env_;
};

}  // namespace protopart
