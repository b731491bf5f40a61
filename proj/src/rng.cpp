#include "protopart/rng.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include <nlohmann/json.hpp>

#include "protopart/errors.hpp"

namespace protopart {

uint64_t splitmix64(uint64_t& x) {
    x += 0x9E3779B97F4A7C15ULL;
    uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

uint64_t derive_seed(uint64_t master_seed, std::string_view name) {
    uint64_t x = master_seed ^ fnv1a64(name);
    return splitmix64(x);
}

static inline uint64_t rotl(uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

RngStream::RngStream(uint64_t seed) {
    uint64_t x = seed;
    for (auto& w : s_) w = splitmix64(x);
}

uint64_t RngStream::next_u64() {
    uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double RngStream::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

uint64_t RngStream::next_below(uint64_t n) {
    // rejection above the largest multiple of n, so the result is unbiased
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return x % n;
}

double RngStream::next_normal(double mean, double sigma) {
    double u1 = 1.0 - next_double();  // (0,1], keeps log finite
    double u2 = next_double();
    double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    return mean + sigma * z;
}

const std::vector<std::string>& substream_names() {
    static const std::vector<std::string> names = {
        "init", "shuffle", "augment", "smoothgrad", "randgrads", "synth_data"};
    return names;
}

ReproContext::ReproContext(uint64_t master_seed) : master_seed_(master_seed) {
    for (const auto& name : substream_names())
        streams_.emplace(name, RngStream(derive_seed(master_seed, name)));
#if defined(__linux__)
    env_.platform = "linux";
#elif defined(_WIN32)
    env_.platform = "windows";
#elif defined(__APPLE__)
    env_.platform = "darwin";
#else
    env_.platform = "unknown";
#endif
    env_.versions["compiler"] = __VERSION__;
}

RngStream& ReproContext::stream(const std::string& name) {
    auto it = streams_.find(name);
    if (it == streams_.end()) throw SchemaMismatch("unknown RNG substream: " + name);
    return it->second;
}

const RngStream& ReproContext::stream(const std::string& name) const {
    auto it = streams_.find(name);
    if (it == streams_.end()) throw SchemaMismatch("unknown RNG substream: " + name);
    return it->second;
}

RngSnapshot ReproContext::capture() const {
    RngSnapshot snap;
    for (const auto& [name, s] : streams_) snap.states[name] = s.state();
    return snap;
}

void ReproContext::restore(const RngSnapshot& snap) {
    if (snap.states.size() != streams_.size())
        throw SchemaMismatch("RNG snapshot has a different substream set");
    for (const auto& [name, state] : snap.states) {
        auto it = streams_.find(name);
        if (it == streams_.end())
            throw SchemaMismatch("RNG snapshot names unknown substream: " + name);
        it->second.set_state(state);
    }
}

void ReproContext::write_seed_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << master_seed_ << "\n";
}

void ReproContext::write_env_file(const std::string& path) const {
    nlohmann::json j;
    j["platform"] = env_.platform;
    j["versions"] = env_.versions;
    j["batch_sizes"] = env_.batch_sizes;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << j.dump(2) << "\n";
}

}  // namespace protopart
