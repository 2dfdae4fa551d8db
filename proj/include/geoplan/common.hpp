#pragma once

// Shared primitives: 2-D points, error type, seeded RNG streams.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace geoplan {

struct Vec2 {
    double x{0.0};
    double y{0.0};

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    bool operator==(const Vec2& o) const { return x == o.x && y == o.y; }

    double norm() const { return std::hypot(x, y); }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
};

inline double distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

// Single error type for contract violations across the library.
class GeoplanError : public std::runtime_error {
public:
    enum class Kind {
        Dimension,
        Parameter,
        Degenerate,
        Lookup,
        NoPath,
        Io,
        Generation,
        Numeric,
        Divergence,
    };

    GeoplanError(Kind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}

    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

[[noreturn]] inline void fail(GeoplanError::Kind kind, const std::string& msg) {
    throw GeoplanError(kind, msg);
}

namespace detail {

inline uint64_t splitmix64(uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline uint64_t fnv1a(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<uint8_t>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace detail

// All randomness flows from one root seed through named sub-streams so
// individual pipeline stages can be re-run in isolation.
class RngStream {
public:
    explicit RngStream(uint64_t seed) : gen_(seed) {}

    RngStream(uint64_t rootSeed, std::string_view name) {
        uint64_t s = rootSeed ^ detail::fnv1a(name);
        // decorrelate nearby seeds
        uint64_t mixed = detail::splitmix64(s);
        gen_.seed(mixed);
    }

    // indexed sub-stream, e.g. per-episode or per-walk
    RngStream(uint64_t rootSeed, std::string_view name, uint64_t index) {
        uint64_t s = rootSeed ^ detail::fnv1a(name) ^ (0x9e3779b97f4a7c15ULL * (index + 1));
        uint64_t mixed = detail::splitmix64(s);
        gen_.seed(mixed);
    }

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(gen_); }

    double normal(double mean = 0.0, double stddev = 1.0) {
        return std::normal_distribution<double>(mean, stddev)(gen_);
    }

    // inclusive bounds
    int64_t uniformInt(int64_t lo, int64_t hi) {
        return std::uniform_int_distribution<int64_t>(lo, hi)(gen_);
    }

    std::mt19937_64& engine() { return gen_; }

private:
    std::mt19937_64 gen_;
};

// Root of the seed tree. Keeps both the raw seed (for reporting) and the
// derivation base used by substream().
class SeedTree {
public:
    explicit SeedTree(uint64_t rootSeed) : root_(rootSeed) {}

    uint64_t root() const { return root_; }

    RngStream stream(std::string_view name) const {
        uint64_t s = root_ ^ detail::fnv1a(name);
        return RngStream(detail::splitmix64(s));
    }

    RngStream stream(std::string_view name, uint64_t index) const {
        uint64_t s = root_ ^ detail::fnv1a(name) ^ (0x9e3779b97f4a7c15ULL * (index + 1));
        return RngStream(detail::splitmix64(s));
    }

    // deterministic integer seed for components that take a plain seed
    uint64_t derive(std::string_view name) const {
        uint64_t s = root_ ^ detail::fnv1a(name);
        return detail::splitmix64(s);
    }

private:
    uint64_t root_;
};

inline double l2norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

// wrap angle into [0, 2*pi)
inline double wrapAngle(double theta) {
    const double twoPi = 2.0 * M_PI;
    double t = std::fmod(theta, twoPi);
    if (t < 0) t += twoPi;
    return t;
}

}  // namespace geoplan
