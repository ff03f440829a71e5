#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace longcot::util {

// FNV-1a, used wherever the pipeline needs a stable platform-independent hash
// (mock responses, per-question seeds). Not for security.
inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ull;

constexpr std::uint64_t fnv1a(std::string_view data, std::uint64_t state = kFnvOffset) {
    for (unsigned char c : data) {
        state ^= c;
        state *= kFnvPrime;
    }
    return state;
}

constexpr std::uint64_t fnv1a_mix(std::uint64_t state, std::uint64_t value) {
    for (int i = 0; i < 8; ++i) {
        state ^= (value >> (8 * i)) & 0xffu;
        state *= kFnvPrime;
    }
    return state;
}

// splitmix64 finalizer; decorrelates sequential seeds before they reach an RNG.
constexpr std::uint64_t scramble(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
std::vector<std::string> split_lines(std::string_view text);

// Current time as ISO-8601 UTC, e.g. "2026-08-10T12:34:56Z".
std::string utc_timestamp();

}  // namespace longcot::util
