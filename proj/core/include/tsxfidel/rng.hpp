#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace tsxfidel {

using Rng = std::mt19937_64;

// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

// Stable 64-bit FNV-1a; std::hash is not stable across implementations.
std::uint64_t hash_string(std::string_view s) noexcept;

// Derives an independent stream seed from an ordered key tuple. Every random
// stream in the library (explainer, ablation sample, background draw) is
// keyed this way, so results do not depend on evaluation order or worker count.
std::uint64_t stream_key(std::initializer_list<std::uint64_t> parts) noexcept;

inline Rng make_rng(std::uint64_t seed) { return Rng(mix64(seed)); }

}  // namespace tsxfidel
