#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace mmsc {

// FNV-1a over the bytes of `text`. Stable across platforms and runs; used
// wherever a value has to hash identically between processes (cache keys,
// template fingerprints, mock synthesis).
uint64_t fnv1a64(std::string_view text, uint64_t seed = 14695981039346656037ull);

// 32 lowercase hex chars built from two independently seeded FNV passes.
std::string stable_hash_hex(std::string_view text);

} // namespace mmsc
