#include "mmsc/hash.hpp"

#include <cstdio>

namespace mmsc {

uint64_t fnv1a64(std::string_view text, uint64_t seed) {
    uint64_t h = seed;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string stable_hash_hex(std::string_view text) {
    uint64_t a = fnv1a64(text);
    uint64_t b = fnv1a64(text, 0x9e3779b97f4a7c15ull);
    char buf[33];
    std::snprintf(buf, sizeof(buf), "%016llx%016llx", static_cast<unsigned long long>(a),
                  static_cast<unsigned long long>(b));
    return std::string(buf, 32);
}

} // namespace mmsc
