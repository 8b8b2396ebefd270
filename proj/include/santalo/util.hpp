#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace santalo {

// 64-bit FNV-1a; stable across platforms, used for instance hashes.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

// Shortest round-trip decimal for a double ("inf"/"-inf"/"nan" spelled out).
std::string fmt_double(double v);

}  // namespace santalo
