#pragma once

// Text <-> value helpers shared by the config, manifest and report writers.

#include <cstdint>
#include <string>
#include <string_view>

namespace alforge::text {

/// Shortest text that parses back to exactly `v`.
std::string format_double(double v);
/// Fixed-point with `decimals` places.
std::string format_fixed(double v, int decimals);

// Each parser throws Error(InvalidConfig) naming `field` on failure.
int parse_int(std::string_view s, std::string_view field);
std::uint64_t parse_u64(std::string_view s, std::string_view field);
double parse_double(std::string_view s, std::string_view field);
bool parse_bool(std::string_view s, std::string_view field);

std::string_view trim(std::string_view s);

}  // namespace alforge::text
