#include "alforge/text.hpp"

#include "alforge/core.hpp"

#include <cctype>
#include <charconv>
#include <cmath>

namespace alforge::text {

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string format_fixed(double v, int decimals) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, decimals);
  return std::string(buf, end);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

namespace {
template <class T>
T parse(std::string_view s, std::string_view field, const char* what) {
  s = trim(s);
  T v{};
  const char* first = s.data();
  if (!s.empty() && s.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw Error(ErrorCode::InvalidConfig, std::string(field) + ": expected " + what + ", got `" + std::string(s) + "`");
  return v;
}
}  // namespace

int parse_int(std::string_view s, std::string_view field) { return parse<int>(s, field, "an integer"); }
std::uint64_t parse_u64(std::string_view s, std::string_view field) {
  return parse<std::uint64_t>(s, field, "a non-negative integer");
}
double parse_double(std::string_view s, std::string_view field) {
  const double v = parse<double>(s, field, "a number");
  if (!std::isfinite(v)) throw Error(ErrorCode::InvalidConfig, std::string(field) + ": must be finite");
  return v;
}

bool parse_bool(std::string_view s, std::string_view field) {
  s = trim(s);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw Error(ErrorCode::InvalidConfig, std::string(field) + ": expected true/false, got `" + std::string(s) + "`");
}

}  // namespace alforge::text
