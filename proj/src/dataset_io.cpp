#include "alforge/core.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <string_view>

namespace alforge {

namespace {

std::string at_line(std::size_t line) { return "line " + std::to_string(line) + ": "; }

void append_double(std::string& out, double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  out.append(buf, end);
}

/// Splits on ASCII whitespace.
std::vector<std::string_view> tokenize(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <class T>
bool parse_number(std::string_view tok, T& value) {
  const char* first = tok.data();
  if (!tok.empty() && tok.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, tok.data() + tok.size(), value);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

}  // namespace

void write_dataset(std::ostream& out, const Dataset& data) {
  std::string buf;
  buf += std::to_string(data.size()) + ' ' + std::to_string(data.dim()) + ' ' + std::to_string(data.num_classes()) + '\n';
  const Matrix& x = data.inputs();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Truth& t = data.truth(static_cast<SampleId>(i));
    buf += std::to_string(i);
    buf += ' ';
    buf += std::to_string(static_cast<int>(t.category));
    buf += ' ';
    buf += std::to_string(t.cls);
    for (int r = 0; r < data.dim(); ++r) {
      buf += ' ';
      append_double(buf, x(r, static_cast<Eigen::Index>(i)));
    }
    buf += '\n';
    if (buf.size() > (1 << 16)) {
      out << buf;
      buf.clear();
    }
  }
  out << buf;
}

Dataset read_dataset(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  // Skip blank lines before the header.
  while (std::getline(in, line)) {
    ++lineno;
    if (!tokenize(line).empty()) break;
  }
  auto header = tokenize(line);
  long long n = -1, d = -1, k = -1;
  if (header.size() != 3 || !parse_number(header[0], n) || !parse_number(header[1], d) ||
      !parse_number(header[2], k) || n < 0 || d < 1 || k < 1)
    throw Error(ErrorCode::MalformedHeader, at_line(lineno) + "expected `n d K` with n >= 0, d >= 1, K >= 1");

  Matrix x(d, n);
  std::vector<Truth> truth(static_cast<std::size_t>(n));
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  long long rows = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto tok = tokenize(line);
    if (tok.empty()) continue;
    if (rows == n) throw Error(ErrorCode::MalformedHeader, at_line(lineno) + "more rows than the header declares");
    if (tok.size() < 3) throw Error(ErrorCode::MalformedRow, at_line(lineno) + "expected `id category class values...`");
    long long id = 0;
    int category = 0, cls = 0;
    if (!parse_number(tok[0], id)) throw Error(ErrorCode::MalformedRow, at_line(lineno) + "bad id");
    if (id < 0 || id >= n || seen[static_cast<std::size_t>(id)])
      throw Error(ErrorCode::BadSampleId, at_line(lineno) + "id " + std::string(tok[0]) + " out of range or repeated");
    if (!parse_number(tok[1], category) || category < 0 || category > 2)
      throw Error(ErrorCode::BadCategoryCode, at_line(lineno) + "category must be 0, 1 or 2");
    if (!parse_number(tok[2], cls)) throw Error(ErrorCode::ClassOutOfRange, at_line(lineno) + "bad class");
    if (category == 0 ? (cls < 1 || cls > k) : cls != -1)
      throw Error(ErrorCode::ClassOutOfRange,
                  at_line(lineno) + "class " + std::to_string(cls) +
                      (category == 0 ? " outside 1.." + std::to_string(k) : " must be -1 for non-iD rows"));
    if (static_cast<long long>(tok.size()) - 3 != d)
      throw Error(ErrorCode::DimensionMismatch,
                  at_line(lineno) + "expected " + std::to_string(d) + " values, got " + std::to_string(tok.size() - 3));
    for (long long r = 0; r < d; ++r) {
      double v = 0.0;
      if (!parse_number(tok[static_cast<std::size_t>(3 + r)], v))
        throw Error(ErrorCode::MalformedRow, at_line(lineno) + "bad value `" + std::string(tok[static_cast<std::size_t>(3 + r)]) + "`");
      x(r, id) = v;
    }
    seen[static_cast<std::size_t>(id)] = 1;
    truth[static_cast<std::size_t>(id)] = Truth{static_cast<Category>(category), cls};
    ++rows;
  }
  if (rows != n)
    throw Error(ErrorCode::MalformedHeader, "header declares " + std::to_string(n) + " rows, found " + std::to_string(rows));
  return Dataset(static_cast<int>(k), std::move(x), std::move(truth), Origin::Ingested);
}

void save_dataset(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  write_dataset(out, data);
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path);
  return read_dataset(in);
}

std::uint64_t file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return fnv1a64(bytes);
}

}  // namespace alforge
