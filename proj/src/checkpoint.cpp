#include "alforge/learner.hpp"

#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

namespace alforge::learner {

// Layout (little-endian):
//   magic "ALFCKPT\0", u32 version,
//   i32 input_dim hidden1 hidden2 repr_dim proj_dim num_outputs,
//   per layer (fc1 fc2 fc3 projection classifier):
//     u32 rows, u32 cols, rows*cols f64 weights row-major, rows f64 biases.

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

constexpr char kMagic[8] = {'A', 'L', 'F', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw Error(ErrorCode::Io, "truncated checkpoint");
  return v;
}

void put_layer(std::ostream& out, const Layer& l) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(l.w.rows()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(l.w.cols()));
  for (Eigen::Index r = 0; r < l.w.rows(); ++r)
    for (Eigen::Index c = 0; c < l.w.cols(); ++c) put<double>(out, l.w(r, c));
  for (Eigen::Index r = 0; r < l.b.size(); ++r) put<double>(out, l.b(r));
}

void get_layer(std::istream& in, Layer& l) {
  const auto rows = get<std::uint32_t>(in);
  const auto cols = get<std::uint32_t>(in);
  if (rows != l.w.rows() || cols != l.w.cols())
    throw Error(ErrorCode::DimensionMismatch, "checkpoint layer shape disagrees with its architecture header");
  for (Eigen::Index r = 0; r < l.w.rows(); ++r)
    for (Eigen::Index c = 0; c < l.w.cols(); ++c) l.w(r, c) = get<double>(in);
  for (Eigen::Index r = 0; r < l.b.size(); ++r) l.b(r) = get<double>(in);
}

}  // namespace

void save_checkpoint(std::ostream& out, const EncoderParams& params) {
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kVersion);
  const Architecture& a = params.arch;
  for (int v : {a.input_dim, a.hidden1, a.hidden2, a.repr_dim, a.proj_dim, a.num_outputs}) put<std::int32_t>(out, v);
  for (const Layer* l : {&params.fc1, &params.fc2, &params.fc3, &params.projection, &params.classifier}) put_layer(out, *l);
  if (!out) throw Error(ErrorCode::Io, "checkpoint write failed");
}

EncoderParams load_checkpoint(std::istream& in) {
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw Error(ErrorCode::Io, "not a checkpoint (bad magic)");
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion) throw Error(ErrorCode::Io, "unsupported checkpoint version " + std::to_string(version));
  Architecture a;
  a.input_dim = get<std::int32_t>(in);
  a.hidden1 = get<std::int32_t>(in);
  a.hidden2 = get<std::int32_t>(in);
  a.repr_dim = get<std::int32_t>(in);
  a.proj_dim = get<std::int32_t>(in);
  a.num_outputs = get<std::int32_t>(in);
  EncoderParams p = EncoderParams::zeros(a);
  for (Layer* l : {&p.fc1, &p.fc2, &p.fc3, &p.projection, &p.classifier}) get_layer(in, *l);
  return p;
}

}  // namespace alforge::learner
