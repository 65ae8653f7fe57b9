#include "unicorn/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace unicorn {

namespace {

constexpr char kMagic[4] = {'U', 'C', 'R', 'N'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& out, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 8);
}

void write_f64(std::ostream& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  write_u64(out, bits);
}

uint32_t read_u32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw CheckpointError("truncated checkpoint: " + path);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return v;
}

uint64_t read_u64(std::istream& in, const std::string& path) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8))
    throw CheckpointError("truncated checkpoint: " + path);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

double read_f64(std::istream& in, const std::string& path) {
  uint64_t bits = read_u64(in, path);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

void save_tensor_file(const std::string& path,
                      const std::vector<std::pair<std::string, const Matrix*>>& tensors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open for writing: " + path);
  out.write(kMagic, 4);
  write_u32(out, kVersion);
  write_u32(out, static_cast<uint32_t>(tensors.size()));
  for (const auto& [name, m] : tensors) {
    write_u32(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(out, 2);
    write_u64(out, static_cast<uint64_t>(m->rows()));
    write_u64(out, static_cast<uint64_t>(m->cols()));
    for (int r = 0; r < m->rows(); ++r)
      for (int c = 0; c < m->cols(); ++c) write_f64(out, (*m)(r, c));
  }
  out.flush();
  if (!out) throw CheckpointError("write failed: " + path);
}

std::vector<std::pair<std::string, Matrix>> load_tensor_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw CheckpointError("bad magic, not a checkpoint: " + path);
  uint32_t version = read_u32(in, path);
  if (version != kVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version) + ": " + path);
  uint32_t count = read_u32(in, path);

  std::vector<std::pair<std::string, Matrix>> out;
  out.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    uint32_t name_len = read_u32(in, path);
    if (name_len == 0 || name_len > 4096)
      throw CheckpointError("bad tensor name length: " + path);
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw CheckpointError("truncated checkpoint: " + path);
    uint32_t rank = read_u32(in, path);
    if (rank != 2) throw CheckpointError("unsupported tensor rank: " + path);
    uint64_t rows = read_u64(in, path);
    uint64_t cols = read_u64(in, path);
    if (rows > (1u << 24) || cols > (1u << 24))
      throw CheckpointError("implausible tensor shape: " + path);
    Matrix m(static_cast<int>(rows), static_cast<int>(cols));
    for (int r = 0; r < m.rows(); ++r)
      for (int c = 0; c < m.cols(); ++c) m(r, c) = read_f64(in, path);
    out.emplace_back(std::move(name), std::move(m));
  }
  char extra;
  if (in.read(&extra, 1)) throw CheckpointError("trailing bytes in checkpoint: " + path);
  return out;
}

}  // namespace unicorn
