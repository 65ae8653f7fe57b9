#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "unicorn/linalg.hpp"

namespace unicorn {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Binary tensor container: magic "UCRN", u32 version (1), u32 tensor count,
// then per tensor: u32 name length + bytes, u32 rank, u64 dims, row-major
// little-endian f64 payload. Save/load round-trips are byte identical.
void save_tensor_file(const std::string& path,
                      const std::vector<std::pair<std::string, const Matrix*>>& tensors);

std::vector<std::pair<std::string, Matrix>> load_tensor_file(const std::string& path);

}  // namespace unicorn
