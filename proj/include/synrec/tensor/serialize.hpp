#pragma once

#include <string>
#include <utility>
#include <vector>

#include "synrec/tensor/tensor.hpp"

namespace synrec {

// Named-tensor blob, magic "SGT1". Little-endian layout:
//   "SGT1", u64 tensor count, then per tensor:
//   u64 name length, name bytes, u64 rank, u64 dims[rank], f32 values.
// Values are stored as float32; loading widens back to double, so a
// write/read round trip reproduces double(float(x)).
void write_tensor_blob(const std::string& path,
                       const std::vector<std::pair<std::string, Tensor>>& tensors);
std::vector<std::pair<std::string, Tensor>> read_tensor_blob(const std::string& path);

}  // namespace synrec
