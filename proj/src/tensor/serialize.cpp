#include "synrec/tensor/serialize.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace synrec {

namespace {

constexpr char kMagic[4] = {'S', 'G', 'T', '1'};

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& is, const std::string& path) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is)
    throw std::runtime_error(path + ": truncated at offset " +
                             std::to_string(static_cast<long long>(is.tellg())));
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void write_tensor_blob(const std::string& path,
                       const std::vector<std::pair<std::string, Tensor>>& tensors) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error(path + ": cannot open for writing");
  os.write(kMagic, 4);
  put_u64(os, tensors.size());
  for (const auto& [name, t] : tensors) {
    put_u64(os, name.size());
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u64(os, t.rank());
    for (std::size_t d : t.shape()) put_u64(os, d);
    for (std::size_t i = 0; i < t.numel(); ++i) {
      float f = static_cast<float>(t[i]);
      os.write(reinterpret_cast<const char*>(&f), 4);
    }
  }
  if (!os) throw std::runtime_error(path + ": write failed");
}

std::vector<std::pair<std::string, Tensor>> read_tensor_blob(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error(path + ": cannot open");
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error(path + ": bad magic at offset 0, expected SGT1");
  const std::uint64_t count = get_u64(is, path);
  std::vector<std::pair<std::string, Tensor>> out;
  out.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t name_len = get_u64(is, path);
    std::string name(name_len, '\0');
    is.read(name.data(), static_cast<std::streamsize>(name_len));
    if (!is)
      throw std::runtime_error(path + ": truncated name at offset " +
                               std::to_string(static_cast<long long>(is.tellg())));
    const std::uint64_t rank = get_u64(is, path);
    std::vector<std::size_t> shape(rank);
    std::size_t numel = 1;
    for (std::uint64_t d = 0; d < rank; ++d) {
      shape[d] = static_cast<std::size_t>(get_u64(is, path));
      numel *= shape[d];
    }
    std::vector<double> values(numel);
    for (std::size_t k = 0; k < numel; ++k) {
      float f;
      is.read(reinterpret_cast<char*>(&f), 4);
      if (!is)
        throw std::runtime_error(path + ": truncated values at offset " +
                                 std::to_string(static_cast<long long>(is.tellg())));
      values[k] = static_cast<double>(f);
    }
    out.emplace_back(std::move(name), Tensor::from_data(std::move(shape), std::move(values)));
  }
  return out;
}

}  // namespace synrec
