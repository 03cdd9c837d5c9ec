#include "synrec/tokenizer/codebook.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace synrec {

QuantizeResult quantize(const double* z, const CodebookStack& stack) {
  if (stack.depth == 0 || stack.codebook_size == 0 || stack.dim == 0)
    throw std::invalid_argument("quantize: empty codebook stack");
  QuantizeResult out;
  out.codes.reserve(stack.depth);
  out.residual.assign(z, z + stack.dim);
  out.residual_norms.reserve(stack.depth + 1);
  auto norm = [&]() {
    double s = 0.0;
    for (double v : out.residual) s += v * v;
    return std::sqrt(s);
  };
  out.residual_norms.push_back(norm());
  for (std::size_t level = 0; level < stack.depth; ++level) {
    std::size_t best = 0;
    double best_dist = 0.0;
    for (std::size_t k = 0; k < stack.codebook_size; ++k) {
      const double* e = stack.codeword(level, k);
      double dist = 0.0;
      for (std::size_t j = 0; j < stack.dim; ++j) {
        const double d = out.residual[j] - e[j];
        dist += d * d;
      }
      if (k == 0 || dist < best_dist) {  // strict: ties keep the lowest index
        best = k;
        best_dist = dist;
      }
    }
    const double* e = stack.codeword(level, best);
    for (std::size_t j = 0; j < stack.dim; ++j) out.residual[j] -= e[j];
    out.codes.push_back(static_cast<std::int32_t>(best));
    out.residual_norms.push_back(norm());
  }
  return out;
}

namespace {

constexpr char kMagic[4] = {'S', 'G', 'C', '1'};

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& is, const std::string& path) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw std::runtime_error(path + ": truncated codebook header");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void write_codebook(const std::string& path, const CodebookStack& stack) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error(path + ": cannot open for writing");
  os.write(kMagic, 4);
  const unsigned char m = static_cast<unsigned char>(stack.modality);
  os.write(reinterpret_cast<const char*>(&m), 1);
  put_u64(os, stack.depth);
  put_u64(os, stack.codebook_size);
  put_u64(os, stack.dim);
  for (double v : stack.codes) {
    const float f = static_cast<float>(v);
    os.write(reinterpret_cast<const char*>(&f), 4);
  }
  if (!os) throw std::runtime_error(path + ": write failed");
}

CodebookStack read_codebook(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error(path + ": cannot open");
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error(path + ": bad magic at offset 0, expected SGC1");
  unsigned char m;
  is.read(reinterpret_cast<char*>(&m), 1);
  if (!is || m > 1)
    throw std::runtime_error(path + ": bad modality byte");
  CodebookStack stack;
  stack.modality = static_cast<Modality>(m);
  stack.depth = static_cast<std::size_t>(get_u64(is, path));
  stack.codebook_size = static_cast<std::size_t>(get_u64(is, path));
  stack.dim = static_cast<std::size_t>(get_u64(is, path));
  const std::size_t n = stack.depth * stack.codebook_size * stack.dim;
  stack.codes.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    float f;
    is.read(reinterpret_cast<char*>(&f), 4);
    if (!is) throw std::runtime_error(path + ": truncated codewords");
    stack.codes[i] = static_cast<double>(f);
  }
  return stack;
}

}  // namespace synrec
