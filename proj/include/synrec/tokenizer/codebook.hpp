#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "synrec/tokenizer/vocab.hpp"

namespace synrec {

// D stacked codebooks of K codewords each, level-major storage.
struct CodebookStack {
  Modality modality = Modality::text;
  std::size_t depth = 0;          // D
  std::size_t codebook_size = 0;  // K
  std::size_t dim = 0;            // latent width
  std::vector<double> codes;      // [depth][codebook_size][dim]

  double* codeword(std::size_t level, std::size_t k) {
    return codes.data() + (level * codebook_size + k) * dim;
  }
  const double* codeword(std::size_t level, std::size_t k) const {
    return codes.data() + (level * codebook_size + k) * dim;
  }
};

struct QuantizeResult {
  std::vector<std::int32_t> codes;     // one per level
  std::vector<double> residual;        // r_D, what the stack failed to explain
  std::vector<double> residual_norms;  // ||r_0|| .. ||r_D||
};

// Greedy per-level nearest codeword in squared euclidean distance; exact
// distance ties resolve to the lowest index. r_0 = z, r_d = r_{d-1} - e_c.
QuantizeResult quantize(const double* z, const CodebookStack& stack);

// Codebook file, magic "SGC1": modality byte, u64 depth/size/dim
// little-endian, then f32 codewords level-major.
void write_codebook(const std::string& path, const CodebookStack& stack);
CodebookStack read_codebook(const std::string& path);

}  // namespace synrec
