#pragma once

#include <cstdint>
#include <vector>

#include "synrec/data/dataset.hpp"

namespace synrec {

// Corpus generator whose next-item signal exists only jointly: each item
// hides B text bits and B vision bits, and the category that the rule
// forces next is the XOR parity of (text ^ vision) over the last `window`
// items. Either bit stream alone is exactly independent of the label.
struct SynthConfig {
  std::size_t items = 512;
  std::size_t dim = 32;        // embedding width per modality
  std::size_t users = 2000;
  std::size_t min_len = 6;
  std::size_t max_len = 12;
  std::size_t bits = 1;        // hidden bits per modality
  std::size_t window = 2;      // parity window, >= 2
  double sigma = 0.05;         // embedding noise level
  // Geometric within-category popularity decay; 0 keeps draws uniform.
  // Weights fall per pattern block, never within one, so both hidden-bit
  // groups of a category stay exactly equally likely and the label stays
  // exactly independent of each stream.
  double popularity = 0.0;
  // Probability that a transition copies the previous item's text bits as
  // the next category instead of the window parity. Plants a weak
  // text-only channel alongside the joint rule; 0 keeps the corpus purely
  // synergistic.
  double leakage = 0.0;
  std::uint64_t seed = 1;
};

struct SynthResult {
  Dataset data;
  std::vector<std::uint32_t> bits_text;    // per item
  std::vector<std::uint32_t> bits_vision;  // per item
  std::vector<std::uint32_t> category;     // bits_text ^ bits_vision
};

SynthResult generate_synthetic(const SynthConfig& cfg);

}  // namespace synrec
