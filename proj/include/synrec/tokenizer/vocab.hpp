#pragma once

#include <cstdint>
#include <string>

namespace synrec {

enum class Modality : std::uint8_t { text = 0, vision = 1 };

inline const char* modality_name(Modality m) {
  return m == Modality::text ? "text" : "vision";
}

// Token id layout for depth D and per-level size K:
//   0..3                       <pad> <bos> <eos> <mask>
//   4 .. 4+D*K-1               text codes, depth-major then code order
//   4+D*K .. 4+2*D*K-1         vision codes, same order
//   4+2*D*K ..                 runtime suffix block for identifier collisions
// size() excludes the suffix block; total_size() includes it.
class Vocabulary {
 public:
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kBos = 1;
  static constexpr std::int32_t kEos = 2;
  static constexpr std::int32_t kMaskTok = 3;

  Vocabulary(std::size_t depth, std::size_t codebook_size);

  std::size_t depth() const { return depth_; }
  std::size_t codebook_size() const { return codebook_size_; }
  std::size_t size() const { return 4 + 2 * depth_ * codebook_size_; }
  std::size_t suffix_count() const { return suffix_count_; }
  void set_suffix_count(std::size_t n) { suffix_count_ = n; }
  std::size_t total_size() const { return size() + suffix_count_; }

  // depth is 1-based; code in [0, K).
  std::int32_t id_of(Modality m, std::size_t depth, std::size_t code) const;
  std::int32_t suffix_id(std::size_t k) const;

  struct TokenInfo {
    enum class Kind { special, text, vision, suffix } kind;
    std::size_t depth = 0;  // 1-based for code tokens
    std::size_t code = 0;   // code index, or suffix index
  };
  TokenInfo info(std::int32_t id) const;

  bool is_special(std::int32_t id) const { return id >= 0 && id < 4; }
  bool is_modality(std::int32_t id, Modality m) const;

  // "a12" = text depth 1 code 12, "B3" = vision depth 2 code 3, "#0" = suffix.
  std::string token_string(std::int32_t id) const;
  std::int32_t parse_token(const std::string& s) const;

  std::uint64_t fingerprint() const;

 private:
  std::size_t depth_;
  std::size_t codebook_size_;
  std::size_t suffix_count_ = 0;
};

}  // namespace synrec
