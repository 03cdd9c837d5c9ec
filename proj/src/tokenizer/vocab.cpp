#include "synrec/tokenizer/vocab.hpp"

#include <stdexcept>

namespace synrec {

Vocabulary::Vocabulary(std::size_t depth, std::size_t codebook_size)
    : depth_(depth), codebook_size_(codebook_size) {
  if (depth == 0 || depth > 26)
    throw std::invalid_argument("vocab: depth must be in [1, 26], got " +
                                std::to_string(depth));
  if (codebook_size == 0)
    throw std::invalid_argument("vocab: codebook size must be positive");
}

std::int32_t Vocabulary::id_of(Modality m, std::size_t depth, std::size_t code) const {
  if (depth < 1 || depth > depth_)
    throw std::out_of_range("vocab: depth " + std::to_string(depth) +
                            " outside [1, " + std::to_string(depth_) + "]");
  if (code >= codebook_size_)
    throw std::out_of_range("vocab: code " + std::to_string(code) +
                            " outside [0, " + std::to_string(codebook_size_) + ")");
  const std::size_t block = m == Modality::text ? 0 : depth_ * codebook_size_;
  return static_cast<std::int32_t>(4 + block + (depth - 1) * codebook_size_ + code);
}

std::int32_t Vocabulary::suffix_id(std::size_t k) const {
  if (k >= suffix_count_)
    throw std::out_of_range("vocab: suffix " + std::to_string(k) +
                            " outside [0, " + std::to_string(suffix_count_) + ")");
  return static_cast<std::int32_t>(size() + k);
}

Vocabulary::TokenInfo Vocabulary::info(std::int32_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= total_size())
    throw std::out_of_range("vocab: token id " + std::to_string(id) +
                            " outside [0, " + std::to_string(total_size()) + ")");
  TokenInfo ti{};
  if (id < 4) {
    ti.kind = TokenInfo::Kind::special;
    ti.code = static_cast<std::size_t>(id);
    return ti;
  }
  std::size_t off = static_cast<std::size_t>(id) - 4;
  const std::size_t per_modality = depth_ * codebook_size_;
  if (off >= 2 * per_modality) {
    ti.kind = TokenInfo::Kind::suffix;
    ti.code = off - 2 * per_modality;
    return ti;
  }
  ti.kind = off < per_modality ? TokenInfo::Kind::text : TokenInfo::Kind::vision;
  off %= per_modality;
  ti.depth = off / codebook_size_ + 1;
  ti.code = off % codebook_size_;
  return ti;
}

bool Vocabulary::is_modality(std::int32_t id, Modality m) const {
  if (id < 4 || static_cast<std::size_t>(id) >= size()) return false;
  const TokenInfo ti = info(id);
  return (m == Modality::text && ti.kind == TokenInfo::Kind::text) ||
         (m == Modality::vision && ti.kind == TokenInfo::Kind::vision);
}

std::string Vocabulary::token_string(std::int32_t id) const {
  const TokenInfo ti = info(id);
  switch (ti.kind) {
    case TokenInfo::Kind::special: {
      static const char* names[] = {"<pad>", "<bos>", "<eos>", "<mask>"};
      return names[ti.code];
    }
    case TokenInfo::Kind::text:
      return std::string(1, static_cast<char>('a' + ti.depth - 1)) +
             std::to_string(ti.code);
    case TokenInfo::Kind::vision:
      return std::string(1, static_cast<char>('A' + ti.depth - 1)) +
             std::to_string(ti.code);
    case TokenInfo::Kind::suffix:
      return "#" + std::to_string(ti.code);
  }
  throw std::logic_error("vocab: unreachable");
}

std::int32_t Vocabulary::parse_token(const std::string& s) const {
  static const char* names[] = {"<pad>", "<bos>", "<eos>", "<mask>"};
  for (std::int32_t i = 0; i < 4; ++i)
    if (s == names[i]) return i;
  if (s.size() < 2) throw std::invalid_argument("vocab: bad token '" + s + "'");
  const char head = s[0];
  std::size_t value;
  try {
    value = static_cast<std::size_t>(std::stoul(s.substr(1)));
  } catch (const std::exception&) {
    throw std::invalid_argument("vocab: bad token '" + s + "'");
  }
  if (head == '#') {
    if (value >= suffix_count_)
      throw std::invalid_argument("vocab: suffix token '" + s +
                                  "' outside declared block of " +
                                  std::to_string(suffix_count_));
    return suffix_id(value);
  }
  if (head >= 'a' && head < static_cast<char>('a' + depth_))
    return id_of(Modality::text, static_cast<std::size_t>(head - 'a') + 1, value);
  if (head >= 'A' && head < static_cast<char>('A' + depth_))
    return id_of(Modality::vision, static_cast<std::size_t>(head - 'A') + 1, value);
  throw std::invalid_argument("vocab: bad token '" + s + "'");
}

std::uint64_t Vocabulary::fingerprint() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 1099511628211ull;
    }
  };
  mix(depth_);
  mix(codebook_size_);
  mix(suffix_count_);
  return h;
}

}  // namespace synrec
