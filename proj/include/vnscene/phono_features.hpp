#pragma once

// Pairwise phonological features between OCR tokens: eight equality flags
// over syllable structure, tone and base form, gated on both tokens being
// Vietnamese syllables.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "vnscene/syllable.hpp"

namespace vnscene::phono {

struct PhonoPairFeatures {
  bool onset_match = false;       // p1
  bool nucleus_match = false;     // p2
  bool coda_match = false;        // p3
  bool rhyme_match = false;       // p4
  bool tone_match = false;        // p5
  bool tone_class_match = false;  // p6
  bool base_match = false;        // p7, tone-only strip
  bool both_vietnamese = false;   // p8

  static constexpr std::size_t kSize = 8;

  std::array<bool, kSize> flags() const;
  // Bit k holds feature p(k+1).
  std::uint8_t packed() const;
  static PhonoPairFeatures unpack(std::uint8_t bits);
  std::array<double, kSize> as_vector() const;

  friend bool operator==(const PhonoPairFeatures&, const PhonoPairFeatures&) = default;
};

PhonoPairFeatures pair_features(const syllable::TokenAnalysis& a, const syllable::TokenAnalysis& b);

PhonoPairFeatures extract_pair(
    std::string_view a, std::string_view b,
    const syllable::SyllableInventory& inv = syllable::SyllableInventory::builtin());

// N x N feature tensor stored bit-packed, one byte per pair.
class PhonoTensor {
 public:
  PhonoTensor() = default;
  explicit PhonoTensor(std::size_t token_count)
      : n_(token_count), bits_(token_count * token_count, 0) {}

  std::size_t token_count() const { return n_; }
  PhonoPairFeatures at(std::size_t i, std::size_t j) const {
    return PhonoPairFeatures::unpack(bits_.at(i * n_ + j));
  }
  void set(std::size_t i, std::size_t j, const PhonoPairFeatures& f) {
    bits_.at(i * n_ + j) = f.packed();
  }
  std::uint8_t packed(std::size_t i, std::size_t j) const { return bits_.at(i * n_ + j); }

  friend bool operator==(const PhonoTensor&, const PhonoTensor&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Caches one analysis per distinct token string, so repeated tokens across
// images or layers are parsed once. Not thread-safe; use one per thread.
class FeatureExtractor {
 public:
  explicit FeatureExtractor(
      const syllable::SyllableInventory& inv = syllable::SyllableInventory::builtin())
      : inv_(&inv) {}

  const syllable::TokenAnalysis& analysis(const std::string& token);
  PhonoPairFeatures extract_pair(const std::string& a, const std::string& b);
  // Throws std::invalid_argument for an empty token list.
  PhonoTensor build_tensor(std::span<const std::string> tokens);

  std::size_t cache_size() const { return cache_.size(); }

 private:
  const syllable::SyllableInventory* inv_;
  std::unordered_map<std::string, syllable::TokenAnalysis> cache_;
};

PhonoTensor build_tensor(
    std::span<const std::string> tokens,
    const syllable::SyllableInventory& inv = syllable::SyllableInventory::builtin());

}  // namespace vnscene::phono
