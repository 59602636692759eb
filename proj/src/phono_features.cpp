#include "vnscene/phono_features.hpp"

#include <stdexcept>

namespace vnscene::phono {

std::array<bool, PhonoPairFeatures::kSize> PhonoPairFeatures::flags() const {
  return {onset_match, nucleus_match,    coda_match, rhyme_match,
          tone_match,  tone_class_match, base_match, both_vietnamese};
}

std::uint8_t PhonoPairFeatures::packed() const {
  std::uint8_t bits = 0;
  const auto f = flags();
  for (std::size_t k = 0; k < kSize; ++k) {
    if (f[k]) bits |= static_cast<std::uint8_t>(1u << k);
  }
  return bits;
}

PhonoPairFeatures PhonoPairFeatures::unpack(std::uint8_t bits) {
  auto bit = [bits](int k) { return ((bits >> k) & 1u) != 0; };
  return {bit(0), bit(1), bit(2), bit(3), bit(4), bit(5), bit(6), bit(7)};
}

std::array<double, PhonoPairFeatures::kSize> PhonoPairFeatures::as_vector() const {
  std::array<double, kSize> out{};
  const auto f = flags();
  for (std::size_t k = 0; k < kSize; ++k) out[k] = f[k] ? 1.0 : 0.0;
  return out;
}

PhonoPairFeatures pair_features(const syllable::TokenAnalysis& a,
                                const syllable::TokenAnalysis& b) {
  if (!a.vietnamese || !b.vietnamese) return {};
  const auto& sa = *a.syllable;
  const auto& sb = *b.syllable;
  PhonoPairFeatures f;
  f.onset_match = sa.onset == sb.onset;
  f.nucleus_match = sa.nucleus == sb.nucleus;
  f.coda_match = sa.coda == sb.coda;
  f.rhyme_match = sa.rhyme() == sb.rhyme();
  f.tone_match = sa.tone == sb.tone;
  f.tone_class_match = orthography::tone_class(sa.tone) == orthography::tone_class(sb.tone);
  f.base_match = a.toneless == b.toneless;
  f.both_vietnamese = true;
  return f;
}

PhonoPairFeatures extract_pair(std::string_view a, std::string_view b,
                               const syllable::SyllableInventory& inv) {
  return pair_features(syllable::analyze_token(a, inv), syllable::analyze_token(b, inv));
}

const syllable::TokenAnalysis& FeatureExtractor::analysis(const std::string& token) {
  auto it = cache_.find(token);
  if (it == cache_.end()) it = cache_.emplace(token, syllable::analyze_token(token, *inv_)).first;
  return it->second;
}

PhonoPairFeatures FeatureExtractor::extract_pair(const std::string& a, const std::string& b) {
  const auto& aa = analysis(a);
  const auto& bb = analysis(b);
  return pair_features(aa, bb);
}

PhonoTensor FeatureExtractor::build_tensor(std::span<const std::string> tokens) {
  if (tokens.empty()) throw std::invalid_argument("build_tensor: no tokens");
  std::vector<const syllable::TokenAnalysis*> analyses;
  analyses.reserve(tokens.size());
  for (const auto& t : tokens) analyses.push_back(&analysis(t));

  PhonoTensor out(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    for (std::size_t j = i; j < tokens.size(); ++j) {
      const auto f = pair_features(*analyses[i], *analyses[j]);
      out.set(i, j, f);
      out.set(j, i, f);
    }
  }
  return out;
}

PhonoTensor build_tensor(std::span<const std::string> tokens,
                         const syllable::SyllableInventory& inv) {
  FeatureExtractor extractor(inv);
  return extractor.build_tensor(tokens);
}

}  // namespace vnscene::phono
