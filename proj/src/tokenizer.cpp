#include "vnscene/tokenizer.hpp"

#include <unicode/uchar.h>

#include "vnscene/orthography.hpp"
#include "vnscene/utf8.hpp"

namespace vnscene::tokenize {

namespace {

bool is_space(char32_t cp) { return u_isUWhiteSpace(static_cast<UChar32>(cp)) != 0; }

Tokens split_on_space(const std::u32string& cps) {
  Tokens out;
  std::u32string cur;
  for (char32_t cp : cps) {
    if (is_space(cp)) {
      if (!cur.empty()) out.push_back(utf8::encode(cur));
      cur.clear();
    } else {
      cur.push_back(cp);
    }
  }
  if (!cur.empty()) out.push_back(utf8::encode(cur));
  return out;
}

std::u32string composed(std::string_view text) {
  return utf8::decode(orthography::normalize(text).composed());
}

}  // namespace

bool is_punctuation(char32_t cp) {
  return (U_GET_GC_MASK(static_cast<UChar32>(cp)) & U_GC_P_MASK) != 0;
}

std::string trim_punctuation(std::string_view token) {
  const auto cps = utf8::decode(token);
  std::size_t b = 0;
  std::size_t e = cps.size();
  while (b < e && is_punctuation(cps[b])) ++b;
  while (e > b && is_punctuation(cps[e - 1])) --e;
  return utf8::encode(std::u32string_view(cps).substr(b, e - b));
}

Tokens space_split(std::string_view text) { return split_on_space(utf8::decode(text)); }

Tokens character_split(std::string_view text) {
  Tokens out;
  for (char32_t cp : composed(text)) {
    if (!is_space(cp)) out.push_back(utf8::encode(cp));
  }
  return out;
}

Tokens syllable_split(std::string_view text) {
  Tokens out;
  for (const auto& tok : split_on_space(composed(text))) {
    auto t = trim_punctuation(tok);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

Tokenizer make_tokenizer(std::string_view name) {
  if (name == "space") return {"space", space_split};
  if (name == "character") return {"character", character_split};
  if (name == "syllable") return {"syllable", syllable_split};
  throw UnknownTokenizer(name);
}

std::vector<std::string> tokenizer_names() { return {"space", "character", "syllable"}; }

}  // namespace vnscene::tokenize
