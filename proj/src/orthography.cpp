#include "vnscene/orthography.hpp"

#include <unicode/uchar.h>

#include <map>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "vnscene/utf8.hpp"

namespace vnscene::orthography {

namespace {

struct TableRow {
  char32_t composed;
  char32_t base;
  char32_t quality;
  char32_t tone;
};

constexpr TableRow kLatinTable[] = {
#include "latin_table.inc"
};

struct Tables {
  std::unordered_map<char32_t, DecomposedChar> decompose;
  std::map<std::tuple<char32_t, char32_t, char32_t>, char32_t> compose;

  Tables() {
    for (const auto& row : kLatinTable) {
      decompose.emplace(row.composed, DecomposedChar{row.base, row.quality, row.tone});
      compose.emplace(std::make_tuple(row.base, row.quality, row.tone), row.composed);
    }
  }
};

const Tables& tables() {
  static const Tables t;
  return t;
}

// U+0340/U+0341 are canonical singletons for grave/acute.
char32_t canonical_mark(char32_t cp) {
  if (cp == 0x0340) return 0x0300;
  if (cp == 0x0341) return 0x0301;
  return cp;
}

struct Cluster {
  char32_t base = 0;  // 0: orphan combining sequence
  std::u32string quality;
  std::u32string other;
  std::u32string tones;

  void append_to(std::u32string& out) const {
    if (base != 0) out.push_back(base);
    out += quality;
    out += other;
    out += tones;
  }
};

std::vector<Cluster> split_clusters(std::u32string_view cps) {
  std::vector<Cluster> clusters;
  for (char32_t raw : cps) {
    const char32_t cp = canonical_mark(raw);
    if (is_combining_mark(cp)) {
      if (clusters.empty()) clusters.emplace_back();
      auto& c = clusters.back();
      if (is_quality_mark(cp)) {
        c.quality.push_back(cp);
      } else if (is_tone_mark(cp)) {
        c.tones.push_back(cp);
      } else {
        c.other.push_back(cp);
      }
      continue;
    }
    Cluster c;
    if (auto parts = decompose_char(cp)) {
      c.base = parts->base;
      if (parts->quality != 0) c.quality.push_back(parts->quality);
      if (parts->tone != 0) c.tones.push_back(parts->tone);
    } else {
      c.base = cp;
    }
    clusters.push_back(std::move(c));
  }
  return clusters;
}

}  // namespace

bool is_tone_mark(char32_t cp) {
  return cp == 0x0300 || cp == 0x0301 || cp == 0x0303 || cp == 0x0309 || cp == 0x0323;
}

bool is_quality_mark(char32_t cp) { return cp == kCircumflex || cp == kBreve || cp == kHorn; }

bool is_combining_mark(char32_t cp) { return cp >= 0x0300 && cp <= 0x036F; }

std::optional<DecomposedChar> decompose_char(char32_t cp) {
  const auto& t = tables().decompose;
  if (auto it = t.find(cp); it != t.end()) return it->second;
  return std::nullopt;
}

std::optional<char32_t> compose_char(const DecomposedChar& parts) {
  if (parts.quality == 0 && parts.tone == 0) return parts.base;
  const auto& t = tables().compose;
  if (auto it = t.find({parts.base, parts.quality, parts.tone}); it != t.end()) return it->second;
  return std::nullopt;
}

NormalizedText normalize(std::u32string_view cps) {
  std::u32string out;
  out.reserve(cps.size() + cps.size() / 2);
  for (const auto& c : split_clusters(cps)) c.append_to(out);
  return NormalizedText(std::move(out));
}

NormalizedText normalize(std::string_view utf8_text) { return normalize(utf8::decode(utf8_text)); }

std::string NormalizedText::utf8() const { return utf8::encode(cps_); }

std::string NormalizedText::composed() const {
  std::u32string out;
  for (const auto& c : split_clusters(cps_)) {
    if (c.base != 0 && c.other.empty() && c.quality.size() <= 1 && c.tones.size() <= 1) {
      const DecomposedChar full{c.base, c.quality.empty() ? 0 : c.quality[0],
                                c.tones.empty() ? 0 : c.tones[0]};
      if (auto cp = compose_char(full)) {
        out.push_back(*cp);
        continue;
      }
      if (auto cp = compose_char({c.base, full.quality, 0})) {
        out.push_back(*cp);
        out += c.tones;
        continue;
      }
    }
    c.append_to(out);
  }
  return utf8::encode(out);
}

NormalizedText fold_case(const NormalizedText& text) {
  std::u32string out = text.codepoints();
  for (auto& cp : out) {
    if (!is_combining_mark(cp)) cp = static_cast<char32_t>(u_tolower(static_cast<UChar32>(cp)));
  }
  return normalize(out);
}

ToneSplit extract_tone(const NormalizedText& text) {
  ToneSplit result;
  std::u32string rest;
  rest.reserve(text.codepoints().size());
  int marks = 0;
  for (char32_t cp : text.codepoints()) {
    if (is_tone_mark(cp)) {
      if (++marks > 1) throw MultipleToneMarks(text.composed());
      result.tone = *tone_from_mark(cp);
      continue;
    }
    rest.push_back(cp);
  }
  result.toneless = normalize(rest);
  return result;
}

std::string strip_tone(const NormalizedText& text) { return extract_tone(text).toneless.composed(); }

std::string strip_diacritics(const NormalizedText& text) {
  std::u32string out;
  out.reserve(text.codepoints().size());
  for (char32_t cp : text.codepoints()) {
    if (is_combining_mark(cp)) continue;
    if (cp == kDStroke) {
      out.push_back(U'd');
    } else if (cp == kDStrokeUpper) {
      out.push_back(U'D');
    } else {
      out.push_back(cp);
    }
  }
  return utf8::encode(out);
}

NormalizedText apply_tone(const NormalizedText& toneless, Tone tone, std::size_t vowel_index) {
  auto clusters = split_clusters(toneless.codepoints());
  if (vowel_index >= clusters.size()) {
    throw std::out_of_range("tone position " + std::to_string(vowel_index) + " outside '" +
                            toneless.composed() + "'");
  }
  if (auto mark = tone_mark(tone)) clusters[vowel_index].tones.push_back(*mark);
  std::u32string out;
  for (const auto& c : clusters) c.append_to(out);
  return normalize(out);
}

ToneClass tone_class(Tone tone) {
  return (tone == Tone::ngang || tone == Tone::huyen) ? ToneClass::bang : ToneClass::trac;
}

std::optional<char32_t> tone_mark(Tone tone) {
  switch (tone) {
    case Tone::ngang: return std::nullopt;
    case Tone::huyen: return 0x0300;
    case Tone::sac: return 0x0301;
    case Tone::hoi: return 0x0309;
    case Tone::nga: return 0x0303;
    case Tone::nang: return 0x0323;
  }
  return std::nullopt;
}

std::optional<Tone> tone_from_mark(char32_t cp) {
  switch (canonical_mark(cp)) {
    case 0x0300: return Tone::huyen;
    case 0x0301: return Tone::sac;
    case 0x0309: return Tone::hoi;
    case 0x0303: return Tone::nga;
    case 0x0323: return Tone::nang;
    default: return std::nullopt;
  }
}

std::string_view tone_name(Tone tone) {
  constexpr std::string_view names[] = {"ngang", "huyen", "sac", "hoi", "nga", "nang"};
  return names[static_cast<int>(tone)];
}

std::string_view tone_display_name(Tone tone) {
  constexpr std::string_view names[] = {"ngang", "huyền", "sắc", "hỏi", "ngã", "nặng"};
  return names[static_cast<int>(tone)];
}

Tone parse_tone(std::string_view name) {
  for (Tone t : kAllTones) {
    if (name == tone_name(t) || name == tone_display_name(t)) return t;
  }
  throw UnknownTone(name);
}

std::string_view tone_class_name(ToneClass tc) { return tc == ToneClass::bang ? "bang" : "trac"; }

}  // namespace vnscene::orthography
