#pragma once

// Character-level Vietnamese orthography.
//
// Text is held in a decomposed form: every precomposed Latin vowel is split
// into its base letter, at most one vowel-quality mark (circumflex U+0302,
// breve U+0306, horn U+031B) and at most one tone mark. Within a combining
// sequence the quality mark always precedes the tone mark, so "ệ" is
// e U+0302 U+0323 even though strict Unicode NFD would order it
// e U+0323 U+0302. Both orders are accepted on input; the two forms are
// canonically equivalent.

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vnscene::orthography {

enum class Tone : unsigned char { ngang, huyen, sac, hoi, nga, nang };
enum class ToneClass : unsigned char { bang, trac };

inline constexpr std::array<Tone, 6> kAllTones = {Tone::ngang, Tone::huyen, Tone::sac,
                                                  Tone::hoi,   Tone::nga,   Tone::nang};

inline constexpr char32_t kCircumflex = 0x0302;
inline constexpr char32_t kBreve = 0x0306;
inline constexpr char32_t kHorn = 0x031B;
inline constexpr char32_t kDStroke = 0x0111;        // đ
inline constexpr char32_t kDStrokeUpper = 0x0110;   // Đ

class MultipleToneMarks : public std::runtime_error {
 public:
  explicit MultipleToneMarks(const std::string& text)
      : std::runtime_error("multiple tone marks in '" + text + "'") {}
};

class UnknownTone : public std::invalid_argument {
 public:
  explicit UnknownTone(std::string_view name)
      : std::invalid_argument("unknown tone name '" + std::string(name) + "'") {}
};

// Canonically decomposed text. Only normalize() and the functions in this
// header produce values, so the ordering invariant always holds.
class NormalizedText {
 public:
  NormalizedText() = default;

  const std::u32string& codepoints() const { return cps_; }
  bool empty() const { return cps_.empty(); }

  // UTF-8 of the decomposed form.
  std::string utf8() const;
  // UTF-8 with every base+marks sequence recomposed where a precomposed
  // character exists.
  std::string composed() const;

  friend bool operator==(const NormalizedText&, const NormalizedText&) = default;

 private:
  friend NormalizedText normalize(std::u32string_view);
  explicit NormalizedText(std::u32string cps) : cps_(std::move(cps)) {}
  std::u32string cps_;
};

NormalizedText normalize(std::string_view utf8_text);
NormalizedText normalize(std::u32string_view cps);

// Lowercases letters; combining marks are untouched.
NormalizedText fold_case(const NormalizedText& text);

struct ToneSplit {
  Tone tone = Tone::ngang;
  NormalizedText toneless;
};

// Throws MultipleToneMarks when more than one tone mark is present.
ToneSplit extract_tone(const NormalizedText& text);

// Removes tone marks and vowel-quality marks and folds đ to d. This is the
// base form used for diacritic collision grouping.
std::string strip_diacritics(const NormalizedText& text);

// Tone-only strip: vowel-quality marks and đ are kept. Throws
// MultipleToneMarks like extract_tone.
std::string strip_tone(const NormalizedText& text);

// Inserts the combining mark for `tone` after the vowel whose base letter is
// the `vowel_index`-th code point (counting composed characters) of
// `toneless`. Ngang leaves the text unchanged. Throws std::out_of_range when
// the index does not name a character.
NormalizedText apply_tone(const NormalizedText& toneless, Tone tone, std::size_t vowel_index);

ToneClass tone_class(Tone tone);

// Combining code point for a tone; ngang has none.
std::optional<char32_t> tone_mark(Tone tone);
std::optional<Tone> tone_from_mark(char32_t cp);

bool is_tone_mark(char32_t cp);
bool is_quality_mark(char32_t cp);
bool is_combining_mark(char32_t cp);

// "ngang", "huyen", ... for machine-readable output.
std::string_view tone_name(Tone tone);
// "ngang", "huyền", ... for people.
std::string_view tone_display_name(Tone tone);
Tone parse_tone(std::string_view name);
std::string_view tone_class_name(ToneClass tc);

// Converts between composed code points and (base, quality, tone) triples.
// Composition falls back to nullopt when no single code point exists.
struct DecomposedChar {
  char32_t base = 0;
  char32_t quality = 0;
  char32_t tone = 0;
};
std::optional<DecomposedChar> decompose_char(char32_t cp);
std::optional<char32_t> compose_char(const DecomposedChar& parts);

}  // namespace vnscene::orthography
