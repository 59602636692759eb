#pragma once

// Dataset-level analyses over captions and OCR tokens: diacritic collision
// groups, caption/OCR diacritic divergence by confidence, the five-way OCR
// error taxonomy, OCR coverage and text-usage categories, and copy labels
// for caption tokens.
//
// Word comparison happens on lowercased, composed text with leading and
// trailing punctuation removed.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "vnscene/orthography.hpp"
#include "vnscene/records.hpp"
#include "vnscene/syllable.hpp"

namespace vnscene::diagnostics {

class EmptyVocabulary : public std::invalid_argument {
 public:
  EmptyVocabulary() : std::invalid_argument("vocabulary has no Vietnamese words") {}
};

class NotComparable : public std::invalid_argument {
 public:
  NotComparable(std::string_view a, std::string_view b)
      : std::invalid_argument("'" + std::string(a) + "' and '" + std::string(b) +
                              "' do not share a base form") {}
};

class NoValidOcrTokens : public std::invalid_argument {
 public:
  explicit NoValidOcrTokens(const std::string& image_id)
      : std::invalid_argument("image '" + image_id + "' has no valid OCR tokens") {}
};

// Lowercase, compose and trim punctuation.
std::string canonical_word(std::string_view token);
// canonical_word with every diacritic removed and đ folded to d.
std::string base_form(std::string_view token);
// Caption words in order, canonicalized; empty tokens dropped.
std::vector<std::string> caption_words(std::string_view caption);

class Stopwords {
 public:
  // One word per line; blank lines and lines starting with '#' are skipped.
  static Stopwords from_text(std::string_view text);
  static Stopwords load(const std::filesystem::path& path);
  static const Stopwords& builtin();

  bool contains(std::string_view canonical) const { return words_.count(std::string(canonical)) != 0; }
  std::size_t size() const { return words_.size(); }

 private:
  std::unordered_set<std::string> words_;
};

// ---- collisions ------------------------------------------------------------

struct CollisionGroup {
  std::string base;
  std::vector<std::string> members;  // sorted
  long long total_frequency = 0;
  long long danger_score = 0;  // members.size() * total_frequency
};

struct CollisionResult {
  double rate = 0.0;
  std::size_t vietnamese_words = 0;
  std::size_t words_in_groups = 0;
  // Danger score descending, then base ascending.
  std::vector<CollisionGroup> groups;
};

// Keys are folded and composed before grouping; spellings that become equal
// have their frequencies summed. Non-Vietnamese words are dropped. Throws
// EmptyVocabulary when nothing remains.
CollisionResult collision_rate(const std::map<std::string, long long>& vocabulary,
                               const syllable::SyllableInventory& inv =
                                   syllable::SyllableInventory::builtin());

// Caption word frequencies over a dataset.
std::map<std::string, long long> caption_vocabulary(std::span<const ImageRecord> records);

// ---- divergence ------------------------------------------------------------

enum class Stratum { low, medium, high };
inline constexpr std::array<Stratum, 3> kAllStrata = {Stratum::low, Stratum::medium, Stratum::high};

// low < 0.5 <= medium < 0.8 <= high
Stratum stratum_of(double confidence);
std::string_view stratum_name(Stratum s);

struct DivergenceRecord {
  std::string image_id;
  std::string caption_token;
  std::string ocr_token;
  double ocr_confidence = 0.0;
  bool agrees = false;
};

struct StratumStats {
  long long matches = 0;
  long long divergences = 0;
  double rate() const {
    return matches == 0 ? 0.0 : static_cast<double>(divergences) / static_cast<double>(matches);
  }
};

struct DivergenceResult {
  std::array<StratumStats, 3> strata{};
  StratumStats overall;
  std::vector<DivergenceRecord> pairs;

  const StratumStats& at(Stratum s) const { return strata[static_cast<std::size_t>(s)]; }
};

// Pairs every caption word with every OCR token of the same image that has
// the same full-strip base form (words containing at least one letter).
DivergenceResult divergence_analysis(std::span<const ImageRecord> records);

// ---- error taxonomy --------------------------------------------------------

enum class ErrorType : unsigned char { T1, T2, T3, T4, T5 };
inline constexpr std::array<ErrorType, 5> kAllErrorTypes = {ErrorType::T1, ErrorType::T2,
                                                            ErrorType::T3, ErrorType::T4,
                                                            ErrorType::T5};
std::string_view error_type_name(ErrorType t);         // "T1"
std::string_view error_type_description(ErrorType t);  // "tone drop"

struct ErrorLabel {
  std::set<ErrorType> types;

  bool compound() const { return types.size() > 1; }
  bool empty() const { return types.empty(); }
  // "T1", "T1+T3", or "" for identical tokens.
  std::string label() const;

  friend bool operator==(const ErrorLabel&, const ErrorLabel&) = default;
};

struct ClassifyOptions {
  // A tone change on a vowel carrying a quality mark alters a stacked glyph
  // (ễ vs ê) and is counted as a vowel-variant shift as well.
  bool stacked_mark_is_variant = true;
};

// Throws NotComparable when the two tokens differ after a full strip.
ErrorLabel classify_error(std::string_view reference, std::string_view ocr,
                          const ClassifyOptions& options = {});

struct ErrorInstance {
  std::string reference;
  std::string ocr;
  ErrorLabel label;
};

// Vowel letters grouped by family: a ă â | e ê | o ô ơ | u ư.
inline constexpr std::array<std::string_view, 10> kVowelVariants = {"a", "ă", "â", "e", "ê",
                                                                    "o", "ô", "ơ", "u", "ư"};

struct ConfusionMatrices {
  // [reference][ocr], indexed by Tone.
  std::array<std::array<long long, 6>, 6> tone{};
  // [reference][ocr], indexed by kVowelVariants; only same-family cells fill.
  std::array<std::array<long long, 10>, 10> vowel{};
  // [reference][ocr] with 0 = d, 1 = đ.
  std::array<std::array<long long, 2>, 2> d_stroke{};
};

// Directed counts over aligned positions of each instance. Tone cells use the
// syllable tone; instances that are not comparable are skipped.
ConfusionMatrices confusion_matrices(std::span<const ErrorInstance> errors);

// ---- coverage and usage ----------------------------------------------------

enum class MatchKind { none, exact, base_form, substring };

struct OcrReference {
  std::string token;
  MatchKind kind = MatchKind::none;
  bool ocr_in_caption = false;  // token is inside a longer caption word
  bool caption_in_ocr = false;  // a caption word is inside the token
};

struct CoverageResult {
  std::size_t valid_tokens = 0;
  std::size_t exact = 0;
  std::size_t base_form = 0;
  std::size_t substring = 0;
  // Each substring direction on its own (a token may count in both).
  std::size_t substring_ocr_in_caption = 0;
  std::size_t substring_caption_in_ocr = 0;
  std::vector<OcrReference> tokens;

  std::size_t referenced() const { return exact + base_form + substring; }
  double coverage() const;
  // Coverage when substring matches are limited to one direction.
  double coverage_ocr_in_caption() const;
  double coverage_caption_in_ocr() const;
};

// Valid OCR tokens: at least 2 characters after canonicalization and not a
// stopword. Every instance counts, so repeated tokens weigh more.
std::vector<std::string> valid_ocr_tokens(const ImageRecord& record,
                                          const Stopwords& stopwords = Stopwords::builtin());

// Throws NoValidOcrTokens; std::out_of_range for a bad caption index.
CoverageResult coverage(const ImageRecord& record, std::size_t caption_index,
                        const Stopwords& stopwords = Stopwords::builtin());
double coverage_rate(const ImageRecord& record, std::size_t caption_index,
                     const Stopwords& stopwords = Stopwords::builtin());

enum class UsageCategory { verbatim_heavy, paraphrase_heavy, partial_reference, contextual_inference };
inline constexpr std::array<UsageCategory, 4> kAllUsageCategories = {
    UsageCategory::verbatim_heavy, UsageCategory::paraphrase_heavy,
    UsageCategory::partial_reference, UsageCategory::contextual_inference};
std::string_view usage_category_name(UsageCategory c);

struct UsageLabel {
  UsageCategory category = UsageCategory::contextual_inference;
  double coverage = 0.0;
};

// coverage < 0.15 contextual; 0.15..0.30 partial; above that verbatim when
// exact matches are more than half of all matches, otherwise paraphrase.
UsageCategory usage_category(const CoverageResult& c);
UsageLabel usage_taxonomy(const ImageRecord& record, std::size_t caption_index,
                          const Stopwords& stopwords = Stopwords::builtin());

// ---- copy classification ---------------------------------------------------

enum class CopyLabel { exact_copy, base_form_copy, generated };
std::string_view copy_label_name(CopyLabel c);

struct CaptionTokenCopy {
  std::string token;
  CopyLabel label = CopyLabel::generated;
};

// One entry per word of each caption, captions in order.
std::vector<std::vector<CaptionTokenCopy>> copy_classification(const ImageRecord& record);

}  // namespace vnscene::diagnostics
