#include "vnscene/corpus_diagnostics.hpp"

#include <unicode/uchar.h>

#include <algorithm>
#include <unordered_map>

#include "builtin_data.hpp"
#include "vnscene/dataset_io.hpp"
#include "vnscene/tokenizer.hpp"
#include "vnscene/utf8.hpp"

namespace vnscene::diagnostics {

namespace orth = orthography;
using orth::Tone;

std::string canonical_word(std::string_view token) {
  return orth::fold_case(orth::normalize(tokenize::trim_punctuation(token))).composed();
}

std::string base_form(std::string_view token) {
  return orth::strip_diacritics(orth::fold_case(orth::normalize(tokenize::trim_punctuation(token))));
}

std::vector<std::string> caption_words(std::string_view caption) {
  std::vector<std::string> out;
  for (const auto& t : tokenize::syllable_split(caption)) {
    auto w = canonical_word(t);
    if (!w.empty()) out.push_back(std::move(w));
  }
  return out;
}

namespace {

bool has_letter(std::string_view word) {
  for (char32_t cp : utf8::decode(word)) {
    if (u_isalpha(static_cast<UChar32>(cp))) return true;
  }
  return false;
}

}  // namespace

Stopwords Stopwords::from_text(std::string_view text) {
  Stopwords s;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    start = end + 1;
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string_view::npos || line[b] == '#') continue;
    const auto e = line.find_last_not_of(" \t\r");
    auto w = canonical_word(line.substr(b, e - b + 1));
    if (!w.empty()) s.words_.insert(std::move(w));
  }
  return s;
}

Stopwords Stopwords::load(const std::filesystem::path& path) {
  return from_text(dataset_io::read_file(path));
}

const Stopwords& Stopwords::builtin() {
  static const Stopwords s = from_text(data::kStopwords);
  return s;
}

// ---- collisions ------------------------------------------------------------

CollisionResult collision_rate(const std::map<std::string, long long>& vocabulary,
                               const syllable::SyllableInventory& inv) {
  std::map<std::string, long long> words;
  for (const auto& [w, f] : vocabulary) {
    // Tone-placement variants (hóa / hoá) count as one word.
    const auto a = syllable::analyze_token(orth::fold_case(orth::normalize(w)).composed(), inv);
    if (a.vietnamese) words[a.syllable->spelled()] += f;
  }
  if (words.empty()) throw EmptyVocabulary();

  std::map<std::string, CollisionGroup> by_base;
  for (const auto& [w, f] : words) {
    auto base = orth::strip_diacritics(orth::normalize(w));
    auto& g = by_base[base];
    g.base = base;
    g.members.push_back(w);
    g.total_frequency += f;
  }

  CollisionResult r;
  r.vietnamese_words = words.size();
  for (auto& [base, g] : by_base) {
    if (g.members.size() < 2) continue;
    g.danger_score = static_cast<long long>(g.members.size()) * g.total_frequency;
    r.words_in_groups += g.members.size();
    r.groups.push_back(std::move(g));
  }
  std::sort(r.groups.begin(), r.groups.end(), [](const auto& a, const auto& b) {
    if (a.danger_score != b.danger_score) return a.danger_score > b.danger_score;
    return a.base < b.base;
  });
  r.rate = static_cast<double>(r.words_in_groups) / static_cast<double>(r.vietnamese_words);
  return r;
}

std::map<std::string, long long> caption_vocabulary(std::span<const ImageRecord> records) {
  std::map<std::string, long long> vocab;
  for (const auto& rec : records) {
    for (const auto& c : rec.captions) {
      for (auto& w : caption_words(c.caption)) ++vocab[w];
    }
  }
  return vocab;
}

// ---- divergence ------------------------------------------------------------

Stratum stratum_of(double confidence) {
  if (confidence < 0.5) return Stratum::low;
  if (confidence < 0.8) return Stratum::medium;
  return Stratum::high;
}

std::string_view stratum_name(Stratum s) {
  switch (s) {
    case Stratum::low:
      return "low";
    case Stratum::medium:
      return "medium";
    case Stratum::high:
      return "high";
  }
  return "?";
}

DivergenceResult divergence_analysis(std::span<const ImageRecord> records) {
  DivergenceResult r;
  for (const auto& rec : records) {
    struct Ocr {
      std::string word;
      std::string base;
      double confidence;
    };
    std::vector<Ocr> ocr;
    for (const auto& t : rec.ocr_tokens) {
      auto w = canonical_word(t.text);
      if (!has_letter(w)) continue;
      auto base = orth::strip_diacritics(orth::normalize(w));
      ocr.push_back({std::move(w), std::move(base), t.confidence});
    }
    if (ocr.empty()) continue;
    for (const auto& c : rec.captions) {
      for (const auto& w : caption_words(c.caption)) {
        if (!has_letter(w)) continue;
        const auto base = orth::strip_diacritics(orth::normalize(w));
        for (const auto& o : ocr) {
          if (o.base != base) continue;
          const bool agrees = o.word == w;
          auto& s = r.strata[static_cast<std::size_t>(stratum_of(o.confidence))];
          ++s.matches;
          ++r.overall.matches;
          if (!agrees) {
            ++s.divergences;
            ++r.overall.divergences;
          }
          r.pairs.push_back({rec.image_id, w, o.word, o.confidence, agrees});
        }
      }
    }
  }
  return r;
}

// ---- error taxonomy --------------------------------------------------------

std::string_view error_type_name(ErrorType t) {
  static constexpr std::array<std::string_view, 5> names = {"T1", "T2", "T3", "T4", "T5"};
  return names[static_cast<std::size_t>(t)];
}

std::string_view error_type_description(ErrorType t) {
  static constexpr std::array<std::string_view, 5> names = {
      "tone drop", "tone substitution", "vowel variant", "đ/d confusion", "tone insertion"};
  return names[static_cast<std::size_t>(t)];
}

std::string ErrorLabel::label() const {
  std::string out;
  for (auto t : types) {
    if (!out.empty()) out += '+';
    out += error_type_name(t);
  }
  return out;
}

namespace {

struct Cluster {
  char32_t base = 0;
  char32_t quality = 0;
  std::optional<Tone> tone;
  int tone_marks = 0;
};

std::vector<Cluster> clusters_of(const orth::NormalizedText& text) {
  std::vector<Cluster> out;
  for (char32_t cp : text.codepoints()) {
    if (orth::is_combining_mark(cp) && !out.empty()) {
      auto& c = out.back();
      if (orth::is_quality_mark(cp)) {
        c.quality = cp;
      } else if (auto t = orth::tone_from_mark(cp)) {
        c.tone = *t;
        ++c.tone_marks;
      }
      continue;
    }
    out.push_back({cp, 0, std::nullopt, 0});
  }
  return out;
}

int tone_mark_count(const std::vector<Cluster>& cs) {
  int n = 0;
  for (const auto& c : cs) n += c.tone_marks;
  return n;
}

// Index of the cluster holding the single tone mark, if any.
std::optional<std::size_t> tone_position(const std::vector<Cluster>& cs) {
  for (std::size_t i = 0; i < cs.size(); ++i) {
    if (cs[i].tone) return i;
  }
  return std::nullopt;
}

struct Aligned {
  std::vector<Cluster> ref;
  std::vector<Cluster> ocr;
};

std::optional<Aligned> align(std::string_view reference, std::string_view ocr) {
  const auto a = orth::fold_case(orth::normalize(reference));
  const auto b = orth::fold_case(orth::normalize(ocr));
  if (orth::strip_diacritics(a) != orth::strip_diacritics(b)) return std::nullopt;
  Aligned out{clusters_of(a), clusters_of(b)};
  if (out.ref.size() != out.ocr.size()) return std::nullopt;
  return out;
}

bool is_d(char32_t cp) { return cp == U'd' || cp == orth::kDStroke; }

void tone_change(Tone ref, Tone ocr, std::set<ErrorType>& types) {
  if (ref == ocr) return;
  if (ocr == Tone::ngang) {
    types.insert(ErrorType::T1);
  } else if (ref == Tone::ngang) {
    types.insert(ErrorType::T5);
  } else {
    types.insert(ErrorType::T2);
  }
}

std::optional<std::size_t> variant_index(const Cluster& c) {
  std::string s = utf8::encode(c.base);
  if (c.quality) s = orth::normalize(s + utf8::encode(c.quality)).composed();
  for (std::size_t i = 0; i < kVowelVariants.size(); ++i) {
    if (kVowelVariants[i] == s) return i;
  }
  return std::nullopt;
}

}  // namespace

ErrorLabel classify_error(std::string_view reference, std::string_view ocr,
                          const ClassifyOptions& options) {
  const auto al = align(reference, ocr);
  if (!al) throw NotComparable(reference, ocr);
  const auto& ra = al->ref;
  const auto& ob = al->ocr;

  ErrorLabel label;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    if (ra[i].base != ob[i].base && is_d(ra[i].base) && is_d(ob[i].base)) {
      label.types.insert(ErrorType::T4);
    }
    if (ra[i].quality != ob[i].quality) label.types.insert(ErrorType::T3);
  }

  auto stacked = [&](std::size_t pos) {
    return options.stacked_mark_is_variant && (ra[pos].quality != 0 || ob[pos].quality != 0);
  };

  if (tone_mark_count(ra) <= 1 && tone_mark_count(ob) <= 1) {
    // Syllable-level tone; a mark moved between vowels is not an error.
    const auto pa = tone_position(ra);
    const auto pb = tone_position(ob);
    const Tone ta = pa ? *ra[*pa].tone : Tone::ngang;
    const Tone tb = pb ? *ob[*pb].tone : Tone::ngang;
    if (ta != tb) {
      tone_change(ta, tb, label.types);
      if ((pa && stacked(*pa)) || (pb && stacked(*pb))) label.types.insert(ErrorType::T3);
    }
  } else {
    for (std::size_t i = 0; i < ra.size(); ++i) {
      const Tone ta = ra[i].tone.value_or(Tone::ngang);
      const Tone tb = ob[i].tone.value_or(Tone::ngang);
      if (ta == tb) continue;
      tone_change(ta, tb, label.types);
      if (stacked(i)) label.types.insert(ErrorType::T3);
    }
  }
  return label;
}

ConfusionMatrices confusion_matrices(std::span<const ErrorInstance> errors) {
  ConfusionMatrices m;
  for (const auto& e : errors) {
    const auto al = align(e.reference, e.ocr);
    if (!al) continue;
    const auto& ra = al->ref;
    const auto& ob = al->ocr;
    if (tone_mark_count(ra) <= 1 && tone_mark_count(ob) <= 1) {
      const auto pa = tone_position(ra);
      const auto pb = tone_position(ob);
      const Tone ta = pa ? *ra[*pa].tone : Tone::ngang;
      const Tone tb = pb ? *ob[*pb].tone : Tone::ngang;
      ++m.tone[static_cast<std::size_t>(ta)][static_cast<std::size_t>(tb)];
    } else {
      for (std::size_t i = 0; i < ra.size(); ++i) {
        if (!ra[i].tone && !ob[i].tone) continue;
        ++m.tone[static_cast<std::size_t>(ra[i].tone.value_or(Tone::ngang))]
                [static_cast<std::size_t>(ob[i].tone.value_or(Tone::ngang))];
      }
    }
    for (std::size_t i = 0; i < ra.size(); ++i) {
      const auto va = variant_index(ra[i]);
      const auto vb = variant_index(ob[i]);
      if (va && vb) ++m.vowel[*va][*vb];
      if (is_d(ra[i].base) && is_d(ob[i].base)) {
        ++m.d_stroke[ra[i].base == orth::kDStroke][ob[i].base == orth::kDStroke];
      }
    }
  }
  return m;
}

// ---- coverage and usage ----------------------------------------------------

double CoverageResult::coverage() const {
  return valid_tokens == 0 ? 0.0
                           : static_cast<double>(referenced()) / static_cast<double>(valid_tokens);
}

double CoverageResult::coverage_ocr_in_caption() const {
  return valid_tokens == 0 ? 0.0
                           : static_cast<double>(exact + base_form + substring_ocr_in_caption) /
                                 static_cast<double>(valid_tokens);
}

double CoverageResult::coverage_caption_in_ocr() const {
  return valid_tokens == 0 ? 0.0
                           : static_cast<double>(exact + base_form + substring_caption_in_ocr) /
                                 static_cast<double>(valid_tokens);
}

std::vector<std::string> valid_ocr_tokens(const ImageRecord& record, const Stopwords& stopwords) {
  std::vector<std::string> out;
  for (const auto& t : record.ocr_tokens) {
    auto w = canonical_word(t.text);
    if (utf8::length(w) < 2 || stopwords.contains(w)) continue;
    out.push_back(std::move(w));
  }
  return out;
}

CoverageResult coverage(const ImageRecord& record, std::size_t caption_index,
                        const Stopwords& stopwords) {
  const auto& caption = record.captions.at(caption_index);
  const auto valid = valid_ocr_tokens(record, stopwords);
  if (valid.empty()) throw NoValidOcrTokens(record.image_id);

  const auto words = caption_words(caption.caption);
  std::vector<std::string> word_bases;
  for (const auto& w : words) word_bases.push_back(orth::strip_diacritics(orth::normalize(w)));

  CoverageResult r;
  r.valid_tokens = valid.size();
  for (const auto& o : valid) {
    OcrReference ref{o};
    const auto ob = orth::strip_diacritics(orth::normalize(o));
    if (std::find(words.begin(), words.end(), o) != words.end()) {
      ref.kind = MatchKind::exact;
      ++r.exact;
    } else if (std::find(word_bases.begin(), word_bases.end(), ob) != word_bases.end()) {
      ref.kind = MatchKind::base_form;
      ++r.base_form;
    } else {
      for (const auto& w : words) {
        if (w.size() > o.size() && w.find(o) != std::string::npos) ref.ocr_in_caption = true;
        if (utf8::length(w) >= 2 && o.size() > w.size() && o.find(w) != std::string::npos) {
          ref.caption_in_ocr = true;
        }
      }
      if (ref.ocr_in_caption || ref.caption_in_ocr) {
        ref.kind = MatchKind::substring;
        ++r.substring;
      }
      r.substring_ocr_in_caption += ref.ocr_in_caption;
      r.substring_caption_in_ocr += ref.caption_in_ocr;
    }
    r.tokens.push_back(std::move(ref));
  }
  return r;
}

double coverage_rate(const ImageRecord& record, std::size_t caption_index,
                     const Stopwords& stopwords) {
  return coverage(record, caption_index, stopwords).coverage();
}

std::string_view usage_category_name(UsageCategory c) {
  switch (c) {
    case UsageCategory::verbatim_heavy:
      return "verbatim-heavy";
    case UsageCategory::paraphrase_heavy:
      return "paraphrase-heavy";
    case UsageCategory::partial_reference:
      return "partial-reference";
    case UsageCategory::contextual_inference:
      return "contextual-inference";
  }
  return "?";
}

UsageCategory usage_category(const CoverageResult& c) {
  const double cov = c.coverage();
  if (cov < 0.15) return UsageCategory::contextual_inference;
  if (cov <= 0.30) return UsageCategory::partial_reference;
  if (2 * c.exact > c.referenced()) return UsageCategory::verbatim_heavy;
  return UsageCategory::paraphrase_heavy;
}

UsageLabel usage_taxonomy(const ImageRecord& record, std::size_t caption_index,
                          const Stopwords& stopwords) {
  const auto c = coverage(record, caption_index, stopwords);
  return {usage_category(c), c.coverage()};
}

// ---- copy classification ---------------------------------------------------

std::string_view copy_label_name(CopyLabel c) {
  switch (c) {
    case CopyLabel::exact_copy:
      return "exact-copy";
    case CopyLabel::base_form_copy:
      return "base-form-copy";
    case CopyLabel::generated:
      return "generated";
  }
  return "?";
}

std::vector<std::vector<CaptionTokenCopy>> copy_classification(const ImageRecord& record) {
  std::unordered_set<std::string> exact;
  std::unordered_set<std::string> bases;
  for (const auto& t : record.ocr_tokens) {
    auto w = canonical_word(t.text);
    if (w.empty()) continue;
    bases.insert(orth::strip_diacritics(orth::normalize(w)));
    exact.insert(std::move(w));
  }
  std::vector<std::vector<CaptionTokenCopy>> out;
  for (const auto& c : record.captions) {
    auto& labels = out.emplace_back();
    for (auto& w : caption_words(c.caption)) {
      CopyLabel l = CopyLabel::generated;
      if (exact.count(w)) {
        l = CopyLabel::exact_copy;
      } else if (bases.count(orth::strip_diacritics(orth::normalize(w)))) {
        l = CopyLabel::base_form_copy;
      }
      labels.push_back({std::move(w), l});
    }
  }
  return out;
}

}  // namespace vnscene::diagnostics
