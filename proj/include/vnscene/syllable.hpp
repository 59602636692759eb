#pragma once

// Rule-based parsing of Vietnamese syllables into onset, medial, nucleus,
// coda and tone, validated against a data-driven phonotactic inventory.

#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vnscene/orthography.hpp"

namespace vnscene::syllable {

using orthography::Tone;

class NotASyllable : public std::runtime_error {
 public:
  explicit NotASyllable(const std::string& text)
      : std::runtime_error("'" + text + "' has no onset/medial/nucleus/coda parse") {}
};

class InventoryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Components are lowercase, toneless, precomposed UTF-8; empty means absent.
struct Syllable {
  std::string onset;
  std::string medial;
  std::string nucleus;
  std::string coda;
  Tone tone = Tone::ngang;

  std::string rhyme() const { return medial + nucleus + coda; }
  // Toneless spelling: the concatenation of the four components.
  std::string toneless() const { return onset + medial + nucleus + coda; }
  // Spelling with the tone mark placed on the nucleus (precomposed UTF-8).
  std::string spelled() const;

  friend bool operator==(const Syllable&, const Syllable&) = default;
};

// Index, within the nucleus, of the vowel that carries the tone mark.
// Diphthongs iê yê uô ươ and the long vowels oo ôô and uơ mark the second
// vowel; every other nucleus marks its first.
std::size_t tone_vowel_index(std::string_view nucleus);

enum class Component { onset, medial, nucleus, coda, tone };

// One clause of a rule: the component's value is (or is not) in `values`.
struct Clause {
  Component component = Component::onset;
  bool negated = false;
  std::set<std::string> values;
};

// A syllable violates the rule when every clause matches.
struct ConstraintRule {
  std::string name;
  std::string description;
  std::vector<Clause> clauses;
  std::vector<std::string> accept_examples;
  std::vector<std::string> reject_examples;

  bool depends_on_tone() const;
  // With tone_known == false, tone-dependent rules never fire.
  bool violated_by(const Syllable& s, bool tone_known) const;
};

class SyllableInventory {
 public:
  // Expected closed-inventory sizes; checked at load time.
  static constexpr std::size_t kOnsetCount = 26;
  static constexpr std::size_t kMedialCount = 2;
  static constexpr std::size_t kNucleusCount = 23;
  static constexpr std::size_t kCodaCount = 12;
  static constexpr std::size_t kMinRuleCount = 35;

  static SyllableInventory from_json_text(std::string_view json_text);
  static SyllableInventory load(const std::filesystem::path& path);
  // The inventory compiled into the library.
  static const SyllableInventory& builtin();

  const std::vector<std::string>& onsets() const { return onsets_; }
  const std::vector<std::string>& medials() const { return medials_; }
  const std::vector<std::string>& nuclei() const { return nuclei_; }
  const std::vector<std::string>& codas() const { return codas_; }
  const std::vector<ConstraintRule>& rules() const { return rules_; }

 private:
  std::vector<std::string> onsets_;
  std::vector<std::string> medials_;
  std::vector<std::string> nuclei_;
  std::vector<std::string> codas_;
  std::vector<ConstraintRule> rules_;
};

// Every segmentation of `toneless` into inventory components, in parser
// priority order: longest onset first, no medial before a medial, longest
// nucleus first. The coda is whatever remains and must be in the inventory.
std::vector<Syllable> candidate_parses(std::string_view toneless,
                                       const SyllableInventory& inv = SyllableInventory::builtin());

// Returns the first candidate that passes every tone-independent rule, or
// the first candidate when none does. Input is toneless and lowercase, in
// composed or decomposed form. Throws NotASyllable when no candidate exists.
Syllable decompose(std::string_view toneless,
                   const SyllableInventory& inv = SyllableInventory::builtin());

// Names of the rules `s` violates, tone-dependent rules included.
std::vector<std::string> validate(const Syllable& s,
                                  const SyllableInventory& inv = SyllableInventory::builtin());

// Tones for which the toneless syllable passes every rule.
std::vector<Tone> admissible_tones(const Syllable& s,
                                   const SyllableInventory& inv = SyllableInventory::builtin());

bool is_vietnamese(std::string_view token,
                   const SyllableInventory& inv = SyllableInventory::builtin());

// Every toneless spelling from onset x medial x nucleus x coda that passes all
// rules under at least one tone.
std::set<std::string> enumerate_valid_syllables(
    const SyllableInventory& inv = SyllableInventory::builtin());

// Per-token analysis shared by the phonological features and the CLI.
struct TokenAnalysis {
  std::string original;
  bool vietnamese = false;
  // Set whenever the token has at most one tone mark.
  std::optional<Tone> tone;
  // Lowercased, tone-stripped form; vowel-quality marks and đ kept.
  std::string toneless;
  // Lowercased full strip (tone, quality marks, đ→d).
  std::string base;
  // Present only for Vietnamese tokens.
  std::optional<Syllable> syllable;
  // Empty for Vietnamese tokens, otherwise why the token was rejected.
  std::string reason;
};

TokenAnalysis analyze_token(std::string_view token,
                            const SyllableInventory& inv = SyllableInventory::builtin());

std::string_view component_name(Component c);

}  // namespace vnscene::syllable
