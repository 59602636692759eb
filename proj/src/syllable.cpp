#include "vnscene/syllable.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "builtin_data.hpp"
#include "vnscene/utf8.hpp"

namespace vnscene::syllable {

namespace orth = vnscene::orthography;
using nlohmann::json;

namespace {

const std::string kEmpty;

const std::string& field(const Syllable& s, Component c) {
  switch (c) {
    case Component::onset: return s.onset;
    case Component::medial: return s.medial;
    case Component::nucleus: return s.nucleus;
    case Component::coda: return s.coda;
    case Component::tone: break;
  }
  return kEmpty;
}

std::vector<std::string> read_list(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc.at(key).is_array()) {
    throw InventoryError(std::string("inventory: missing array '") + key + "'");
  }
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& item : doc.at(key)) {
    auto value = orth::normalize(item.get<std::string>()).composed();
    if (value.empty() || !seen.insert(value).second) {
      throw InventoryError(std::string("inventory: empty or duplicate entry in '") + key + "'");
    }
    out.push_back(std::move(value));
  }
  return out;
}

void check_count(const std::vector<std::string>& items, std::size_t expected, const char* what) {
  if (items.size() != expected) {
    throw InventoryError(std::string("inventory: expected ") + std::to_string(expected) + " " +
                         what + ", found " + std::to_string(items.size()));
  }
}

Clause parse_clause(const std::string& key, const json& values, const SyllableInventory& inv,
                    const std::string& rule) {
  Clause clause;
  std::string base = key;
  constexpr std::string_view kNot = "_not";
  if (base.size() > kNot.size() && base.ends_with(kNot)) {
    clause.negated = true;
    base.resize(base.size() - kNot.size());
  }
  const std::vector<std::string>* allowed = nullptr;
  if (base == "onset") {
    clause.component = Component::onset;
    allowed = &inv.onsets();
  } else if (base == "medial") {
    clause.component = Component::medial;
    allowed = &inv.medials();
  } else if (base == "nucleus") {
    clause.component = Component::nucleus;
    allowed = &inv.nuclei();
  } else if (base == "coda") {
    clause.component = Component::coda;
    allowed = &inv.codas();
  } else if (base == "tone") {
    clause.component = Component::tone;
  } else {
    throw InventoryError("rule '" + rule + "': unknown clause '" + key + "'");
  }
  for (const auto& v : values) {
    auto value = v.get<std::string>();
    if (clause.component == Component::tone) {
      try {
        value = std::string(orth::tone_name(orth::parse_tone(value)));
      } catch (const orth::UnknownTone& e) {
        throw InventoryError("rule '" + rule + "': " + e.what());
      }
    } else {
      value = orth::normalize(value).composed();
      if (!value.empty() && std::find(allowed->begin(), allowed->end(), value) == allowed->end()) {
        throw InventoryError("rule '" + rule + "': '" + value + "' is not in the " + base +
                             " inventory");
      }
    }
    clause.values.insert(std::move(value));
  }
  return clause;
}

std::string compose_lower(std::string_view text) {
  return orth::fold_case(orth::normalize(text)).composed();
}

bool is_vowel_base(char32_t cp) {
  return cp == U'a' || cp == U'e' || cp == U'i' || cp == U'o' || cp == U'u' || cp == U'y';
}

// Empty when the folded token only uses Vietnamese letters and well-placed
// marks, otherwise the reason it fails the gate.
std::string gate_reason(const orth::NormalizedText& folded) {
  if (folded.empty()) return "empty token";
  char32_t prev = 0;
  for (char32_t cp : folded.codepoints()) {
    const bool letter = (cp >= U'a' && cp <= U'z') || cp == orth::kDStroke;
    if (letter) {
      prev = cp;
      continue;
    }
    if (cp >= U'0' && cp <= U'9') return "contains a digit";
    if (orth::is_quality_mark(cp)) {
      if (!is_vowel_base(prev)) return "vowel mark on a non-vowel";
      prev = cp;
      continue;
    }
    if (orth::is_tone_mark(cp)) {
      if (!is_vowel_base(prev) && !orth::is_quality_mark(prev)) return "tone mark on a non-vowel";
      prev = cp;
      continue;
    }
    return "contains a character outside the Vietnamese alphabet";
  }
  return {};
}

bool passes(const Syllable& s, const SyllableInventory& inv, bool tone_known) {
  return std::none_of(inv.rules().begin(), inv.rules().end(),
                      [&](const ConstraintRule& r) { return r.violated_by(s, tone_known); });
}

}  // namespace

std::string_view component_name(Component c) {
  switch (c) {
    case Component::onset: return "onset";
    case Component::medial: return "medial";
    case Component::nucleus: return "nucleus";
    case Component::coda: return "coda";
    case Component::tone: return "tone";
  }
  return "?";
}

std::size_t tone_vowel_index(std::string_view nucleus) {
  static const std::set<std::string, std::less<>> second = {"iê", "yê", "uô", "ươ",
                                                            "oo", "ôô", "uơ"};
  return second.contains(nucleus) ? 1 : 0;
}

std::string Syllable::spelled() const {
  const auto bare = orth::normalize(toneless());
  if (tone == Tone::ngang) return bare.composed();
  const std::size_t index =
      utf8::length(onset) + utf8::length(medial) + tone_vowel_index(nucleus);
  return orth::apply_tone(bare, tone, index).composed();
}

bool ConstraintRule::depends_on_tone() const {
  return std::any_of(clauses.begin(), clauses.end(),
                     [](const Clause& c) { return c.component == Component::tone; });
}

bool ConstraintRule::violated_by(const Syllable& s, bool tone_known) const {
  if (!tone_known && depends_on_tone()) return false;
  for (const auto& clause : clauses) {
    const std::string value = clause.component == Component::tone
                                  ? std::string(orth::tone_name(s.tone))
                                  : field(s, clause.component);
    const bool member = clause.values.contains(value);
    if (member == clause.negated) return false;
  }
  return true;
}

SyllableInventory SyllableInventory::from_json_text(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InventoryError(std::string("inventory: ") + e.what());
  }
  SyllableInventory inv;
  inv.onsets_ = read_list(doc, "onsets");
  inv.medials_ = read_list(doc, "medials");
  inv.nuclei_ = read_list(doc, "nuclei");
  inv.codas_ = read_list(doc, "codas");
  check_count(inv.onsets_, kOnsetCount, "onsets");
  check_count(inv.medials_, kMedialCount, "medials");
  check_count(inv.nuclei_, kNucleusCount, "nuclei");
  check_count(inv.codas_, kCodaCount, "codas");

  if (!doc.contains("rules") || !doc.at("rules").is_array()) {
    throw InventoryError("inventory: missing array 'rules'");
  }
  std::unordered_set<std::string> names;
  for (const auto& r : doc.at("rules")) {
    ConstraintRule rule;
    rule.name = r.at("name").get<std::string>();
    if (!names.insert(rule.name).second) {
      throw InventoryError("inventory: duplicate rule '" + rule.name + "'");
    }
    rule.description = r.value("description", "");
    const auto& when = r.at("when");
    if (!when.is_object() || when.empty()) {
      throw InventoryError("rule '" + rule.name + "': empty 'when'");
    }
    for (const auto& [key, values] : when.items()) {
      rule.clauses.push_back(parse_clause(key, values, inv, rule.name));
    }
    for (const auto& w : r.value("accept", json::array())) rule.accept_examples.push_back(w);
    for (const auto& w : r.value("reject", json::array())) rule.reject_examples.push_back(w);
    if (rule.accept_examples.empty() || rule.reject_examples.empty()) {
      throw InventoryError("rule '" + rule.name + "': needs accept and reject examples");
    }
    inv.rules_.push_back(std::move(rule));
  }
  if (inv.rules_.size() < kMinRuleCount) {
    throw InventoryError("inventory: expected at least " + std::to_string(kMinRuleCount) +
                         " rules, found " + std::to_string(inv.rules_.size()));
  }
  return inv;
}

SyllableInventory SyllableInventory::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InventoryError("cannot read inventory file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

const SyllableInventory& SyllableInventory::builtin() {
  static const SyllableInventory inv = from_json_text(data::kSyllableInventory);
  return inv;
}

std::vector<Syllable> candidate_parses(std::string_view toneless, const SyllableInventory& inv) {
  const std::string text = compose_lower(toneless);
  std::vector<std::string> onsets = inv.onsets();
  onsets.push_back("");
  std::vector<std::string> nuclei = inv.nuclei();
  auto longer = [](const std::string& a, const std::string& b) {
    return a.size() != b.size() ? a.size() > b.size() : a < b;
  };
  std::stable_sort(onsets.begin(), onsets.end(), longer);
  std::stable_sort(nuclei.begin(), nuclei.end(), longer);
  std::vector<std::string> medials{""};
  medials.insert(medials.end(), inv.medials().begin(), inv.medials().end());
  std::unordered_set<std::string> codas(inv.codas().begin(), inv.codas().end());
  codas.insert("");

  std::vector<Syllable> out;
  std::string_view rest0 = text;
  for (const auto& onset : onsets) {
    if (!rest0.starts_with(onset)) continue;
    const auto rest1 = rest0.substr(onset.size());
    for (const auto& medial : medials) {
      if (!rest1.starts_with(medial)) continue;
      const auto rest2 = rest1.substr(medial.size());
      for (const auto& nucleus : nuclei) {
        if (!rest2.starts_with(nucleus)) continue;
        const std::string coda(rest2.substr(nucleus.size()));
        if (!codas.contains(coda)) continue;
        out.push_back(Syllable{onset, medial, nucleus, coda, Tone::ngang});
      }
    }
  }
  return out;
}

Syllable decompose(std::string_view toneless, const SyllableInventory& inv) {
  auto candidates = candidate_parses(toneless, inv);
  if (candidates.empty()) throw NotASyllable(std::string(toneless));
  for (const auto& c : candidates) {
    if (passes(c, inv, false)) return c;
  }
  return candidates.front();
}

std::vector<std::string> validate(const Syllable& s, const SyllableInventory& inv) {
  std::vector<std::string> out;
  for (const auto& rule : inv.rules()) {
    if (rule.violated_by(s, true)) out.push_back(rule.name);
  }
  return out;
}

std::vector<Tone> admissible_tones(const Syllable& s, const SyllableInventory& inv) {
  std::vector<Tone> out;
  for (Tone t : orth::kAllTones) {
    Syllable toned = s;
    toned.tone = t;
    if (passes(toned, inv, true)) out.push_back(t);
  }
  return out;
}

TokenAnalysis analyze_token(std::string_view token, const SyllableInventory& inv) {
  TokenAnalysis a;
  a.original = std::string(token);
  const auto folded = orth::fold_case(orth::normalize(token));
  a.base = orth::strip_diacritics(folded);
  orth::ToneSplit split;
  try {
    split = orth::extract_tone(folded);
  } catch (const orth::MultipleToneMarks&) {
    a.toneless = a.base;
    a.reason = "multiple tone marks";
    return a;
  }
  a.tone = split.tone;
  a.toneless = split.toneless.composed();
  if (auto why = gate_reason(folded); !why.empty()) {
    a.reason = std::move(why);
    return a;
  }
  const auto candidates = candidate_parses(a.toneless, inv);
  if (candidates.empty()) {
    a.reason = "no onset/medial/nucleus/coda parse";
    return a;
  }
  for (auto c : candidates) {
    c.tone = split.tone;
    if (passes(c, inv, true)) {
      a.vietnamese = true;
      a.syllable = std::move(c);
      return a;
    }
  }
  Syllable first = candidates.front();
  first.tone = split.tone;
  std::string names;
  for (const auto& n : validate(first, inv)) names += (names.empty() ? "" : ",") + n;
  a.reason = "violates " + names;
  return a;
}

bool is_vietnamese(std::string_view token, const SyllableInventory& inv) {
  return analyze_token(token, inv).vietnamese;
}

std::set<std::string> enumerate_valid_syllables(const SyllableInventory& inv) {
  std::vector<std::string> onsets{""}, medials{""}, codas{""};
  onsets.insert(onsets.end(), inv.onsets().begin(), inv.onsets().end());
  medials.insert(medials.end(), inv.medials().begin(), inv.medials().end());
  codas.insert(codas.end(), inv.codas().begin(), inv.codas().end());

  std::set<std::string> out;
  for (const auto& o : onsets) {
    for (const auto& m : medials) {
      for (const auto& n : inv.nuclei()) {
        for (const auto& c : codas) {
          const Syllable s{o, m, n, c, Tone::ngang};
          if (!passes(s, inv, false)) continue;
          if (admissible_tones(s, inv).empty()) continue;
          out.insert(s.toneless());
        }
      }
    }
  }
  return out;
}

}  // namespace vnscene::syllable
