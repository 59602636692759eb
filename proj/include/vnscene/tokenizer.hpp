#pragma once

// Caption tokenizers. All three are deterministic and stateless:
//
//   space      split on ASCII/Unicode whitespace, text otherwise untouched
//   character  one token per composed code point, whitespace dropped
//   syllable   compose, split on whitespace, trim Unicode punctuation
//              (general category P*) from both ends of every token

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vnscene::tokenize {

class UnknownTokenizer : public std::invalid_argument {
 public:
  explicit UnknownTokenizer(std::string_view name)
      : std::invalid_argument("unknown tokenizer '" + std::string(name) + "'") {}
};

using Tokens = std::vector<std::string>;

struct Tokenizer {
  std::string name;
  std::function<Tokens(std::string_view)> split;

  Tokens operator()(std::string_view text) const { return split(text); }
};

Tokens space_split(std::string_view text);
Tokens character_split(std::string_view text);
Tokens syllable_split(std::string_view text);

Tokenizer make_tokenizer(std::string_view name);
std::vector<std::string> tokenizer_names();

bool is_punctuation(char32_t cp);
// Removes leading and trailing punctuation code points.
std::string trim_punctuation(std::string_view token);

}  // namespace vnscene::tokenize
