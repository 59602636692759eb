#pragma once

#include <string>
#include <string_view>

namespace vnscene::utf8 {

// Invalid sequences decode to U+FFFD; decoding never throws.
std::u32string decode(std::string_view text);
std::string encode(std::u32string_view cps);
std::string encode(char32_t cp);

// Number of Unicode scalar values in a UTF-8 string.
std::size_t length(std::string_view text);

}  // namespace vnscene::utf8
