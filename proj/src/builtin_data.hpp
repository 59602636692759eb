#pragma once

#include <string_view>

// Data files compiled into the library (see src/builtin_data.cpp.in).
namespace vnscene::data {

extern const std::string_view kSyllableInventory;
extern const std::string_view kStopwords;

}  // namespace vnscene::data
