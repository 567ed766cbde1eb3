#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace flowshift::csv {

// Splits one CSV line. Double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split(std::string_view line);

// Quotes a field only when it needs it.
std::string escape(std::string_view field);

std::string_view trim(std::string_view s);

// True for blank lines and lines starting with '#'.
bool skippable(std::string_view line);

}  // namespace flowshift::csv
