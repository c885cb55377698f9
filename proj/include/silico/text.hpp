#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace silico {

std::string trim(std::string_view s);

// Lowercased alphanumeric word tokens; everything else is a separator.
std::vector<std::string> tokenize_words(std::string_view s);

std::string to_lower(std::string_view s);

bool contains(std::string_view haystack, std::string_view needle);

// Substitute every "{key}" in the template with its replacement.
std::string substitute(std::string_view tmpl, std::string_view key,
                       std::string_view value);

// Shortest round-trip representation (std::to_chars), deterministic across
// runs; used for every double written to CSV.
std::string format_double(double v);

// UTC timestamp, ISO 8601, second resolution.
std::string utc_timestamp_now();

}  // namespace silico
