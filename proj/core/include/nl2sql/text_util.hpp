#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace nl2sql {

// Lowercase, split on non-alphanumeric runs. No stemming, no stopwords.
std::vector<std::string> tokenize(std::string_view text);

std::string to_lower(std::string_view text);

// |A ∩ B| / |A ∪ B| over token sets; 0 when either side is empty.
double token_jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b);

std::string trim(std::string_view text);

}  // namespace nl2sql
