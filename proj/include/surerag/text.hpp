#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace surerag::text {

// Lowercased word tokens. Punctuation separates tokens and is dropped, the
// clitic "n't" is split off as its own token ("isn't" -> "is", "n't"), and
// remaining apostrophes are removed.
std::vector<std::string> tokenize(std::string_view s);

bool is_stopword(std::string_view token);

// tokenize() minus stopwords and the "n't" clitic.
std::vector<std::string> content_tokens(std::string_view s);
std::set<std::string> content_token_set(std::string_view s);

// |a ∩ b| / |a ∪ b|; 0 when both are empty.
double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

std::string to_lower(std::string_view s);

}  // namespace surerag::text
