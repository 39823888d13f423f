#include "surerag/text.hpp"

#include <cctype>
#include <unordered_set>

namespace surerag::text {

namespace {

const std::unordered_set<std::string_view>& stopwords() {
    static const std::unordered_set<std::string_view> words = {
    "a",       "about",   "above",  "after",   "again",  "against", "all",     "am",
    "an",      "and",     "any",    "are",     "as",     "at",      "be",      "because",
    "been",    "before",  "being",  "below",   "between", "both",   "but",     "by",
    "can",     "could",   "did",    "do",      "does",   "doing",   "down",    "during",
    "each",    "few",     "for",    "from",    "further", "had",    "has",     "have",
    "having",  "he",      "her",    "here",    "hers",   "herself", "him",     "himself",
    "his",     "how",     "i",      "if",      "in",     "into",    "is",      "it",
    "its",     "itself",  "me",     "more",    "most",   "my",      "myself",  "neither",
    "never",   "no",      "nor",    "not",     "of",     "off",     "on",      "once",
    "only",    "or",      "other",  "our",     "ours",   "out",     "over",    "own",
    "same",    "she",     "should", "so",      "some",   "such",    "than",    "that",
    "the",     "their",   "theirs", "them",    "then",   "there",   "these",   "they",
    "this",    "those",   "through", "to",     "too",    "under",   "until",   "up",
    "very",    "was",     "we",     "were",    "what",   "when",    "where",   "which",
    "while",   "who",     "whom",   "why",     "will",   "with",    "without", "would",
    "you",     "your",    "yours",  "yourself", "yourselves", "s",  "t",
    };
    return words;
}

bool word_char(unsigned char c) { return std::isalnum(c) || c == '\'' || c >= 0x80; }

}  // namespace

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::vector<std::string> tokenize(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && !word_char(static_cast<unsigned char>(s[i]))) ++i;
        std::size_t j = i;
        while (j < s.size() && word_char(static_cast<unsigned char>(s[j]))) ++j;
        if (j > i) {
            std::string raw = to_lower(s.substr(i, j - i));
            std::string clitic;
            if (raw.size() > 3 && raw.compare(raw.size() - 3, 3, "n't") == 0) {
                raw.resize(raw.size() - 3);
                clitic = "n't";
            }
            std::erase(raw, '\'');
            if (!raw.empty()) out.push_back(std::move(raw));
            if (!clitic.empty()) out.push_back(std::move(clitic));
        }
        i = j;
    }
    return out;
}

bool is_stopword(std::string_view token) {
    return stopwords().count(token) > 0;
}

std::vector<std::string> content_tokens(std::string_view s) {
    auto tokens = tokenize(s);
    std::erase_if(tokens, [](const std::string& t) { return t == "n't" || is_stopword(t); });
    return tokens;
}

std::set<std::string> content_token_set(std::string_view s) {
    auto tokens = content_tokens(s);
    return {tokens.begin(), tokens.end()};
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 0.0;
    std::size_t inter = 0;
    for (const auto& t : a) inter += b.count(t);
    return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

}  // namespace surerag::text
