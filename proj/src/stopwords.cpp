#include <algorithm>
#include <array>
#include <string_view>

#include "tgsum/text.hpp"

namespace tgsum {
namespace {

// Frozen English stopword list (sorted for binary search).
constexpr auto kStopwords = std::to_array<std::string_view>({
    "a",       "about",   "above",   "after",      "again",    "against", "all",     "also",
    "am",      "an",      "and",     "any",        "are",      "as",      "at",      "be",
    "because", "been",    "before",  "being",      "below",    "between", "both",    "but",
    "by",      "can",     "could",   "did",        "do",       "does",    "doing",   "down",
    "during",  "each",    "either",  "else",       "etc",      "ever",    "few",     "for",
    "from",    "further", "had",     "has",        "have",     "having",  "he",      "her",
    "here",    "hers",    "herself", "him",        "himself",  "his",     "how",     "however",
    "i",       "if",      "in",      "into",       "is",       "it",      "its",     "itself",
    "just",    "may",     "me",      "might",      "more",     "most",    "must",    "my",
    "myself",  "neither", "no",      "nor",        "not",      "now",     "of",      "off",
    "on",      "once",    "one",     "only",       "or",       "other",   "our",     "ours",
    "ourselves", "out",   "over",    "own",        "same",     "shall",   "she",     "should",
    "since",   "so",      "some",    "such",       "than",     "that",    "the",     "their",
    "theirs",  "them",    "themselves", "then",    "there",    "these",   "they",    "this",
    "those",   "though",  "through", "thus",       "to",       "too",     "under",   "until",
    "up",      "upon",    "us",      "very",       "was",      "we",      "were",    "what",
    "when",    "where",   "whether", "which",      "while",    "who",     "whom",    "whose",
    "why",     "will",    "with",    "within",     "without",  "would",   "yet",     "you",
    "your",    "yours",   "yourself", "yourselves", "'s",
});

constexpr auto kAbbreviations = std::to_array<std::string_view>({
    "a.m.", "co.", "corp.", "dr.", "e.g.", "etc.", "i.e.", "inc.", "jr.", "lt.", "ltd.", "messrs.",
    "mr.",  "mrs.", "ms.", "mt.", "no.", "p.m.", "prof.", "sr.", "st.", "u.k.", "u.s.", "vs.",
});

}  // namespace

bool is_stopword(std::string_view token) {
  static const auto sorted = [] {
    auto copy = kStopwords;
    std::sort(copy.begin(), copy.end());
    return copy;
  }();
  return std::binary_search(sorted.begin(), sorted.end(), token);
}

bool is_abbreviation(std::string_view token) {
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), token) != kAbbreviations.end();
}

}  // namespace tgsum
