#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tgsum {

using Tokens = std::vector<std::string>;

// Lowercases and splits on whitespace; leading/trailing punctuation is peeled
// into separate tokens unless the chunk is a known abbreviation ("e.g.", "dr.").
Tokens tokenize(std::string_view text);

// Splits a token stream into sentences at ".", "!" and "?" tokens. The
// terminator stays attached to its sentence.
std::vector<Tokens> split_sentences(const Tokens& tokens);

bool is_abbreviation(std::string_view token);
bool is_stopword(std::string_view token);
bool is_punctuation(std::string_view token);

// Porter (1980) suffix-stripping stemmer. Input is expected lowercase.
std::string porter_stem(std::string_view word);

// Content words: lowercase tokens that are neither stopwords nor pure punctuation.
Tokens content_words(const Tokens& tokens);

}  // namespace tgsum
