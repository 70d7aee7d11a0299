#include "tgsum/text.hpp"

#include <cctype>

namespace tgsum {
namespace {

bool is_punct_char(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

bool is_terminator(std::string_view token) { return token == "." || token == "!" || token == "?"; }

}  // namespace

bool is_punctuation(std::string_view token) {
  if (token.empty()) return false;
  for (char c : token)
    if (!is_punct_char(c)) return false;
  return true;
}

Tokens tokenize(std::string_view text) {
  Tokens out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (start == i) break;
    std::string chunk(text.substr(start, i - start));
    for (char& c : chunk) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (is_abbreviation(chunk)) {
      out.push_back(std::move(chunk));
      continue;
    }
    std::size_t lo = 0, hi = chunk.size();
    Tokens trailing;
    while (lo < hi && is_punct_char(chunk[lo])) out.emplace_back(1, chunk[lo++]);
    while (hi > lo && is_punct_char(chunk[hi - 1])) trailing.emplace_back(1, chunk[--hi]);
    if (lo < hi) {
      std::string core = chunk.substr(lo, hi - lo);
      // split possessive "'s" off the core
      if (core.size() > 2 && core.compare(core.size() - 2, 2, "'s") == 0) {
        out.push_back(core.substr(0, core.size() - 2));
        out.emplace_back("'s");
      } else {
        out.push_back(std::move(core));
      }
    }
    out.insert(out.end(), trailing.rbegin(), trailing.rend());
  }
  return out;
}

std::vector<Tokens> split_sentences(const Tokens& tokens) {
  std::vector<Tokens> sentences;
  Tokens current;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    current.push_back(tokens[i]);
    if (is_terminator(tokens[i])) {
      // absorb runs like "?!" or closing quotes directly after the terminator
      while (i + 1 < tokens.size() && (is_terminator(tokens[i + 1]) || tokens[i + 1] == "\"" ||
                                       tokens[i + 1] == "'" || tokens[i + 1] == ")")) {
        current.push_back(tokens[++i]);
      }
      sentences.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) sentences.push_back(std::move(current));
  return sentences;
}

Tokens content_words(const Tokens& tokens) {
  Tokens out;
  for (const auto& t : tokens)
    if (!is_punctuation(t) && !is_stopword(t)) out.push_back(t);
  return out;
}

}  // namespace tgsum
