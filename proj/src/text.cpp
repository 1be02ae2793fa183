#include "moodswipe/text.hpp"

#include <algorithm>
#include <cctype>

namespace moodswipe {

namespace {

enum class CharClass { Space, Word, Apostrophe, Punct };

CharClass classify(unsigned char c) {
  if (std::isspace(c)) return CharClass::Space;
  if (c >= 0x80 || std::isalnum(c)) return CharClass::Word;
  if (c == '\'') return CharClass::Apostrophe;
  return CharClass::Punct;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  bool in_word = false;

  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };

  const std::size_t n = text.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    CharClass cls = classify(c);
    if (cls == CharClass::Apostrophe) {
      const bool inner = in_word && i + 1 < n &&
                         classify(static_cast<unsigned char>(text[i + 1])) ==
                             CharClass::Word;
      cls = inner ? CharClass::Word : CharClass::Punct;
    }
    switch (cls) {
      case CharClass::Space:
        flush();
        in_word = false;
        break;
      case CharClass::Word:
        if (!in_word) flush();
        current.push_back(static_cast<char>(std::tolower(c)));
        in_word = true;
        break;
      default:
        if (in_word) flush();
        current.push_back(static_cast<char>(c));
        in_word = false;
        break;
    }
  }
  flush();
  return tokens;
}

bool has_word_token(std::string_view text) {
  for (const auto& tok : tokenize(text)) {
    if (classify(static_cast<unsigned char>(tok.front())) == CharClass::Word) {
      return true;
    }
  }
  return false;
}

Vocabulary::Vocabulary() {
  add("<pad>");
  add("<unk>");
}

TokenId Vocabulary::add(std::string_view token) {
  auto [it, inserted] =
      ids_.try_emplace(std::string(token), static_cast<TokenId>(tokens_.size()));
  if (inserted) tokens_.emplace_back(token);
  return it->second;
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return ids_.count(std::string(token)) != 0;
}

std::vector<TokenId> Vocabulary::encode(const std::vector<std::string>& tokens,
                                        std::size_t length) const {
  std::vector<TokenId> ids(length, kPad);
  const std::size_t n = std::min(length, tokens.size());
  for (std::size_t i = 0; i < n; ++i) ids[i] = id(tokens[i]);
  return ids;
}

std::string sanitize_field(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  }
  return out;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

}  // namespace moodswipe
