#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace moodswipe {

/// Lowercases ASCII, splits on whitespace and separates punctuation runs
/// into their own tokens. An apostrophe between two word characters stays
/// inside the word ("don't"). Bytes >= 0x80 are treated as word characters.
std::vector<std::string> tokenize(std::string_view text);

/// True when the text has at least one token made of word characters.
bool has_word_token(std::string_view text);

using TokenId = std::uint32_t;

/// Dense token -> id map with PAD = 0 and UNK = 1 reserved.
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;

  Vocabulary();

  /// Returns the existing id or assigns the next one.
  TokenId add(std::string_view token);

  /// UNK for unknown tokens.
  TokenId id(std::string_view token) const;

  const std::string& token(TokenId id) const { return tokens_.at(id); }
  std::size_t size() const { return tokens_.size(); }
  bool contains(std::string_view token) const;

  /// Maps tokens to ids and pads with PAD or truncates the tail to
  /// exactly `length` ids.
  std::vector<TokenId> encode(const std::vector<std::string>& tokens,
                              std::size_t length) const;

  std::vector<TokenId> encode(std::string_view text, std::size_t length) const {
    return encode(tokenize(text), length);
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

/// Replaces tab, CR and LF so the text fits in one TSV field.
std::string sanitize_field(std::string_view text);

/// Splits on '\t' without collapsing empty fields.
std::vector<std::string_view> split_tabs(std::string_view line);

}  // namespace moodswipe
