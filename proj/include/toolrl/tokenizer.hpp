#pragma once

#include <cctype>
#include <string>
#include <vector>

namespace toolrl {

/// Tokenization is pluggable: every downstream token count (masks, field
/// alignment, length statistics) is parameterized on the tokenizer in use.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::vector<std::string> tokenize(const std::string& text) const = 0;

  std::size_t count(const std::string& text) const { return tokenize(text).size(); }
};

/// Deterministic default: maximal runs of [A-Za-z0-9_] are word tokens,
/// every other non-whitespace byte is a single-character token.
class WhitespaceTokenizer final : public Tokenizer {
 public:
  std::vector<std::string> tokenize(const std::string& text) const override {
    std::vector<std::string> out;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
      const unsigned char c = static_cast<unsigned char>(text[i]);
      if (std::isspace(c)) {
        ++i;
        continue;
      }
      if (is_word(c)) {
        std::size_t j = i + 1;
        while (j < n && is_word(static_cast<unsigned char>(text[j]))) ++j;
        out.push_back(text.substr(i, j - i));
        i = j;
      } else {
        out.push_back(text.substr(i, 1));
        ++i;
      }
    }
    return out;
  }

 private:
  static bool is_word(unsigned char c) { return std::isalnum(c) || c == '_'; }
};

inline const Tokenizer& default_tokenizer() {
  static const WhitespaceTokenizer tok;
  return tok;
}

}  // namespace toolrl
