// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace treenlg {

/// Word list of the decoder. Ids 0..2 are <s>, </s>, <unk>; vocabularies
/// for attention models also hold the placeholder "@" at id 3.
class Vocabulary {
 public:
  static constexpr std::string_view kBos = "<s>";
  static constexpr std::string_view kEos = "</s>";
  static constexpr std::string_view kUnk = "<unk>";
  static constexpr std::string_view kPlaceholder = "@";

  explicit Vocabulary(bool with_placeholder = false);
  /// Specials first, then words in first-seen order.
  [[nodiscard]] static Vocabulary build(const std::vector<std::vector<std::string>>& sentences, bool with_placeholder);
  [[nodiscard]] static Vocabulary from_words(const std::vector<std::string>& words);

  std::size_t add(const std::string& word);
  std::size_t size() const { return words_.size(); }
  const std::string& word(std::size_t id) const { return words_.at(id); }
  const std::vector<std::string>& words() const { return words_; }
  std::optional<std::size_t> find(std::string_view word) const;
  /// Unknown words map to <unk>.
  std::size_t id(std::string_view word) const;

  std::size_t bos() const { return 0; }
  std::size_t eos() const { return 1; }
  std::size_t unk() const { return 2; }
  bool has_placeholder() const { return placeholder_.has_value(); }
  /// Only meaningful when has_placeholder().
  std::size_t placeholder() const { return placeholder_.value_or(words_.size()); }

  bool operator==(const Vocabulary& other) const { return words_ == other.words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> index_;
  std::optional<std::size_t> placeholder_;
};

}  // namespace treenlg
