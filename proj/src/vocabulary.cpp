// SPDX-License-Identifier: Apache-2.0
#include "treenlg/vocabulary.hpp"

#include "treenlg/error.hpp"

namespace treenlg {

Vocabulary::Vocabulary(bool with_placeholder) {
  add(std::string(kBos));
  add(std::string(kEos));
  add(std::string(kUnk));
  if (with_placeholder) placeholder_ = add(std::string(kPlaceholder));
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& sentences, bool with_placeholder) {
  Vocabulary v(with_placeholder);
  for (const auto& s : sentences) {
    for (const auto& w : s) {
      if (w.size() > 1 && w.front() == '@' && with_placeholder) {
        throw ContractError("composite slot token " + w + " in a placeholder vocabulary");
      }
      v.add(w);
    }
  }
  return v;
}

Vocabulary Vocabulary::from_words(const std::vector<std::string>& words) {
  if (words.size() < 3 || words[0] != kBos || words[1] != kEos || words[2] != kUnk) {
    throw ParseError("vocabulary must start with <s>, </s>, <unk>");
  }
  const bool with_placeholder = words.size() > 3 && words[3] == kPlaceholder;
  Vocabulary v(with_placeholder);
  for (std::size_t i = v.size(); i < words.size(); ++i) {
    if (v.find(words[i])) throw ParseError("duplicate vocabulary word " + words[i]);
    v.add(words[i]);
  }
  return v;
}

std::size_t Vocabulary::add(const std::string& word) {
  if (auto it = index_.find(word); it != index_.end()) return it->second;
  words_.push_back(word);
  index_.emplace(word, words_.size() - 1);
  return words_.size() - 1;
}

std::optional<std::size_t> Vocabulary::find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Vocabulary::id(std::string_view word) const { return find(word).value_or(unk()); }

}  // namespace treenlg
