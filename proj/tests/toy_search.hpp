// Small search models with known answers.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <vector>

#include "treenlg/generation.hpp"

namespace toy {

using namespace treenlg;

// Next-token log-probabilities drawn from a seeded table keyed by the
// history. Token 0 ends the sentence.
class TableModel {
 public:
  using State = std::vector<std::size_t>;

  TableModel(std::size_t vocab, std::uint64_t seed, double peak = 2.0) : vocab_(vocab), seed_(seed), peak_(peak) {}

  State initial() const { return {}; }
  State extend(const State& s, std::size_t tok) const {
    State n = s;
    n.push_back(tok);
    return n;
  }
  std::span<const double> log_probs(const State& s) const {
    auto it = cache_.find(s);
    if (it == cache_.end()) it = cache_.emplace(s, distribution(s)).first;
    return it->second;
  }
  std::size_t end_token() const { return 0; }
  bool allowed(std::size_t) const { return true; }

  std::vector<double> distribution(const State& s) const {
    std::uint64_t h = seed_;
    for (std::size_t t : s) h = h * 1000003u + t + 1;
    std::mt19937_64 rng(h);
    std::uniform_real_distribution<double> u(-peak_, peak_);
    std::vector<double> logits(vocab_);
    double z = 0.0;
    for (auto& l : logits) {
      l = u(rng);
      z += std::exp(l);
    }
    for (auto& l : logits) l -= std::log(z);
    return logits;
  }

 private:
  std::size_t vocab_;
  std::uint64_t seed_;
  double peak_;
  mutable std::map<State, std::vector<double>> cache_;
};
static_assert(SearchModel<TableModel>);

struct Scored {
  std::vector<std::size_t> tokens;
  double score;
};

// All finished sequences of at most `max_length` tokens, end token included.
inline std::vector<Scored> enumerate(const TableModel& m, std::size_t max_length) {
  std::vector<Scored> out;
  std::function<void(std::vector<std::size_t>, double)> walk = [&](std::vector<std::size_t> prefix, double score) {
    const auto lp = m.distribution(prefix);
    auto done = prefix;
    done.push_back(0);
    out.push_back({done, score + lp[0]});
    if (prefix.size() + 1 >= max_length) return;
    for (std::size_t k = 1; k < lp.size(); ++k) {
      auto next = prefix;
      next.push_back(k);
      walk(next, score + lp[k]);
    }
  };
  walk({}, 0.0);
  std::sort(out.begin(), out.end(), [](const Scored& a, const Scored& b) { return a.score > b.score; });
  return out;
}

}  // namespace toy
