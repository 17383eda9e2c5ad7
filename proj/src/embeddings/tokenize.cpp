#include <algorithm>

#include "../common/utf8.hpp"
#include "dqa/embeddings.hpp"
#include "dqa/errors.hpp"

namespace dqa {

std::vector<std::string> tokenize(std::string_view text) {
  const std::string lowered = utf8::lower(text);
  std::string_view s = lowered;
  std::vector<std::string> out;
  std::string current;
  char32_t prev = 0;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const char32_t cp = utf8::next(s, pos);
    if (utf8::is_alnum(cp)) {
      utf8::append(current, cp);
      prev = cp;
      continue;
    }
    if ((cp == '-' || cp == '.') && !current.empty() && pos < s.size()) {
      std::size_t peek = pos;
      const char32_t nxt = utf8::next(s, peek);
      const bool joins = cp == '-' ? utf8::is_alnum(prev) && utf8::is_alnum(nxt)
                                   : utf8::is_digit(prev) && utf8::is_digit(nxt);
      if (joins) {
        current.push_back(static_cast<char>(cp));
        prev = cp;
        continue;
      }
    }
    if (!current.empty()) out.push_back(std::move(current));
    current.clear();
    prev = cp;
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

std::optional<std::uint32_t> Vocab::id(std::string_view token) const {
  auto it = token_to_id.find(std::string(token));
  if (it == token_to_id.end()) return std::nullopt;
  return it->second;
}

namespace {

Vocab finish_vocab(std::unordered_map<std::string, std::uint64_t> counts, std::uint64_t total,
                   std::uint64_t min_count) {
  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (auto& [tok, n] : counts) {
    if (n >= min_count) kept.emplace_back(tok, n);
  }
  if (kept.empty()) throw EmptyVocab("no token occurs at least " + std::to_string(min_count) + " times");
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocab v;
  v.min_count = min_count;
  v.total_tokens = total;
  v.tokens.reserve(kept.size());
  v.counts.reserve(kept.size());
  for (auto& [tok, n] : kept) {
    v.token_to_id.emplace(tok, static_cast<std::uint32_t>(v.tokens.size()));
    v.tokens.push_back(std::move(tok));
    v.counts.push_back(n);
  }
  return v;
}

}  // namespace

Vocab build_vocab(std::span<const std::string> tokens, std::uint64_t min_count) {
  std::unordered_map<std::string, std::uint64_t> counts;
  for (const auto& t : tokens) ++counts[utf8::lower(t)];
  return finish_vocab(std::move(counts), tokens.size(), min_count);
}

Vocab build_vocab(std::span<const std::vector<std::string>> corpus, std::uint64_t min_count) {
  std::unordered_map<std::string, std::uint64_t> counts;
  std::uint64_t total = 0;
  for (const auto& seq : corpus) {
    for (const auto& t : seq) ++counts[utf8::lower(t)];
    total += seq.size();
  }
  return finish_vocab(std::move(counts), total, min_count);
}

}  // namespace dqa
