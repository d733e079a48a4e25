#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fcq/model.hpp"
#include "fcq/regex.hpp"

namespace fcq {

using FactorId = std::uint32_t;
inline constexpr FactorId kEpsilonId = 0;

// 1-based, half-open: {i, i} is the empty factor at position i.
struct Span {
  std::size_t start = 1, end = 1;
  bool operator==(const Span&) const = default;
  auto operator<=>(const Span&) const = default;
};

class InvalidSpan : public Error {
 public:
  using Error::Error;
};

// Canonical factor identities for one input word.  Ids are handed out in
// order of leftmost occurrence, shorter first, so every id's canonical span
// is its leftmost occurrence.  The table is quadratic in |w|.
class WordIndex {
 public:
  explicit WordIndex(std::string w) : w_(std::move(w)) {
    const std::size_t n = w_.size();
    row_.resize(n + 2);
    for (std::size_t s = 0; s <= n; ++s) row_[s + 1] = row_[s] + (n - s + 1);
    table_.resize(row_[n + 1]);
    start_.push_back(0);
    len_.push_back(0);

    // Suffix array + LCP: a factor of length l starting at SA[r] equals the
    // one at SA[r-1] iff l <= lcp[r].  Provisional ids come from that, then
    // get renumbered by leftmost occurrence.
    std::vector<std::uint32_t> sa(n), rank(n), lcp(n, 0);
    for (std::size_t i = 0; i < n; ++i) sa[i] = static_cast<std::uint32_t>(i);
    std::string_view v(w_);
    std::sort(sa.begin(), sa.end(), [&](std::uint32_t a, std::uint32_t b) { return v.substr(a) < v.substr(b); });
    for (std::size_t r = 0; r < n; ++r) rank[sa[r]] = static_cast<std::uint32_t>(r);
    for (std::size_t i = 0, h = 0; i < n; ++i) {
      if (rank[i] == 0) {
        h = 0;
        continue;
      }
      std::size_t j = sa[rank[i] - 1];
      while (i + h < n && j + h < n && w_[i + h] == w_[j + h]) ++h;
      lcp[rank[i]] = static_cast<std::uint32_t>(h);
      if (h) --h;
    }
    FactorId provisional = 1;
    for (std::size_t s = 0; s <= n; ++s) table_[row_[s]] = kEpsilonId;
    for (std::size_t r = 0; r < n; ++r) {
      std::size_t s = sa[r];
      for (std::size_t l = 1; s + l <= n; ++l)
        table_[row_[s] + l] = (r > 0 && l <= lcp[r]) ? table_[row_[sa[r - 1]] + l] : provisional++;
    }
    std::vector<FactorId> remap(provisional, 0);
    std::vector<char> seen(provisional, 0);
    seen[kEpsilonId] = 1;
    for (std::size_t s = 0; s <= n; ++s)
      for (std::size_t l = 1; s + l <= n; ++l) {
        FactorId& t = table_[row_[s] + l];
        if (!seen[t]) {
          seen[t] = 1;
          remap[t] = static_cast<FactorId>(start_.size());
          start_.push_back(s);
          len_.push_back(l);
        }
        t = remap[t];
      }

    // occurrence lists, grouped by id
    occ_row_.assign(start_.size() + 1, 0);
    for (std::size_t s = 0; s <= n; ++s)
      for (std::size_t l = 0; s + l <= n; ++l) ++occ_row_[table_[row_[s] + l] + 1];
    for (std::size_t i = 1; i < occ_row_.size(); ++i) occ_row_[i] += occ_row_[i - 1];
    occ_.resize(occ_row_.back());
    std::vector<std::uint32_t> fill(occ_row_.begin(), occ_row_.end() - 1);
    for (std::size_t s = 0; s <= n; ++s)
      for (std::size_t l = 0; s + l <= n; ++l) occ_[fill[table_[row_[s] + l]]++] = static_cast<std::uint32_t>(s);
  }

  const std::string& word() const { return w_; }
  std::size_t size() const { return w_.size(); }
  std::size_t factor_count() const { return start_.size(); }

  // 0-based start, unchecked.
  FactorId id_at(std::size_t start, std::size_t len) const { return table_[row_[start] + len]; }

  FactorId factor_id(Span s) const {
    if (s.start < 1 || s.start > s.end || s.end > w_.size() + 1)
      throw InvalidSpan("span [" + std::to_string(s.start) + "," + std::to_string(s.end) + ") is not a span of w");
    return id_at(s.start - 1, s.end - s.start);
  }

  FactorId whole() const { return id_at(0, w_.size()); }

  Span canonical_span(FactorId id) const { return Span{start_[id] + 1, start_[id] + len_[id] + 1}; }
  std::size_t start_of(FactorId id) const { return start_[id]; }
  std::size_t length(FactorId id) const { return len_[id]; }
  std::string_view text(FactorId id) const { return std::string_view(w_).substr(start_[id], len_[id]); }

  // 0-based start positions of every occurrence, ascending.
  std::pair<const std::uint32_t*, const std::uint32_t*> occurrences(FactorId id) const {
    return {occ_.data() + occ_row_[id], occ_.data() + occ_row_[id + 1]};
  }

  std::optional<FactorId> lookup(std::string_view u) const {
    if (u.size() > w_.size()) return std::nullopt;
    auto pos = w_.find(u);
    if (pos == std::string::npos) return std::nullopt;
    return id_at(pos, u.size());
  }

  // Id of word(a)·word(b) if that is a factor.  Linear scan over the
  // occurrences of a.
  std::optional<FactorId> concat_id(FactorId a, FactorId b) const {
    if (a == kEpsilonId) return b;
    if (b == kEpsilonId) return a;
    const std::size_t la = len_[a], lb = len_[b];
    auto [first, last] = occurrences(a);
    for (auto p = first; p != last; ++p) {
      std::size_t s = *p;
      if (s + la + lb > w_.size()) break;
      if (id_at(s + la, lb) == b) return id_at(s, la + lb);
    }
    return std::nullopt;
  }

  // Calls f(z, x, y) once for each triple of distinct factors with
  // word(z) = word(x)·word(y).
  template <class F>
  void for_each_concat_triple(F&& f) const {
    for (FactorId z = 0; z < start_.size(); ++z) {
      std::size_t s = start_[z], l = len_[z];
      for (std::size_t k = 0; k <= l; ++k) f(z, id_at(s, k), id_at(s + k, l - k));
    }
  }

  // Membership bitmap over factor ids.
  std::vector<char> regex_mask(const Nfa& nfa) const {
    std::vector<char> mask(start_.size(), 0);
    const std::size_t n = w_.size();
    auto init = nfa.initial();
    if (nfa.accepting(init)) mask[kEpsilonId] = 1;
    for (std::size_t s = 0; s < n; ++s) {
      auto cur = init;
      for (std::size_t e = s; e < n; ++e) {
        cur = nfa.step(cur, static_cast<unsigned char>(w_[e]));
        if (cur.empty()) break;
        if (nfa.accepting(cur)) mask[id_at(s, e - s + 1)] = 1;
      }
    }
    return mask;
  }
  std::vector<char> regex_mask(const Regex& r) const { return regex_mask(Nfa::compile(r)); }

  std::vector<FactorId> regex_members(const Regex& r) const {
    auto mask = regex_mask(r);
    std::vector<FactorId> out;
    for (FactorId i = 0; i < mask.size(); ++i)
      if (mask[i]) out.push_back(i);
    return out;
  }

 private:
  std::string w_;
  std::vector<std::size_t> row_;
  std::vector<FactorId> table_;
  std::vector<std::size_t> start_, len_;
  std::vector<std::uint32_t> occ_row_, occ_;
};

inline WordIndex build_index(std::string w) { return WordIndex(std::move(w)); }

}  // namespace fcq
