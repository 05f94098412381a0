#pragma once

#include <string>
#include <unordered_set>
#include <vector>

#include <Eigen/Core>

namespace hgre {

// Splits a UTF-8 string into codepoint-sized tokens.
std::vector<std::string> utf8_chars(const std::string& s);

// Domain term dictionary, stored tokenized. Matching is exact token-sequence
// equality; all overlapping matches are kept.
class Lexicon {
 public:
  Lexicon() = default;
  explicit Lexicon(const std::vector<std::vector<std::string>>& terms);

  static Lexicon load(const std::string& path);
  void save(const std::string& path) const;

  bool contains(const std::vector<std::string>& term) const;
  size_t size() const { return term_keys_.size(); }
  int max_term_len() const { return max_term_len_; }
  std::vector<std::vector<std::string>> terms() const;  // sorted, for serialization

  void add(const std::vector<std::string>& term);

 private:
  // Terms keyed by '\x1f'-joined tokens (the separator cannot occur in text).
  std::unordered_set<std::string> term_keys_;
  int max_term_len_ = 0;
};

// n x n binary matrix over sentence positions; entry (a,b) is 1 iff the
// inclusive token subsequence [a..b] is a lexicon term.
using MaskMatrix = Eigen::MatrixXd;

MaskMatrix build_mask(const std::vector<std::string>& tokens, const Lexicon& lex);

}  // namespace hgre
