#include "hgre/lexicon.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "hgre/schema.hpp"

namespace hgre {

namespace {

constexpr char kSep = '\x1f';

std::string join_key(const std::vector<std::string>& tokens) {
  std::string key;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) key.push_back(kSep);
    key += tokens[i];
  }
  return key;
}

}  // namespace

std::vector<std::string> utf8_chars(const std::string& s) {
  std::vector<std::string> out;
  for (size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    size_t len = 1;
    if ((c & 0x80) == 0x00) len = 1;
    else if ((c & 0xE0) == 0xC0) len = 2;
    else if ((c & 0xF0) == 0xE0) len = 3;
    else if ((c & 0xF8) == 0xF0) len = 4;
    len = std::min(len, s.size() - i);
    out.push_back(s.substr(i, len));
    i += len;
  }
  return out;
}

Lexicon::Lexicon(const std::vector<std::vector<std::string>>& terms) {
  for (const auto& t : terms) add(t);
}

void Lexicon::add(const std::vector<std::string>& term) {
  if (term.empty()) throw ValidationError("lexicon: empty term");
  term_keys_.insert(join_key(term));
  max_term_len_ = std::max(max_term_len_, static_cast<int>(term.size()));
}

bool Lexicon::contains(const std::vector<std::string>& term) const {
  return term_keys_.count(join_key(term)) > 0;
}

Lexicon Lexicon::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("lexicon: cannot open " + path);
  Lexicon lex;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> tokens;
    if (line.find(' ') != std::string::npos) {
      std::istringstream ss(line);
      std::string t;
      while (ss >> t) tokens.push_back(t);
    } else {
      // Unspaced lines are single-character token sequences.
      tokens = utf8_chars(line);
    }
    if (!tokens.empty()) lex.add(tokens);
  }
  return lex;
}

void Lexicon::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("lexicon: cannot write " + path);
  for (const auto& term : terms()) {
    for (size_t i = 0; i < term.size(); ++i) {
      if (i) out << ' ';
      out << term[i];
    }
    out << "\n";
  }
}

std::vector<std::vector<std::string>> Lexicon::terms() const {
  std::vector<std::string> keys(term_keys_.begin(), term_keys_.end());
  std::sort(keys.begin(), keys.end());
  std::vector<std::vector<std::string>> out;
  out.reserve(keys.size());
  for (const auto& key : keys) {
    std::vector<std::string> term;
    std::string tok;
    for (char c : key) {
      if (c == kSep) {
        term.push_back(tok);
        tok.clear();
      } else {
        tok.push_back(c);
      }
    }
    term.push_back(tok);
    out.push_back(std::move(term));
  }
  return out;
}

MaskMatrix build_mask(const std::vector<std::string>& tokens, const Lexicon& lex) {
  const int n = static_cast<int>(tokens.size());
  MaskMatrix m = MaskMatrix::Zero(n, n);
  if (lex.size() == 0) return m;
  const int max_len = lex.max_term_len();
  std::vector<std::string> window;
  for (int a = 0; a < n; ++a) {
    window.clear();
    for (int b = a; b < n && b - a < max_len; ++b) {
      window.push_back(tokens[b]);
      if (lex.contains(window)) m(a, b) = 1.0;
    }
  }
  return m;
}

}  // namespace hgre
