#include "streamclust/text.hpp"

#include <fstream>
#include <stdexcept>

namespace streamclust {
namespace {

struct Decoded {
  char32_t cp;
  std::size_t len;
};

constexpr char32_t kReplacement = 0xFFFD;

Decoded decode_utf8(std::string_view s, std::size_t i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) return {b0, 1};
  std::size_t len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    return {kReplacement, 1};
  }
  if (i + len > s.size()) return {kReplacement, 1};
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) return {kReplacement, 1};
    cp = (cp << 6) | (b & 0x3F);
  }
  // Overlong forms and surrogates are treated as garbage.
  if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
      (cp >= 0xD800 && cp <= 0xDFFF) || cp > 0x10FFFF)
    return {kReplacement, 1};
  return {cp, len};
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool in_range(char32_t cp, char32_t lo, char32_t hi) { return cp >= lo && cp <= hi; }

// Letters, digits, underscore and combining marks. Everything outside the
// listed punctuation/symbol/emoji blocks counts as a letter.
bool is_word_cp(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9') ||
           cp == '_';
  }
  if (cp == 0xAA || cp == 0xB5 || cp == 0xBA) return true;
  if (in_range(cp, 0x80, 0xBF) || cp == 0xD7 || cp == 0xF7) return false;
  if (cp == 0x37E || cp == 0x387) return false;
  if (in_range(cp, 0x2000, 0x2BFF) || in_range(cp, 0x2E00, 0x2E7F) ||
      in_range(cp, 0x3000, 0x303F) || in_range(cp, 0xE000, 0xF8FF) ||
      in_range(cp, 0xFE00, 0xFE0F) || in_range(cp, 0xFE30, 0xFE4F) ||
      in_range(cp, 0xFF00, 0xFF0F) || in_range(cp, 0xFF1A, 0xFF20) ||
      in_range(cp, 0xFF3B, 0xFF40) || in_range(cp, 0xFF5B, 0xFF65) ||
      in_range(cp, 0xFFF0, 0xFFFF) || in_range(cp, 0x1F000, 0x1FAFF) ||
      in_range(cp, 0xE0000, 0xE007F))
    return false;
  return true;
}

// Simple case mapping for ASCII, Latin-1, Latin Extended-A, Greek and Cyrillic.
char32_t to_lower(char32_t cp) {
  if (cp < 0x80) return (cp >= 'A' && cp <= 'Z') ? cp + 32 : cp;
  if (in_range(cp, 0xC0, 0xDE) && cp != 0xD7) return cp + 0x20;
  if (in_range(cp, 0x100, 0x137) || in_range(cp, 0x14A, 0x177)) return cp | 1;
  if (in_range(cp, 0x139, 0x148) || in_range(cp, 0x179, 0x17E)) return (cp & 1) ? cp + 1 : cp;
  if (cp == 0x178) return 0xFF;
  if (in_range(cp, 0x391, 0x3A9) && cp != 0x3A2) return cp + 0x20;
  if (cp == 0x386) return 0x3AC;
  if (in_range(cp, 0x388, 0x38A)) return cp + 0x25;
  if (cp == 0x38C) return 0x3CC;
  if (in_range(cp, 0x38E, 0x38F)) return cp + 0x3F;
  if (in_range(cp, 0x410, 0x42F)) return cp + 0x20;
  if (in_range(cp, 0x400, 0x40F)) return cp + 0x50;
  return cp;
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool word_char_at(std::string_view s, std::size_t i) {
  return i < s.size() && is_word_cp(decode_utf8(s, i).cp);
}

// True when the byte before i does not end a word character.
bool boundary_before(std::string_view s, std::size_t i) {
  if (i == 0) return true;
  std::size_t j = i - 1;
  while (j > 0 && (static_cast<unsigned char>(s[j]) & 0xC0) == 0x80) --j;
  return !is_word_cp(decode_utf8(s, j).cp);
}

bool starts_with_ci(std::string_view s, std::size_t i, std::string_view prefix) {
  if (i + prefix.size() > s.size()) return false;
  for (std::size_t k = 0; k < prefix.size(); ++k) {
    char c = s[i + k];
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);
    if (c != prefix[k]) return false;
  }
  return true;
}

std::string_view trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

std::string strip_retweet_markup(std::string_view s) {
  std::string_view t = trim(s);
  if (!t.starts_with("RT @")) return std::string(s);
  std::size_t i = 4;
  const std::size_t user_start = i;
  while (i < t.size() && word_char_at(t, i)) i += decode_utf8(t, i).len;
  if (i == user_start || i >= t.size() || t[i] != ':') return std::string(s);
  ++i;
  return std::string(t.substr(i));
}

std::string strip_urls(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (starts_with_ci(s, i, "http://") || starts_with_ci(s, i, "https://") ||
        starts_with_ci(s, i, "www.")) {
      while (i < s.size() && !is_space(s[i])) ++i;
      if (!out.empty() && is_space(out.back())) {
        while (!out.empty() && is_space(out.back())) out.pop_back();
      } else if (out.empty()) {
        while (i < s.size() && is_space(s[i])) ++i;
      }
      continue;
    }
    out.push_back(s[i]);
    ++i;
  }
  return out;
}

std::string strip_hashtags(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] == '#' && boundary_before(s, i)) {
      std::size_t j = i;
      while (j < s.size() && s[j] == '#') ++j;
      if (word_char_at(s, j)) {
        i = j;
        continue;
      }
    }
    out.push_back(s[i]);
    ++i;
  }
  return out;
}

std::string clean_once(std::string_view text) {
  std::string s = strip_retweet_markup(text);
  s = strip_urls(s);
  s = strip_hashtags(s);
  return std::string(trim(s));
}

}  // namespace

void RawPost::validate() const {
  if (id.empty()) throw std::invalid_argument("post id must be non-empty");
  if (published_at <= 0) throw std::invalid_argument("post " + id + ": published_at must be > 0");
  if (origin_published_at && *origin_published_at > published_at)
    throw std::invalid_argument("post " + id + ": origin_published_at after published_at");
}

bool StopwordSet::contains(std::string_view token) const { return words_.find(token) != words_.end(); }

StopwordSet StopwordSet::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open stopword file " + path.string());
  StopwordSet set;
  std::string line;
  while (std::getline(in, line)) {
    std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    // Stored in tokenizer form so lookups match.
    for (auto& tok : tokenize(t, StopwordSet{})) set.insert(std::move(tok));
  }
  return set;
}

std::string clean_text(std::string_view text) {
  // Every rule only deletes characters, so iterating to a fixpoint terminates
  // and makes the function idempotent (e.g. "RT @a: RT @b: ..." chains).
  std::string current(text);
  for (;;) {
    std::string next = clean_once(current);
    if (next == current) return next;
    current = std::move(next);
  }
}

std::vector<std::string> tokenize(std::string_view cleaned, const StopwordSet& stopwords) {
  std::vector<std::string> tokens;
  std::string token;
  std::size_t i = 0;
  bool prev_word = false;
  auto flush = [&] {
    if (!token.empty() && token != "@" && !stopwords.contains(token)) tokens.push_back(token);
    token.clear();
  };
  while (i < cleaned.size()) {
    const Decoded d = decode_utf8(cleaned, i);
    const bool word = is_word_cp(d.cp);
    if (word) {
      append_utf8(token, to_lower(d.cp));
    } else {
      flush();
      if (d.cp == '@' && !prev_word && word_char_at(cleaned, i + 1)) token.push_back('@');
    }
    prev_word = word;
    i += d.len;
  }
  flush();
  return tokens;
}

std::vector<std::string> analyze(std::string_view text, const StopwordSet& stopwords) {
  return tokenize(clean_text(text), stopwords);
}

}  // namespace streamclust
