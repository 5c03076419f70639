#include "iprop/text.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>

namespace iprop::text {

namespace {

bool is_space(unsigned char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_continuation(unsigned char c) noexcept { return (c & 0xC0) == 0x80; }

}  // namespace

std::string_view trim(std::string_view s) noexcept {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string fold_case(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    auto u = static_cast<unsigned char>(c);
    if (u < 0x80) c = static_cast<char>(std::tolower(u));
  }
  return out;
}

bool iequals(std::string_view a, std::string_view b) noexcept {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto x = static_cast<unsigned char>(a[i]);
    auto y = static_cast<unsigned char>(b[i]);
    if (x < 0x80) x = static_cast<unsigned char>(std::tolower(x));
    if (y < 0x80) y = static_cast<unsigned char>(std::tolower(y));
    if (x != y) return false;
  }
  return true;
}

namespace {

constexpr char32_t kInvalid = 0xFFFFFFFF;

// Decodes the code point starting at `i`; kInvalid for malformed input.
char32_t decode_at(std::string_view s, std::size_t i) noexcept {
  const auto c = static_cast<unsigned char>(s[i]);
  if (c < 0x80) return c;
  std::size_t len = c >= 0xF0 ? 4 : c >= 0xE0 ? 3 : c >= 0xC0 ? 2 : 0;
  if (len == 0 || i + len > s.size()) return kInvalid;
  char32_t cp = c & (0x7F >> len);
  for (std::size_t k = 1; k < len; ++k) {
    const auto cc = static_cast<unsigned char>(s[i + k]);
    if ((cc & 0xC0) != 0x80) return kInvalid;
    cp = (cp << 6) | (cc & 0x3F);
  }
  return cp;
}

// Code point that ends right before `end`.
char32_t decode_before(std::string_view s, std::size_t end) noexcept {
  std::size_t start = end - 1;
  while (start > 0 && end - start < 4 && (static_cast<unsigned char>(s[start]) & 0xC0) == 0x80) --start;
  return decode_at(s, start);
}

}  // namespace

bool is_word_char(char32_t cp) noexcept {
  if (cp < 0x80) return std::isalnum(static_cast<int>(cp)) != 0 || cp == '_';
  if (cp == kInvalid) return true;
  const bool punctuation = cp == 0xA0 || cp == 0xA1 || cp == 0xAB || cp == 0xBB || cp == 0xBF ||
                           cp == 0xFEFF || (cp >= 0x2000 && cp <= 0x206F) ||
                           (cp >= 0x3000 && cp <= 0x303F);
  return !punctuation;
}

std::size_t find_whole_word(std::string_view haystack, std::string_view needle,
                            std::size_t from) noexcept {
  if (needle.empty()) return std::string_view::npos;
  for (auto pos = haystack.find(needle, from); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + 1)) {
    const bool left_ok = pos == 0 || !is_word_char(decode_before(haystack, pos));
    const std::size_t end = pos + needle.size();
    const bool right_ok = end == haystack.size() || !is_word_char(decode_at(haystack, end));
    if (left_ok && right_ok) return pos;
  }
  return std::string_view::npos;
}

std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string, std::less<>>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const auto close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        const auto name = tmpl.substr(i + 1, close - i - 1);
        if (auto it = values.find(name); it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

bool has_placeholder(std::string_view tmpl, std::string_view name) {
  std::string token;
  token.reserve(name.size() + 2);
  token += '{';
  token += name;
  token += '}';
  return tmpl.find(token) != std::string_view::npos;
}

bool is_valid_utf8(std::string_view s) noexcept {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > s.size()) return false;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if (!is_continuation(cc)) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
        cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
      return false;
    }
    i += len;
  }
  return true;
}

std::size_t count_code_points(std::string_view s) noexcept {
  return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) {
    return !is_continuation(static_cast<unsigned char>(c));
  }));
}

std::string truncate_on_word(std::string_view s, std::size_t max_chars, std::string_view marker) {
  if (count_code_points(s) <= max_chars) return std::string(s);

  // byte offset just past the first max_chars code points
  std::size_t cut = 0;
  for (std::size_t seen = 0; cut < s.size(); ++cut) {
    if (!is_continuation(static_cast<unsigned char>(s[cut]))) {
      if (seen == max_chars) break;
      ++seen;
    }
  }

  std::size_t end = cut;
  // If the cut falls inside a word, back off to the preceding whitespace.
  if (cut < s.size() && !is_space(static_cast<unsigned char>(s[cut]))) {
    std::size_t ws = cut;
    while (ws > 0 && !is_space(static_cast<unsigned char>(s[ws - 1]))) --ws;
    if (ws > 0) end = ws;
  }
  while (end > 0 && is_space(static_cast<unsigned char>(s[end - 1]))) --end;
  std::string out(s.substr(0, end));
  out += marker;
  return out;
}

}  // namespace iprop::text
