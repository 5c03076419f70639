#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>

namespace iprop::text {

std::string_view trim(std::string_view s) noexcept;

/// ASCII case folding; bytes >= 0x80 pass through unchanged.
std::string fold_case(std::string_view s);

bool iequals(std::string_view a, std::string_view b) noexcept;

/// Word characters are ASCII alphanumerics, '_' and non-ASCII code points
/// other than common Unicode spaces and punctuation (typographic quotes,
/// dashes, ellipsis, guillemets). Malformed bytes count as word characters.
bool is_word_char(char32_t cp) noexcept;

/// Position of the first occurrence of `needle` in `haystack` at or after
/// `from` that is delimited by non-word characters (or the string ends) on
/// both sides. Case-sensitive; fold both sides first for case-insensitive use.
std::size_t find_whole_word(std::string_view haystack, std::string_view needle,
                            std::size_t from = 0) noexcept;

/// Single-pass substitution of `{name}` placeholders. Unknown placeholders are
/// left untouched and substituted values are never re-scanned.
std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string, std::less<>>& values);

bool has_placeholder(std::string_view tmpl, std::string_view name);

/// True if `s` is well-formed UTF-8 (no overlongs, no surrogates).
bool is_valid_utf8(std::string_view s) noexcept;

/// Number of UTF-8 code points (assumes valid UTF-8).
std::size_t count_code_points(std::string_view s) noexcept;

/// Cuts `s` to at most `max_chars` code points, preferring the last whitespace
/// boundary, and appends `marker`. Returns `s` unchanged when short enough.
std::string truncate_on_word(std::string_view s, std::size_t max_chars, std::string_view marker);

}  // namespace iprop::text
