#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cdi/error.hpp"

namespace cdi {

enum class Lang { En, Cn };

std::string_view to_string(Lang lang);
Lang parse_lang(std::string_view code);

// True for scripts written without inter-word spaces.
bool is_unspaced_script(std::string_view lang_code);

namespace text {

// Decodes UTF-8 into code points. Invalid bytes decode as U+FFFD.
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);
void append_utf8(std::string& out, char32_t cp);

std::size_t code_point_count(std::string_view s);

// Byte offset of the code point at index `cp_index` (clamped to size()).
std::size_t byte_offset(std::string_view s, std::size_t cp_index);

// Substring addressed by code point offsets [start, end).
std::string slice(std::string_view s, std::size_t start, std::size_t end);

// Collapses whitespace runs to a single space and trims both ends.
std::string normalize_whitespace(std::string_view s);

std::string ascii_lower(std::string_view s);

bool is_space(char32_t cp);
bool is_ascii_alnum(char32_t cp);
bool is_cjk(char32_t cp);

std::vector<std::string> split_whitespace(std::string_view s);

// 64-bit FNV-1a over the bytes of `s` (offset 0xcbf29ce484222325,
// prime 0x100000001b3). Used for feature hashing, seeds and cache keys.
constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v);

}  // namespace text
}  // namespace cdi
