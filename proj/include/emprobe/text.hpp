#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace emprobe::text {

// A word is a maximal run of ASCII letters, digits, '_' or any byte >= 0x80
// (so UTF-8 sequences never split a word). Everything else is a boundary.
bool is_word_byte(unsigned char c);

struct word_span {
    size_t begin;
    size_t end;
};

std::vector<word_span> find_words(std::string_view s);

std::string to_lower_ascii(std::string_view s);
std::string_view trim(std::string_view s);
bool is_blank(std::string_view s);

// split on runs of ASCII whitespace
std::vector<std::string> split_whitespace(std::string_view s);

// collapse every whitespace run into one space and strip both ends
std::string collapse_whitespace(std::string_view s);

} // namespace emprobe::text
