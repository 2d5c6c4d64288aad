#pragma once

#include <string>
#include <string_view>
#include <vector>

// Unicode-aware text helpers shared by the corpus, diff and metric code.
namespace goe::text {

std::string nfc(std::string_view s);
/// Full Unicode lowercase (ICU root locale).
std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
bool is_blank(std::string_view s);

std::vector<std::string> split_whitespace(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// NFC, whitespace split, every punctuation code point detached into its own
/// token. Case is preserved.
std::vector<std::string> diff_tokens(std::string_view s);

/// mteval-v13a tokenization as used by sacrebleu's "13a" tokenizer.
std::vector<std::string> tokenize_13a(std::string_view s);

/// Tokens used for lexical term matching: 13a, lowercased, NFC.
std::vector<std::string> match_tokens(std::string_view s);

/// Shell-style glob over bytes: '*' any run, '?' any single byte.
bool glob_match(std::string_view pattern, std::string_view text);

}  // namespace goe::text
