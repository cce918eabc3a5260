#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace causal {

// Minimal UTF-8 helpers. Text arguments are stored as UTF-8 bytes but all
// distance and mutation work operates on Unicode scalar values.

bool utf8_valid(std::string_view s);

/// Decodes to scalar values; nullopt on malformed input.
std::optional<std::u32string> utf8_decode(std::string_view s);

/// Decodes input that has already been validated (asserts on bad bytes).
std::u32string utf8_decode_checked(std::string_view s);

std::string utf8_encode(std::u32string_view s);
std::string utf8_encode(char32_t c);

std::size_t utf8_length(std::string_view s);

} // namespace causal
