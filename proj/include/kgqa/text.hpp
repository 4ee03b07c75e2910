#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kgqa::text {

// UTF-8 <-> codepoint conversion. decode_utf8 returns nullopt on invalid
// byte sequences (overlong encodings, stray continuation bytes, surrogates).
std::optional<std::u32string> decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view cps);

// decode_utf8, falling back to byte values for undecodable input.
std::u32string decode_lossy(std::string_view s);

// Canonical composition of combining sequences. The table covers the Arabic
// madda/hamza compositions used by Persian plus Latin letters carrying a
// single common combining diacritic; anything else passes through unchanged.
std::u32string nfc(std::u32string_view cps);
std::string nfc(std::string_view s);

// One-to-one case fold (ASCII, Latin-1 Supplement, Latin Extended-A).
// Folding maps each codepoint to exactly one codepoint, so offsets computed
// on folded text line up with the NFC text they were folded from.
char32_t fold_cp(char32_t cp);
std::u32string fold(std::u32string_view cps); // fold only, no NFC
std::string fold(std::string_view s);         // nfc + fold

std::string trim(std::string_view s);
std::string collapse_ws(std::string_view s); // runs of whitespace -> one space

bool is_space(char32_t cp);
bool is_word_char(char32_t cp);

// nfc + fold + whitespace collapse + trim; the key used by gazetteers,
// relation lexicons and the exact-match metrics.
std::string match_key(std::string_view s);

// Start offsets of every occurrence of needle in haystack whose edges fall on
// word boundaries.
std::vector<size_t> find_word_bounded(std::u32string_view haystack,
                                      std::u32string_view needle);

} // namespace kgqa::text
