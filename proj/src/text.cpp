#include <kgqa/text.hpp>

#include <algorithm>
#include <array>
#include <cstdint>

namespace kgqa::text {

namespace {

struct Composition {
    char32_t base;
    char32_t mark;
    char32_t composed;
};

// Canonical (base, combining mark) -> precomposed pairs. Arabic entries are
// the five madda/hamza seats; Latin entries cover the diacritics that occur
// in transliterated names.
constexpr std::array<Composition, 68> kCompositions{{
    // Arabic
    {0x0627, 0x0653, 0x0622}, // alef + madda
    {0x0627, 0x0654, 0x0623}, // alef + hamza above
    {0x0648, 0x0654, 0x0624}, // waw + hamza above
    {0x0627, 0x0655, 0x0625}, // alef + hamza below
    {0x064A, 0x0654, 0x0626}, // yeh + hamza above
    // Latin: grave 0300, acute 0301, circumflex 0302, tilde 0303,
    // macron 0304, breve 0306, diaeresis 0308, ring 030A, caron 030C,
    // cedilla 0327
    {U'A', 0x0300, 0x00C0}, {U'A', 0x0301, 0x00C1}, {U'A', 0x0302, 0x00C2},
    {U'A', 0x0303, 0x00C3}, {U'A', 0x0308, 0x00C4}, {U'A', 0x030A, 0x00C5},
    {U'a', 0x0300, 0x00E0}, {U'a', 0x0301, 0x00E1}, {U'a', 0x0302, 0x00E2},
    {U'a', 0x0303, 0x00E3}, {U'a', 0x0308, 0x00E4}, {U'a', 0x030A, 0x00E5},
    {U'C', 0x0327, 0x00C7}, {U'c', 0x0327, 0x00E7},
    {U'C', 0x0301, 0x0106}, {U'c', 0x0301, 0x0107},
    {U'C', 0x030C, 0x010C}, {U'c', 0x030C, 0x010D},
    {U'E', 0x0300, 0x00C8}, {U'E', 0x0301, 0x00C9}, {U'E', 0x0302, 0x00CA},
    {U'E', 0x0308, 0x00CB}, {U'e', 0x0300, 0x00E8}, {U'e', 0x0301, 0x00E9},
    {U'e', 0x0302, 0x00EA}, {U'e', 0x0308, 0x00EB},
    {U'G', 0x0306, 0x011E}, {U'g', 0x0306, 0x011F},
    {U'I', 0x0300, 0x00CC}, {U'I', 0x0301, 0x00CD}, {U'I', 0x0302, 0x00CE},
    {U'I', 0x0308, 0x00CF}, {U'i', 0x0300, 0x00EC}, {U'i', 0x0301, 0x00ED},
    {U'i', 0x0302, 0x00EE}, {U'i', 0x0308, 0x00EF},
    {U'N', 0x0303, 0x00D1}, {U'n', 0x0303, 0x00F1},
    {U'O', 0x0300, 0x00D2}, {U'O', 0x0301, 0x00D3}, {U'O', 0x0302, 0x00D4},
    {U'O', 0x0303, 0x00D5}, {U'O', 0x0308, 0x00D6},
    {U'o', 0x0300, 0x00F2}, {U'o', 0x0301, 0x00F3}, {U'o', 0x0302, 0x00F4},
    {U'o', 0x0303, 0x00F5}, {U'o', 0x0308, 0x00F6},
    {U'S', 0x0301, 0x015A}, {U's', 0x0301, 0x015B},
    {U'S', 0x030C, 0x0160}, {U's', 0x030C, 0x0161},
    {U'U', 0x0300, 0x00D9}, {U'U', 0x0301, 0x00DA}, {U'U', 0x0302, 0x00DB},
    {U'U', 0x0308, 0x00DC}, {U'u', 0x0300, 0x00F9}, {U'u', 0x0301, 0x00FA},
    {U'u', 0x0302, 0x00FB}, {U'u', 0x0308, 0x00FC},
    {U'Y', 0x0301, 0x00DD}, {U'y', 0x0301, 0x00FD}, {U'y', 0x0308, 0x00FF},
}};

std::optional<char32_t> compose_pair(char32_t base, char32_t mark) {
    for (const auto& c : kCompositions) {
        if (c.base == base && c.mark == mark) return c.composed;
    }
    return std::nullopt;
}

bool is_combining_mark(char32_t cp) {
    return (cp >= 0x0300 && cp <= 0x036F) || (cp >= 0x0653 && cp <= 0x0655);
}

} // namespace

std::optional<std::u32string> decode_utf8(std::string_view s) {
    std::u32string out;
    out.reserve(s.size());
    size_t i = 0;
    while (i < s.size()) {
        const auto b0 = static_cast<uint8_t>(s[i]);
        if (b0 < 0x80) {
            out.push_back(b0);
            i += 1;
            continue;
        }
        int len;
        char32_t cp;
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
            return std::nullopt;
        }
        if (i + len > s.size()) return std::nullopt;
        for (int k = 1; k < len; ++k) {
            const auto b = static_cast<uint8_t>(s[i + k]);
            if ((b & 0xC0) != 0x80) return std::nullopt;
            cp = (cp << 6) | (b & 0x3F);
        }
        // Reject overlong encodings, surrogates and out-of-range values.
        if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) ||
            (len == 4 && cp < 0x10000))
            return std::nullopt;
        if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return std::nullopt;
        out.push_back(cp);
        i += len;
    }
    return out;
}

std::string encode_utf8(std::u32string_view cps) {
    std::string out;
    out.reserve(cps.size());
    for (char32_t cp : cps) {
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
    return out;
}

std::u32string decode_lossy(std::string_view s) {
    if (auto cps = decode_utf8(s)) return *cps;
    std::u32string out;
    out.reserve(s.size());
    for (unsigned char c : s) out.push_back(c);
    return out;
}

std::u32string nfc(std::u32string_view cps) {
    std::u32string out;
    out.reserve(cps.size());
    for (char32_t cp : cps) {
        if (!out.empty() && is_combining_mark(cp)) {
            if (auto composed = compose_pair(out.back(), cp)) {
                out.back() = *composed;
                continue;
            }
        }
        out.push_back(cp);
    }
    return out;
}

std::string nfc(std::string_view s) {
    auto cps = decode_utf8(s);
    if (!cps) return std::string(s); // leave undecodable input alone
    return encode_utf8(nfc(*cps));
}

char32_t fold_cp(char32_t cp) {
    if (cp >= U'A' && cp <= U'Z') return cp + 0x20;
    if (cp >= 0x00C0 && cp <= 0x00DE && cp != 0x00D7) return cp + 0x20;
    if (cp >= 0x0100 && cp <= 0x0137 && cp % 2 == 0) return cp + 1;
    if (cp >= 0x0139 && cp <= 0x0148 && cp % 2 == 1) return cp + 1;
    if (cp >= 0x014A && cp <= 0x0177 && cp % 2 == 0) return cp + 1;
    if (cp == 0x0178) return 0x00FF;
    if (cp >= 0x0179 && cp <= 0x017E && cp % 2 == 1) return cp + 1;
    return cp;
}

std::u32string fold(std::u32string_view cps) {
    std::u32string out(cps);
    std::transform(out.begin(), out.end(), out.begin(), fold_cp);
    return out;
}

std::string fold(std::string_view s) {
    auto cps = decode_utf8(s);
    if (!cps) return std::string(s);
    return encode_utf8(fold(nfc(*cps)));
}

bool is_space(char32_t cp) {
    return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' ||
           cp == 0x00A0 || cp == 0x200C /* zero-width non-joiner */ ||
           (cp >= 0x2000 && cp <= 0x200B);
}

bool is_word_char(char32_t cp) {
    if (cp < 0x80)
        return (cp >= U'0' && cp <= U'9') || (cp >= U'A' && cp <= U'Z') ||
               (cp >= U'a' && cp <= U'z') || cp == U'_';
    if (is_space(cp)) return false;
    // Non-ASCII punctuation that shows up around Persian text.
    if (cp == 0x060C || cp == 0x061B || cp == 0x061F) return false;
    if (cp >= 0x00A1 && cp <= 0x00BF) return false;
    if (cp >= 0x2010 && cp <= 0x205E) return false;
    return true;
}

std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && static_cast<uint8_t>(s[b]) <= 0x20) ++b;
    while (e > b && static_cast<uint8_t>(s[e - 1]) <= 0x20) --e;
    return std::string(s.substr(b, e - b));
}

std::string collapse_ws(std::string_view s) {
    auto cps = decode_utf8(s);
    if (!cps) return std::string(s);
    std::u32string out;
    out.reserve(cps->size());
    bool pending_space = false;
    for (char32_t cp : *cps) {
        if (is_space(cp)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(U' ');
            pending_space = false;
        }
        out.push_back(cp);
    }
    return encode_utf8(out);
}

std::string match_key(std::string_view s) {
    return collapse_ws(fold(s));
}

std::vector<size_t> find_word_bounded(std::u32string_view haystack,
                                      std::u32string_view needle) {
    std::vector<size_t> out;
    if (needle.empty() || needle.size() > haystack.size()) return out;
    for (size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
        if (haystack.compare(i, needle.size(), needle) != 0) continue;
        const size_t end = i + needle.size();
        const bool start_ok =
            i == 0 || !is_word_char(haystack[i - 1]) || !is_word_char(needle.front());
        const bool end_ok = end == haystack.size() || !is_word_char(haystack[end]) ||
                            !is_word_char(needle.back());
        if (start_ok && end_ok) out.push_back(i);
    }
    return out;
}

} // namespace kgqa::text
