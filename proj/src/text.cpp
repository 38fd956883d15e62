#include "hardneg/text.hpp"

#include <algorithm>
#include <array>
#include <cstdint>

#include "hardneg/corpus.hpp"

namespace hardneg {
namespace {

struct Unit {
    std::string text;   // folded representation (may be multi-char, e.g. ss)
    bool alnum = false; // token-forming
    bool dot = false;   // literal '.' candidate for the decimal rule
};

// Decodes one UTF-8 code point starting at pos; advances pos. Invalid bytes
// decode as U+FFFD and consume one byte.
std::uint32_t decode_utf8(std::string_view s, std::size_t& pos) {
    const auto byte = [&](std::size_t i) { return static_cast<unsigned char>(s[i]); };
    const unsigned char b0 = byte(pos);
    if (b0 < 0x80) {
        ++pos;
        return b0;
    }
    auto cont = [&](std::size_t i) { return i < s.size() && (byte(i) & 0xc0) == 0x80; };
    if ((b0 & 0xe0) == 0xc0 && cont(pos + 1)) {
        const std::uint32_t cp = ((b0 & 0x1fu) << 6) | (byte(pos + 1) & 0x3fu);
        pos += 2;
        return cp;
    }
    if ((b0 & 0xf0) == 0xe0 && cont(pos + 1) && cont(pos + 2)) {
        const std::uint32_t cp =
            ((b0 & 0x0fu) << 12) | ((byte(pos + 1) & 0x3fu) << 6) | (byte(pos + 2) & 0x3fu);
        pos += 3;
        return cp;
    }
    if ((b0 & 0xf8) == 0xf0 && cont(pos + 1) && cont(pos + 2) && cont(pos + 3)) {
        const std::uint32_t cp = ((b0 & 0x07u) << 18) | ((byte(pos + 1) & 0x3fu) << 12) |
                                 ((byte(pos + 2) & 0x3fu) << 6) | (byte(pos + 3) & 0x3fu);
        pos += 4;
        return cp;
    }
    ++pos;
    return 0xfffd;
}

void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else {
        out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    }
}

// Compatibility fold for the Latin-1 supplement and Latin Extended-A blocks:
// strips diacritics to the ASCII base letter, expands ligature-like letters.
// Returns empty when the code point has no mapping here.
std::string fold_latin(std::uint32_t cp) {
    struct Range {
        std::uint32_t lo, hi;
        const char* base;
    };
    static constexpr std::array<Range, 24> kRanges = {{
        {0x00c0, 0x00c5, "a"}, {0x00c8, 0x00cb, "e"}, {0x00cc, 0x00cf, "i"},
        {0x00d2, 0x00d6, "o"}, {0x00d9, 0x00dc, "u"}, {0x00e0, 0x00e5, "a"},
        {0x00e8, 0x00eb, "e"}, {0x00ec, 0x00ef, "i"}, {0x00f2, 0x00f6, "o"},
        {0x00f9, 0x00fc, "u"}, {0x0100, 0x0105, "a"}, {0x0106, 0x010d, "c"},
        {0x010e, 0x0111, "d"}, {0x0112, 0x011b, "e"}, {0x011c, 0x0123, "g"},
        {0x0124, 0x0127, "h"}, {0x0128, 0x012f, "i"}, {0x0139, 0x0142, "l"},
        {0x0143, 0x0148, "n"}, {0x014c, 0x0151, "o"}, {0x0154, 0x0159, "r"},
        {0x015a, 0x0161, "s"}, {0x0162, 0x0167, "t"}, {0x0168, 0x0173, "u"},
    }};
    switch (cp) {
        case 0x00c6: case 0x00e6: return "ae";
        case 0x0152: case 0x0153: return "oe";
        case 0x00d8: case 0x00f8: return "o";
        case 0x00df: return "ss";
        case 0x00c7: case 0x00e7: return "c";
        case 0x00d0: case 0x00f0: return "d";
        case 0x00d1: case 0x00f1: return "n";
        case 0x00dd: case 0x00fd: case 0x00ff: return "y";
        case 0x00de: case 0x00fe: return "th";
        case 0x0178: return "y";
        case 0x0179: case 0x017a: case 0x017b: case 0x017c: case 0x017d: case 0x017e: return "z";
        case 0x0174: case 0x0175: return "w";
        case 0x0134: case 0x0135: return "j";
        case 0x0136: case 0x0137: return "k";
        default: break;
    }
    for (const auto& r : kRanges) {
        if (cp >= r.lo && cp <= r.hi) return r.base;
    }
    return {};
}

bool is_separator_codepoint(std::uint32_t cp) {
    if (cp == 0x00a0 || cp == 0x0085) return true;                  // nbsp, NEL
    if (cp >= 0x2000 && cp <= 0x206f) return true;                  // spaces + general punctuation
    if (cp >= 0x3000 && cp <= 0x303f) return true;                  // CJK punctuation
    if (cp == 0x00ab || cp == 0x00bb || cp == 0x00b7) return true;  // guillemets, middle dot
    return false;
}

Unit classify(std::uint32_t cp) {
    // Full-width ASCII folds to plain ASCII first.
    if (cp >= 0xff01 && cp <= 0xff5e) cp = cp - 0xfee0;
    Unit u;
    if (cp < 0x80) {
        const char c = static_cast<char>(cp);
        if (c >= 'a' && c <= 'z') {
            u.text = std::string(1, c);
            u.alnum = true;
        } else if (c >= 'A' && c <= 'Z') {
            u.text = std::string(1, static_cast<char>(c - 'A' + 'a'));
            u.alnum = true;
        } else if (c >= '0' && c <= '9') {
            u.text = std::string(1, c);
            u.alnum = true;
        } else if (c == '.') {
            u.text = ".";
            u.dot = true;
        }
        return u;
    }
    if (const std::string folded = fold_latin(cp); !folded.empty()) {
        u.text = folded;
        u.alnum = true;
        return u;
    }
    if (is_separator_codepoint(cp) || cp == 0xfffd) {
        return u;
    }
    // Unmapped non-ASCII (CJK, Cyrillic, ...): kept verbatim as token content.
    append_utf8(u.text, cp);
    u.alnum = true;
    return u;
}

bool ends_with_digit(const std::string& s) {
    return !s.empty() && s.back() >= '0' && s.back() <= '9';
}

bool starts_with_digit(const std::string& s) {
    return !s.empty() && s.front() >= '0' && s.front() <= '9';
}

}  // namespace

TokenStream tokenize(std::string_view text) {
    std::vector<Unit> units;
    units.reserve(text.size());
    std::size_t pos = 0;
    std::size_t codepoints = 0;
    while (pos < text.size()) {
        const std::uint32_t cp = decode_utf8(text, pos);
        ++codepoints;
        units.push_back(classify(cp));
    }

    TokenStream stream;
    stream.source_length = codepoints;
    std::string current;
    for (std::size_t i = 0; i < units.size(); ++i) {
        const Unit& u = units[i];
        if (u.alnum) {
            current += u.text;
            continue;
        }
        const bool decimal_dot = u.dot && ends_with_digit(current) && i + 1 < units.size() &&
                                 units[i + 1].alnum && starts_with_digit(units[i + 1].text);
        if (decimal_dot) {
            current += '.';
            continue;
        }
        if (!current.empty()) {
            stream.tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) stream.tokens.push_back(std::move(current));
    return stream;
}

bool contains_answer_span(const TokenStream& stream, const std::vector<std::string>& answers) {
    for (const auto& answer : answers) {
        const TokenStream needle = tokenize(answer);
        if (needle.empty()) continue;
        const auto it = std::search(stream.tokens.begin(), stream.tokens.end(),
                                    needle.tokens.begin(), needle.tokens.end());
        if (it != stream.tokens.end()) return true;
    }
    return false;
}

bool contains_answer_span(std::string_view text, const std::vector<std::string>& answers) {
    return contains_answer_span(tokenize(text), answers);
}

bool contains_answer_span(const Passage& passage, const std::vector<std::string>& answers) {
    return contains_answer_span(passage.text, answers);
}

}  // namespace hardneg
