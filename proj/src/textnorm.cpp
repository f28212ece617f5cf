#include "memsieve/textnorm.hpp"

namespace memsieve::text {

char32_t fold_codepoint(char32_t cp) {
    // ASCII
    if (cp >= U'A' && cp <= U'Z') return cp + 0x20;
    if (cp < 0x80) return cp;
    // Latin-1 supplement (0xD7 is the multiplication sign)
    if ((cp >= 0xC0 && cp <= 0xD6) || (cp >= 0xD8 && cp <= 0xDE)) return cp + 0x20;
    // Latin Extended-A: alternating upper/lower pairs
    if (cp >= 0x100 && cp <= 0x137) {
        if (cp == 0x130 || cp == 0x131) return cp;  // dotted/dotless i, no 1:1 fold
        return (cp % 2 == 0) ? cp + 1 : cp;
    }
    if (cp >= 0x139 && cp <= 0x148) return (cp % 2 == 1) ? cp + 1 : cp;
    if (cp >= 0x14A && cp <= 0x177) return (cp % 2 == 0) ? cp + 1 : cp;
    if (cp == 0x178) return 0xFF;
    if (cp >= 0x179 && cp <= 0x17E) return (cp % 2 == 1) ? cp + 1 : cp;
    if (cp == 0x17F) return 0x73;  // long s -> s
    // Greek
    if (cp == 0x386) return 0x3AC;
    if (cp >= 0x388 && cp <= 0x38A) return cp + 0x25;
    if (cp == 0x38C) return 0x3CC;
    if (cp == 0x38E || cp == 0x38F) return cp + 0x3F;
    if ((cp >= 0x391 && cp <= 0x3A1) || (cp >= 0x3A3 && cp <= 0x3AB)) return cp + 0x20;
    if (cp == 0x3C2) return 0x3C3;  // final sigma
    // Cyrillic
    if (cp >= 0x400 && cp <= 0x40F) return cp + 0x50;
    if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;
    if (cp >= 0x460 && cp <= 0x481) return (cp % 2 == 0) ? cp + 1 : cp;
    if (cp >= 0x48A && cp <= 0x4BF) return (cp % 2 == 0) ? cp + 1 : cp;
    if (cp == 0x4C0) return 0x4CF;
    if (cp >= 0x4C1 && cp <= 0x4CE) return (cp % 2 == 1) ? cp + 1 : cp;
    if (cp >= 0x4D0 && cp <= 0x52F) return (cp % 2 == 0) ? cp + 1 : cp;
    // Latin Extended Additional
    if (cp == 0x1E9E) return 0xDF;  // capital sharp s
    if (cp >= 0x1E00 && cp <= 0x1EFF) return (cp % 2 == 0) ? cp + 1 : cp;
    // Fullwidth Latin capitals
    if (cp >= 0xFF21 && cp <= 0xFF3A) return cp + 0x20;
    return cp;
}

bool is_word_codepoint(char32_t cp) {
    if (cp < 0x80) {
        return (cp >= U'0' && cp <= U'9') || (cp >= U'a' && cp <= U'z') ||
               (cp >= U'A' && cp <= U'Z');
    }
    // Latin-1 letters (excluding x and division signs)
    if (cp >= 0xC0 && cp <= 0xFF) return cp != 0xD7 && cp != 0xF7;
    if (cp == 0xAA || cp == 0xB5 || cp == 0xBA) return true;
    // Latin Extended-A/B, IPA
    if (cp >= 0x100 && cp <= 0x2AF) return true;
    // Combining marks: never a boundary
    if (cp >= 0x300 && cp <= 0x36F) return true;
    // Greek letters (skip punctuation/tonos marks below 0x386)
    if (cp >= 0x386 && cp <= 0x3FF) return cp != 0x387;
    // Cyrillic + supplement
    if (cp >= 0x400 && cp <= 0x52F) return true;
    // Latin Extended Additional
    if (cp >= 0x1E00 && cp <= 0x1EFF) return true;
    // Fullwidth digits and letters
    if (cp >= 0xFF10 && cp <= 0xFF19) return true;
    if (cp >= 0xFF21 && cp <= 0xFF3A) return true;
    if (cp >= 0xFF41 && cp <= 0xFF5A) return true;
    return false;
}

bool is_cjk_codepoint(char32_t cp) {
    if (cp >= 0x3040 && cp <= 0x30FF) return true;    // hiragana, katakana
    if (cp >= 0x3100 && cp <= 0x312F) return true;    // bopomofo
    if (cp >= 0x31F0 && cp <= 0x31FF) return true;    // katakana extensions
    if (cp >= 0x3400 && cp <= 0x4DBF) return true;    // CJK ext A
    if (cp >= 0x4E00 && cp <= 0x9FFF) return true;    // CJK unified
    if (cp >= 0xAC00 && cp <= 0xD7AF) return true;    // hangul syllables
    if (cp >= 0x1100 && cp <= 0x11FF) return true;    // hangul jamo
    if (cp >= 0xF900 && cp <= 0xFAFF) return true;    // CJK compatibility
    if (cp >= 0x20000 && cp <= 0x2A6DF) return true;  // CJK ext B
    return false;
}

char32_t decode_at(std::string_view s, std::size_t pos, std::size_t& size) {
    const auto* p = reinterpret_cast<const unsigned char*>(s.data()) + pos;
    std::size_t left = s.size() - pos;
    unsigned char b0 = p[0];
    size = 1;
    if (b0 < 0x80) return b0;
    auto cont = [&](std::size_t i) { return i < left && (p[i] & 0xC0) == 0x80; };
    if ((b0 & 0xE0) == 0xC0 && cont(1)) {
        char32_t cp = ((b0 & 0x1Fu) << 6) | (p[1] & 0x3Fu);
        if (cp >= 0x80) { size = 2; return cp; }
    } else if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
        char32_t cp = ((b0 & 0x0Fu) << 12) | ((p[1] & 0x3Fu) << 6) | (p[2] & 0x3Fu);
        if (cp >= 0x800 && !(cp >= 0xD800 && cp <= 0xDFFF)) { size = 3; return cp; }
    } else if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
        char32_t cp = ((b0 & 0x07u) << 18) | ((p[1] & 0x3Fu) << 12) |
                      ((p[2] & 0x3Fu) << 6) | (p[3] & 0x3Fu);
        if (cp >= 0x10000 && cp <= 0x10FFFF) { size = 4; return cp; }
    }
    return kReplacementChar;
}

char32_t decode_before(std::string_view s, std::size_t pos) {
    std::size_t start = pos;
    // Step back over continuation bytes (at most 3).
    for (int i = 0; i < 3 && start > 0; ++i) {
        --start;
        if ((static_cast<unsigned char>(s[start]) & 0xC0) != 0x80) break;
    }
    std::size_t size = 0;
    char32_t cp = decode_at(s, start, size);
    // A truncated/invalid sequence before pos decodes as replacement.
    if (start + size != pos) return kReplacementChar;
    return cp;
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

std::string normalize(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    std::size_t pos = 0;
    while (pos < s.size()) {
        std::size_t size = 0;
        char32_t cp = decode_at(s, pos, size);
        append_utf8(out, fold_codepoint(cp));
        pos += size;
    }
    return out;
}

NormalizedText normalize_with_map(std::string_view s) {
    NormalizedText out;
    out.text.reserve(s.size());
    out.src_begin.reserve(s.size());
    out.src_end.reserve(s.size());
    std::size_t pos = 0;
    while (pos < s.size()) {
        std::size_t size = 0;
        char32_t cp = decode_at(s, pos, size);
        std::size_t before = out.text.size();
        append_utf8(out.text, fold_codepoint(cp));
        for (std::size_t b = before; b < out.text.size(); ++b) {
            out.src_begin.push_back(static_cast<std::uint32_t>(pos));
            out.src_end.push_back(static_cast<std::uint32_t>(pos + size));
        }
        pos += size;
    }
    return out;
}

SurfaceTraits classify_surface(std::string_view surface) {
    SurfaceTraits traits;
    std::size_t pos = 0;
    char32_t first = 0, last = 0;
    bool any = false;
    while (pos < surface.size()) {
        std::size_t size = 0;
        char32_t cp = decode_at(surface, pos, size);
        if (is_cjk_codepoint(cp)) traits.substring_mode = true;
        if (!any) { first = cp; any = true; }
        last = cp;
        pos += size;
    }
    if (traits.substring_mode || !any) return traits;
    traits.boundary_left = is_word_codepoint(first);
    traits.boundary_right = is_word_codepoint(last);
    return traits;
}

bool boundary_ok(const SurfaceTraits& traits, std::string_view text,
                 std::size_t begin, std::size_t end) {
    if (traits.substring_mode) return true;
    if (traits.boundary_left && begin > 0 &&
        is_word_codepoint(decode_before(text, begin))) {
        return false;
    }
    if (traits.boundary_right && end < text.size()) {
        std::size_t size = 0;
        if (is_word_codepoint(decode_at(text, end, size))) return false;
    }
    return true;
}

SpanHit find_word(std::string_view sentence, std::string_view keyword) {
    std::string surface = normalize(keyword);
    if (surface.empty()) return {};
    NormalizedText norm = normalize_with_map(sentence);
    SurfaceTraits traits = classify_surface(surface);
    std::size_t from = 0;
    while (true) {
        std::size_t at = norm.text.find(surface, from);
        if (at == std::string::npos) return {};
        std::size_t end = at + surface.size();
        if (boundary_ok(traits, norm.text, at, end)) {
            return {true, norm.src_begin[at], norm.src_end[end - 1]};
        }
        from = at + 1;
    }
}

bool contains_word(std::string_view sentence, std::string_view keyword) {
    return find_word(sentence, keyword).found;
}

}  // namespace memsieve::text
