#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// Text normalization and character classes used by salient-word matching.
//
// Normalization is UTF-8 decoding (invalid bytes become U+FFFD) followed by
// per-codepoint case folding. The folding table covers ASCII, Latin-1,
// Latin Extended-A, Latin Extended Additional, Greek, Cyrillic and fullwidth
// Latin; other codepoints pass through unchanged. Folding is 1:1 at the
// codepoint level, so every normalized codepoint maps back to exactly one
// source codepoint. The same function is applied to identifier surfaces and
// to matched texts, which is what keeps the matcher and the naive oracle in
// exact agreement.

namespace memsieve::text {

inline constexpr char32_t kReplacementChar = 0xFFFD;

char32_t fold_codepoint(char32_t cp);

// Letters/digits of the alphabetic scripts covered by the folding table,
// plus combining marks (a trailing accent must not create a word boundary).
// CJK ideographs, kana and hangul are intentionally *not* word characters:
// they delimit embedded Latin words in mixed-script text.
bool is_word_codepoint(char32_t cp);

// Han ideographs, kana, hangul and their extensions.
bool is_cjk_codepoint(char32_t cp);

// Decode one codepoint starting at `pos`; writes the encoded length (>= 1)
// to `size`. Invalid sequences decode as U+FFFD with size 1.
char32_t decode_at(std::string_view s, std::size_t pos, std::size_t& size);

// Decode the codepoint ending immediately before `pos` (pos > 0).
char32_t decode_before(std::string_view s, std::size_t pos);

void append_utf8(std::string& out, char32_t cp);

// Case-folded copy of `s`.
std::string normalize(std::string_view s);

// Normalized text plus a byte-level map back into the source string.
// For a match covering normalized bytes [b, e), the source range is
// [src_begin[b], src_end[e - 1]).
struct NormalizedText {
    std::string text;
    std::vector<std::uint32_t> src_begin;
    std::vector<std::uint32_t> src_end;
};

NormalizedText normalize_with_map(std::string_view s);

// Matching mode of a surface: surfaces containing any CJK codepoint match as
// plain substrings; all other surfaces require a word boundary at an edge
// whose edge codepoint is a word character.
struct SurfaceTraits {
    bool substring_mode = false;   // true when the surface contains CJK
    bool boundary_left = false;    // first codepoint is a word character
    bool boundary_right = false;   // last codepoint is a word character
};

SurfaceTraits classify_surface(std::string_view normalized_surface);

// Whether an occurrence of a surface at normalized byte range [begin, end)
// of `normalized_text` satisfies the surface's boundary rules.
bool boundary_ok(const SurfaceTraits& traits, std::string_view normalized_text,
                 std::size_t begin, std::size_t end);

// True when `keyword` occurs in `sentence` under the same normalization and
// boundary rules as identifier matching. Used by rule predicates.
bool contains_word(std::string_view sentence, std::string_view keyword);

// First occurrence of `keyword` in `sentence` under matching rules, reported
// as a byte range in the *source* sentence; {0, 0} sentinel when absent.
struct SpanHit {
    bool found = false;
    std::size_t begin = 0;
    std::size_t end = 0;
};
SpanHit find_word(std::string_view sentence, std::string_view keyword);

}  // namespace memsieve::text
