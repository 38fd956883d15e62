#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace hardneg {

struct Passage;

/// Normalized token sequence. Tokens are lowercase, never empty, and
/// identical input always yields the identical stream.
struct TokenStream {
    std::vector<std::string> tokens;
    std::size_t source_length = 0;  // code points in the original text

    bool empty() const { return tokens.empty(); }
    std::size_t size() const { return tokens.size(); }
};

/// Lowercases, folds common compatibility forms (accented Latin, full-width
/// ASCII) and treats punctuation as separators. Digits are kept, and a '.'
/// flanked by digits stays inside its token, so "k1=0.82" -> [k1, 0.82].
/// No stemming and no stopword removal anywhere.
TokenStream tokenize(std::string_view text);

/// True iff some answer's token sequence occurs contiguously in the token
/// stream of `text`. Matching is done on normalized tokens, so it is
/// insensitive to case and punctuation on both sides.
bool contains_answer_span(std::string_view text, const std::vector<std::string>& answers);
bool contains_answer_span(const Passage& passage, const std::vector<std::string>& answers);
bool contains_answer_span(const TokenStream& stream, const std::vector<std::string>& answers);

}  // namespace hardneg
