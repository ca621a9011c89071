#pragma once

#include <algorithm>
#include <cctype>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace gdo::text {

inline std::string_view trim(std::string_view s) noexcept {
    const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

/// Lowercase ASCII, drop ASCII punctuation, collapse whitespace runs to one
/// space, no leading/trailing space. Non-ASCII bytes pass through unchanged.
inline std::string normalize(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (unsigned char c : s) {
        if (c < 0x80 && std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (c < 0x80 && std::ispunct(c)) continue;
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
    }
    return out;
}

/// Whitespace tokens of the raw text (no normalization).
inline std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        const std::size_t start = i;
        while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        if (i > start) out.push_back(s.substr(start, i - start));
    }
    return out;
}

inline std::size_t token_count(std::string_view s) { return split_ws(s).size(); }

inline std::vector<std::string> tokens(std::string_view s) {
    const std::string norm = normalize(s);
    std::vector<std::string> out;
    for (auto t : split_ws(norm)) out.emplace_back(t);
    return out;
}

inline std::set<std::string> token_set(std::string_view s) {
    auto t = tokens(s);
    return {t.begin(), t.end()};
}

/// |A ∩ B| / |A ∪ B|; two empty sets count as identical.
inline double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 1.0;
    std::size_t inter = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia < *ib) {
            ++ia;
        } else if (*ib < *ia) {
            ++ib;
        } else {
            ++inter;
            ++ia;
            ++ib;
        }
    }
    const std::size_t uni = a.size() + b.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

/// Split on anything that is not an ASCII letter or digit; used for media refs.
inline std::vector<std::string> alnum_words(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : s) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

inline bool contains_word(const std::vector<std::string>& toks, std::string_view w) {
    return std::find(toks.begin(), toks.end(), w) != toks.end();
}

} // namespace gdo::text
