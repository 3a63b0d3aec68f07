#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "ham/dataset_io.hpp"
#include "ham/error.hpp"
#include "ham/rng.hpp"

namespace ham {

inline char ascii_lower(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

inline std::string ascii_lower_copy(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), ascii_lower);
    return out;
}

inline bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

// Ordered substitution table mapping identity-revealing words or phrases to
// generic ones. Matching is case-insensitive, whole-word, longest pattern
// first. Replacements may not contain any pattern as a whole word, which
// keeps repeated masking a fixed point.
class MaskLexicon {
public:
    struct Entry {
        std::string pattern;      // lowercase
        std::string replacement;
    };

    MaskLexicon() = default;

    explicit MaskLexicon(std::vector<Entry> entries) : entries_(std::move(entries)) {
        for (auto& e : entries_) {
            e.pattern = ascii_lower_copy(e.pattern);
            if (e.pattern.empty()) throw ValidationError("lexicon pattern is empty");
        }
        std::sort(entries_.begin(), entries_.end(), [](const Entry& a, const Entry& b) {
            if (a.pattern.size() != b.pattern.size())
                return a.pattern.size() > b.pattern.size();
            return a.pattern < b.pattern;
        });
        std::unordered_set<std::string> seen;
        for (const auto& e : entries_)
            if (!seen.insert(e.pattern).second)
                throw ValidationError("duplicate lexicon pattern: " + e.pattern);
        for (const auto& e : entries_)
            for (const auto& other : entries_)
                if (contains_word(e.replacement, other.pattern))
                    throw ValidationError("replacement '" + e.replacement +
                                          "' contains pattern '" + other.pattern + "'");
    }

    const std::vector<Entry>& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }

    // Whole-word, case-insensitive occurrence test.
    static bool contains_word(std::string_view text, std::string_view pattern) {
        if (pattern.empty() || pattern.size() > text.size()) return false;
        for (size_t i = 0; i + pattern.size() <= text.size(); ++i) {
            if (!matches_at(text, i, pattern)) continue;
            const bool left_ok = i == 0 || !is_word_char(text[i - 1]);
            const size_t end = i + pattern.size();
            const bool right_ok = end == text.size() || !is_word_char(text[end]);
            if (left_ok && right_ok) return true;
        }
        return false;
    }

    static bool matches_at(std::string_view text, size_t pos, std::string_view pattern) {
        if (pos + pattern.size() > text.size()) return false;
        for (size_t k = 0; k < pattern.size(); ++k)
            if (ascii_lower(text[pos + k]) != pattern[k]) return false;
        return true;
    }

private:
    std::vector<Entry> entries_;
};

// Replaces every whole-word occurrence of every lexicon pattern, longest
// pattern first at each position. Text outside the matches is preserved
// verbatim, whitespace included. Masking twice equals masking once.
inline std::string mask_caption(std::string_view text, const MaskLexicon& lexicon) {
    if (lexicon.empty()) return std::string(text);
    std::string out;
    out.reserve(text.size());
    size_t pos = 0;
    while (pos < text.size()) {
        const bool left_ok = pos == 0 || !is_word_char(text[pos - 1]);
        if (left_ok && is_word_char(text[pos])) {
            const MaskLexicon::Entry* hit = nullptr;
            for (const auto& e : lexicon.entries()) {
                if (!MaskLexicon::matches_at(text, pos, e.pattern)) continue;
                const size_t end = pos + e.pattern.size();
                if (end == text.size() || !is_word_char(text[end])) {
                    hit = &e;
                    break;  // entries are longest-first
                }
            }
            if (hit != nullptr) {
                out += hit->replacement;
                pos += hit->pattern.size();
                continue;
            }
        }
        out += text[pos];
        ++pos;
    }
    return out;
}

// Lexicon file format: TSV with two columns (pattern, replacement); blank
// lines and lines starting with '#' are skipped.
inline MaskLexicon read_lexicon(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open lexicon file: " + path);
    std::vector<MaskLexicon::Entry> entries;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const size_t tab = line.find('\t');
        if (tab == std::string::npos)
            throw ParseError("lexicon line " + std::to_string(line_no) +
                             " is missing a tab separator");
        std::string pattern = trimmed(line.substr(0, tab));
        std::string replacement = trimmed(line.substr(tab + 1));
        if (pattern.empty() || replacement.empty())
            throw ParseError("lexicon line " + std::to_string(line_no) +
                             " has an empty column");
        entries.push_back({std::move(pattern), std::move(replacement)});
    }
    return MaskLexicon(std::move(entries));
}

// Feature-hashing text embedder: signed hashes of character n-grams of the
// lowercased input, accumulated into d buckets, optionally L2-normalized.
// Deterministic in (text, config); no model weights involved.
struct EmbedderConfig {
    size_t dims = 512;
    size_t ngram_min = 3;
    size_t ngram_max = 5;
    uint64_t seed = 1;
    bool normalize = true;

    void validate() const {
        if (dims < 8) throw ArgumentError("embedder dims must be >= 8");
        if (ngram_min < 1 || ngram_min > ngram_max || ngram_max > 8)
            throw ArgumentError("embedder n-gram range must satisfy 1 <= min <= max <= 8");
    }
};

inline std::vector<float> embed_text(std::string_view text, const EmbedderConfig& cfg) {
    cfg.validate();
    const std::string lowered = ascii_lower_copy(text);
    std::vector<double> acc(cfg.dims, 0.0);
    for (size_t n = cfg.ngram_min; n <= cfg.ngram_max; ++n) {
        if (lowered.size() < n) break;
        for (size_t i = 0; i + n <= lowered.size(); ++i) {
            const uint64_t h = hash64(std::string_view(lowered).substr(i, n), cfg.seed);
            const size_t idx = static_cast<size_t>((h >> 1) % cfg.dims);
            acc[idx] += (h & 1u) ? 1.0 : -1.0;
        }
    }
    double norm_sq = 0.0;
    for (double v : acc) norm_sq += v * v;
    std::vector<float> out(cfg.dims);
    if (cfg.normalize && norm_sq > 0.0) {
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (size_t j = 0; j < cfg.dims; ++j) out[j] = static_cast<float>(acc[j] * inv);
    } else {
        for (size_t j = 0; j < cfg.dims; ++j) out[j] = static_cast<float>(acc[j]);
    }
    return out;
}

// Row i of the result embeds the masked text of records[i].
inline FeatureMatrix extract_styles(const std::vector<CaptionRecord>& records,
                                    const MaskLexicon& lexicon,
                                    const EmbedderConfig& cfg) {
    if (records.empty()) throw ArgumentError("extract_styles needs at least one record");
    cfg.validate();
    FeatureMatrix features(records.size(), cfg.dims);
    for (size_t i = 0; i < records.size(); ++i) {
        const std::vector<float> v = embed_text(mask_caption(records[i].text, lexicon), cfg);
        std::copy(v.begin(), v.end(), features.row(i));
    }
    return features;
}

}  // namespace ham
