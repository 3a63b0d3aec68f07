#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "ham/dataset_io.hpp"
#include "ham/rng.hpp"

namespace testutil {

// Unique scratch directory removed on scope exit.
class TempDir {
public:
    TempDir() {
        static std::atomic<uint64_t> counter{0};
        const auto base = std::filesystem::temp_directory_path();
        path_ = base / ("ham_test_" + std::to_string(::getpid()) + "_" +
                        std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return (path_ / name).string(); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline std::string random_word(ham::Rng& rng, size_t min_len, size_t max_len,
                               const std::string& alphabet) {
    const size_t len = min_len + rng.bounded(max_len - min_len + 1);
    std::string w;
    for (size_t i = 0; i < len; ++i) w += alphabet[rng.bounded(alphabet.size())];
    return w;
}

inline std::string random_text(ham::Rng& rng, size_t min_words, size_t max_words,
                               const std::string& alphabet = "abcdefghijklmnop") {
    const size_t words = min_words + rng.bounded(max_words - min_words + 1);
    std::string text;
    for (size_t i = 0; i < words; ++i) {
        if (i) text += ' ';
        text += random_word(rng, 1, 8, alphabet);
    }
    return text;
}

inline std::vector<ham::CaptionRecord> random_records(ham::Rng& rng, size_t n) {
    std::vector<ham::CaptionRecord> out;
    for (size_t i = 0; i < n; ++i) {
        ham::CaptionRecord rec;
        rec.id = "r" + std::to_string(i) + "_" + random_word(rng, 1, 6, "abcdef");
        rec.image_id = "img" + std::to_string(rng.bounded(n + 1));
        rec.text = random_text(rng, 1, 12);
        const size_t labels = rng.bounded(4);
        for (size_t l = 0; l < labels; ++l)
            rec.style_labels.push_back(static_cast<int>(rng.bounded(50)));
        out.push_back(std::move(rec));
    }
    return out;
}

inline ham::FeatureMatrix random_matrix(ham::Rng& rng, size_t n, size_t d,
                                        double lo = -1.0, double hi = 1.0) {
    ham::FeatureMatrix m(n, d);
    for (auto& v : m.data) v = static_cast<float>(rng.uniform(lo, hi));
    return m;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
}

}  // namespace testutil
