#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "ham/error.hpp"

namespace ham {

// One caption with optional identity/image keys and zero or more pseudo
// style labels. `style_labels` may hold several entries when a sample
// belongs to more than one cluster.
struct CaptionRecord {
    std::string id;
    std::string image_id;
    std::string text;
    std::vector<int> style_labels;
};

inline std::string trimmed(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// Dense row-major single-precision matrix. Values must stay finite; the
// binary file format round-trips them bit-exactly.
struct FeatureMatrix {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<float> data;

    FeatureMatrix() = default;
    FeatureMatrix(size_t n, size_t d) : rows(n), cols(d), data(n * d, 0.0f) {
        if (n < 1 || d < 1) throw ArgumentError("matrix dimensions must be >= 1");
    }

    float& at(size_t i, size_t j) { return data[i * cols + j]; }
    float at(size_t i, size_t j) const { return data[i * cols + j]; }
    const float* row(size_t i) const { return data.data() + i * cols; }
    float* row(size_t i) { return data.data() + i * cols; }
};

// --- JSONL caption files -------------------------------------------------
//
// One JSON object per line with keys id, image_id, text, style_labels.
// The writer emits keys in sorted order, which is the normalization the
// read/write round-trip is defined against.

inline nlohmann::json caption_to_json(const CaptionRecord& rec) {
    return nlohmann::json{{"id", rec.id},
                          {"image_id", rec.image_id},
                          {"text", rec.text},
                          {"style_labels", rec.style_labels}};
}

inline CaptionRecord caption_from_json(const nlohmann::json& j) {
    CaptionRecord rec;
    rec.id = j.at("id").get<std::string>();
    rec.image_id = j.at("image_id").get<std::string>();
    rec.text = j.at("text").get<std::string>();
    rec.style_labels = j.at("style_labels").get<std::vector<int>>();
    return rec;
}

inline std::vector<CaptionRecord> read_captions(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open caption file: " + path);

    std::vector<CaptionRecord> records;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trimmed(line).empty()) continue;
        CaptionRecord rec;
        try {
            rec = caption_from_json(nlohmann::json::parse(line));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("malformed caption at line " + std::to_string(line_no) +
                             ": " + e.what());
        }
        if (trimmed(rec.text).empty())
            throw ValidationError("empty text at line " + std::to_string(line_no));
        for (int lbl : rec.style_labels)
            if (lbl < 0)
                throw ValidationError("negative style label at line " +
                                      std::to_string(line_no));
        if (!seen_ids.insert(rec.id).second)
            throw ValidationError("duplicate id '" + rec.id + "' at line " +
                                  std::to_string(line_no));
        records.push_back(std::move(rec));
    }
    return records;
}

inline void write_captions(const std::vector<CaptionRecord>& records,
                           const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open caption file for writing: " + path);
    for (const auto& rec : records) {
        if (trimmed(rec.text).empty())
            throw ValidationError("record '" + rec.id + "' has empty text");
        out << caption_to_json(rec).dump() << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

// Checks that every attached label fits a declared total cluster count.
inline void validate_labels(const std::vector<CaptionRecord>& records,
                            int total_clusters) {
    for (const auto& rec : records)
        for (int lbl : rec.style_labels)
            if (lbl < 0 || lbl >= total_clusters)
                throw ValidationError("record '" + rec.id + "' has style label " +
                                      std::to_string(lbl) + " outside [0, " +
                                      std::to_string(total_clusters) + ")");
}

// --- SFM1 binary matrix files --------------------------------------------
//
// 16-byte header: magic "SFM1", u32 version=1, u32 rows, u32 cols, then
// rows*cols f32 values row-major. Everything little-endian on disk
// regardless of host byte order.

namespace detail {

inline void put_u32_le(std::string& buf, uint32_t v) {
    buf.push_back(static_cast<char>(v & 0xff));
    buf.push_back(static_cast<char>((v >> 8) & 0xff));
    buf.push_back(static_cast<char>((v >> 16) & 0xff));
    buf.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline uint32_t get_u32_le(const unsigned char* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

}  // namespace detail

inline void write_matrix(const FeatureMatrix& m, const std::string& path) {
    if (m.rows < 1 || m.cols < 1)
        throw ValidationError("matrix must have at least one row and column");
    for (float v : m.data)
        if (!std::isfinite(v))
            throw ValidationError("matrix contains a non-finite value");

    std::string buf;
    buf.reserve(16 + m.data.size() * 4);
    buf += "SFM1";
    detail::put_u32_le(buf, 1u);
    detail::put_u32_le(buf, static_cast<uint32_t>(m.rows));
    detail::put_u32_le(buf, static_cast<uint32_t>(m.cols));
    for (float v : m.data) detail::put_u32_le(buf, std::bit_cast<uint32_t>(v));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open matrix file for writing: " + path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("write failed: " + path);
}

inline FeatureMatrix read_matrix(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open matrix file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string buf = ss.str();

    if (buf.size() < 16) throw IoError("truncated matrix file: " + path);
    if (buf.compare(0, 4, "SFM1") != 0)
        throw ParseError("bad magic in matrix file: " + path);
    const auto* p = reinterpret_cast<const unsigned char*>(buf.data());
    const uint32_t version = detail::get_u32_le(p + 4);
    if (version != 1)
        throw ParseError("unsupported matrix format version " +
                         std::to_string(version));
    const uint32_t rows = detail::get_u32_le(p + 8);
    const uint32_t cols = detail::get_u32_le(p + 12);
    if (rows < 1 || cols < 1)
        throw ParseError("matrix header declares empty matrix");
    const size_t expected = 16 + static_cast<size_t>(rows) * cols * 4;
    if (buf.size() < expected) throw IoError("truncated matrix payload: " + path);
    if (buf.size() > expected)
        throw ParseError("matrix payload larger than header declares: " + path);

    FeatureMatrix m(rows, cols);
    for (size_t k = 0; k < m.data.size(); ++k) {
        const uint32_t bits = detail::get_u32_le(p + 16 + k * 4);
        m.data[k] = std::bit_cast<float>(bits);
        if (!std::isfinite(m.data[k]))
            throw ValidationError("matrix payload contains a non-finite value");
    }
    return m;
}

}  // namespace ham
