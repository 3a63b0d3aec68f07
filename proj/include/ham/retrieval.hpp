#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "ham/error.hpp"

namespace ham {

// Query-by-gallery score matrix plus binary relevance judgements.
struct EvalSet {
    size_t queries = 0;
    size_t gallery = 0;
    std::vector<float> scores;       // Q x G, higher is better
    std::vector<uint8_t> relevance;  // Q x G, 1 = relevant

    void validate() const {
        if (queries < 1 || gallery < 1)
            throw ArgumentError("eval set needs at least one query and one gallery item");
        if (scores.size() != queries * gallery)
            throw ArgumentError("score buffer size does not match queries x gallery");
        if (relevance.size() != queries * gallery)
            throw ArgumentError("relevance buffer size does not match queries x gallery");
        for (float s : scores)
            if (!std::isfinite(s)) throw ValidationError("non-finite score");
        for (size_t i = 0; i < queries; ++i) {
            size_t hits = 0;
            for (size_t j = 0; j < gallery; ++j) hits += relevance[i * gallery + j];
            if (hits == 0)
                throw ValidationError("query " + std::to_string(i) +
                                      " has no relevant gallery item");
        }
    }
};

namespace detail {

// Gallery order for one query: descending score, index ascending on ties.
inline std::vector<size_t> ranking_for(const EvalSet& eval, size_t query) {
    std::vector<size_t> order(eval.gallery);
    std::iota(order.begin(), order.end(), size_t{0});
    const float* row = eval.scores.data() + query * eval.gallery;
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return row[a] > row[b]; });
    return order;
}

}  // namespace detail

// Fraction of queries whose top-k ranked gallery items contain at least one
// relevant item.
inline double rank_k(const EvalSet& eval, size_t k) {
    eval.validate();
    if (k < 1 || k > eval.gallery)
        throw ArgumentError("k must be in [1, gallery size]");
    size_t hit_queries = 0;
    for (size_t i = 0; i < eval.queries; ++i) {
        const std::vector<size_t> order = detail::ranking_for(eval, i);
        for (size_t r = 0; r < k; ++r) {
            if (eval.relevance[i * eval.gallery + order[r]]) {
                ++hit_queries;
                break;
            }
        }
    }
    return static_cast<double>(hit_queries) / static_cast<double>(eval.queries);
}

// Interpolation-free mean average precision: AP averages precision@rank over
// the ranks where relevant items appear, divided by the relevant count.
inline double mean_ap(const EvalSet& eval) {
    eval.validate();
    double total = 0.0;
    for (size_t i = 0; i < eval.queries; ++i) {
        const std::vector<size_t> order = detail::ranking_for(eval, i);
        size_t hits = 0;
        double ap = 0.0;
        for (size_t r = 0; r < eval.gallery; ++r) {
            if (eval.relevance[i * eval.gallery + order[r]]) {
                ++hits;
                ap += static_cast<double>(hits) / static_cast<double>(r + 1);
            }
        }
        total += ap / static_cast<double>(hits);
    }
    return total / static_cast<double>(eval.queries);
}

// Relevance JSONL: one {"query": i, "relevant": [gallery indices]} object per
// query, every query listed exactly once.
inline std::vector<uint8_t> read_relevance(const std::string& path, size_t queries,
                                           size_t gallery) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open relevance file: " + path);
    std::vector<uint8_t> rel(queries * gallery, 0);
    std::vector<uint8_t> seen(queries, 0);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("relevance line " + std::to_string(line_no) + ": " +
                             e.what());
        }
        if (!j.contains("query") || !j.contains("relevant"))
            throw ParseError("relevance line " + std::to_string(line_no) +
                             ": missing query or relevant key");
        const auto qv = j.at("query").get<long long>();
        if (qv < 0 || static_cast<size_t>(qv) >= queries)
            throw ValidationError("relevance line " + std::to_string(line_no) +
                                  ": query index out of range");
        const size_t q = static_cast<size_t>(qv);
        if (seen[q])
            throw ValidationError("relevance line " + std::to_string(line_no) +
                                  ": duplicate query " + std::to_string(q));
        seen[q] = 1;
        for (const auto& item : j.at("relevant")) {
            const auto gv = item.get<long long>();
            if (gv < 0 || static_cast<size_t>(gv) >= gallery)
                throw ValidationError("relevance line " + std::to_string(line_no) +
                                      ": gallery index out of range");
            rel[q * gallery + static_cast<size_t>(gv)] = 1;
        }
    }
    for (size_t q = 0; q < queries; ++q)
        if (!seen[q])
            throw ValidationError("relevance file is missing query " +
                                  std::to_string(q));
    return rel;
}

inline void write_relevance(const std::string& path,
                            const std::vector<uint8_t>& rel, size_t queries,
                            size_t gallery) {
    if (rel.size() != queries * gallery)
        throw ArgumentError("relevance buffer size does not match queries x gallery");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open relevance file for writing: " + path);
    for (size_t q = 0; q < queries; ++q) {
        nlohmann::json j;
        j["query"] = q;
        auto arr = nlohmann::json::array();
        for (size_t g = 0; g < gallery; ++g)
            if (rel[q * gallery + g]) arr.push_back(g);
        j["relevant"] = arr;
        out << j.dump() << '\n';
    }
    if (!out) throw IoError("failed writing relevance file: " + path);
}

// Standard metric bundle; ks above the gallery size are clamped.
inline nlohmann::json metrics_report(const EvalSet& eval) {
    nlohmann::json j;
    j["map"] = mean_ap(eval);
    j["rank1"] = rank_k(eval, std::min<size_t>(1, eval.gallery));
    j["rank5"] = rank_k(eval, std::min<size_t>(5, eval.gallery));
    j["rank10"] = rank_k(eval, std::min<size_t>(10, eval.gallery));
    return j;
}

}  // namespace ham
