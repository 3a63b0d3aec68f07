#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <string>

#include "ham/error.hpp"
#include "ham/style.hpp"

namespace ham {

// Everything the CLI subcommands share. Field defaults are the pipeline's
// published operating point; config files and flags override per run.
struct PipelineConfig {
    // [paths]
    std::string captions;
    std::string lexicon;
    std::string features;
    std::string centers;
    std::string assignment;
    std::string output;

    // [hyperparams]
    long k1 = 1000;          // exclusive clusters
    long k2 = 1000;          // non-exclusive prototypes
    long q = 200;            // captions per prototype
    double beta = 7.0;       // prototype sampling half-width in sigmas
    long m = 10;             // prompt tokens per style
    double tau = 0.02;       // similarity temperature
    double epsilon = 1e-8;   // KL denominator guard
    double eps_dbscan = 1.5; // density radius
    long min_pts = 3;        // density threshold
    uint64_t seed = 1;

    // [embedder]
    EmbedderConfig embedder;
};

namespace detail {

inline std::string trim_ws(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// Raw value token from the config grammar; typed accessors throw ParseError
// with the source line when the token does not fit.
struct ConfigValue {
    std::string raw;
    bool quoted = false;
    size_t line = 0;

    std::string as_string() const {
        if (!quoted)
            throw ParseError("config line " + std::to_string(line) +
                             ": expected a quoted string");
        return raw;
    }
    long as_int() const {
        if (quoted) bad("an integer");
        try {
            size_t used = 0;
            const long v = std::stol(raw, &used);
            if (used != raw.size()) bad("an integer");
            return v;
        } catch (const std::exception&) {
            bad("an integer");
        }
        return 0;
    }
    double as_float() const {
        if (quoted) bad("a number");
        try {
            size_t used = 0;
            const double v = std::stod(raw, &used);
            if (used != raw.size()) bad("a number");
            return v;
        } catch (const std::exception&) {
            bad("a number");
        }
        return 0.0;
    }
    bool as_bool() const {
        if (!quoted && raw == "true") return true;
        if (!quoted && raw == "false") return false;
        bad("true or false");
        return false;
    }
    [[noreturn]] void bad(const std::string& want) const {
        throw ParseError("config line " + std::to_string(line) + ": expected " +
                         want + ", got '" + raw + "'");
    }
};

}  // namespace detail

// Minimal TOML-shaped config reader: [section] headers, key = value pairs,
// '#' comments. Values are quoted strings, integers, floats, or booleans.
// Unknown sections or keys are errors so typos never pass silently.
inline void apply_config_file(PipelineConfig& cfg, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file: " + path);

    using Setter = std::function<void(PipelineConfig&, const detail::ConfigValue&)>;
    static const std::map<std::string, Setter> setters = {
        {"paths.captions", [](PipelineConfig& c, const detail::ConfigValue& v) { c.captions = v.as_string(); }},
        {"paths.lexicon", [](PipelineConfig& c, const detail::ConfigValue& v) { c.lexicon = v.as_string(); }},
        {"paths.features", [](PipelineConfig& c, const detail::ConfigValue& v) { c.features = v.as_string(); }},
        {"paths.centers", [](PipelineConfig& c, const detail::ConfigValue& v) { c.centers = v.as_string(); }},
        {"paths.assignment", [](PipelineConfig& c, const detail::ConfigValue& v) { c.assignment = v.as_string(); }},
        {"paths.output", [](PipelineConfig& c, const detail::ConfigValue& v) { c.output = v.as_string(); }},
        {"hyperparams.k1", [](PipelineConfig& c, const detail::ConfigValue& v) { c.k1 = v.as_int(); }},
        {"hyperparams.k2", [](PipelineConfig& c, const detail::ConfigValue& v) { c.k2 = v.as_int(); }},
        {"hyperparams.q", [](PipelineConfig& c, const detail::ConfigValue& v) { c.q = v.as_int(); }},
        {"hyperparams.beta", [](PipelineConfig& c, const detail::ConfigValue& v) { c.beta = v.as_float(); }},
        {"hyperparams.m", [](PipelineConfig& c, const detail::ConfigValue& v) { c.m = v.as_int(); }},
        {"hyperparams.tau", [](PipelineConfig& c, const detail::ConfigValue& v) { c.tau = v.as_float(); }},
        {"hyperparams.epsilon", [](PipelineConfig& c, const detail::ConfigValue& v) { c.epsilon = v.as_float(); }},
        {"hyperparams.eps_dbscan", [](PipelineConfig& c, const detail::ConfigValue& v) { c.eps_dbscan = v.as_float(); }},
        {"hyperparams.min_pts", [](PipelineConfig& c, const detail::ConfigValue& v) { c.min_pts = v.as_int(); }},
        {"hyperparams.seed", [](PipelineConfig& c, const detail::ConfigValue& v) { c.seed = static_cast<uint64_t>(v.as_int()); }},
        {"embedder.dims", [](PipelineConfig& c, const detail::ConfigValue& v) { c.embedder.dims = static_cast<size_t>(v.as_int()); }},
        {"embedder.ngram_min", [](PipelineConfig& c, const detail::ConfigValue& v) { c.embedder.ngram_min = static_cast<size_t>(v.as_int()); }},
        {"embedder.ngram_max", [](PipelineConfig& c, const detail::ConfigValue& v) { c.embedder.ngram_max = static_cast<size_t>(v.as_int()); }},
        {"embedder.seed", [](PipelineConfig& c, const detail::ConfigValue& v) { c.embedder.seed = static_cast<uint64_t>(v.as_int()); }},
        {"embedder.normalize", [](PipelineConfig& c, const detail::ConfigValue& v) { c.embedder.normalize = v.as_bool(); }},
    };

    std::string section;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const size_t hash = line.find('#');
        std::string body = detail::trim_ws(hash == std::string::npos ? line : line.substr(0, hash));
        if (body.empty()) continue;

        if (body.front() == '[') {
            if (body.back() != ']')
                throw ParseError("config line " + std::to_string(line_no) +
                                 ": unterminated section header");
            section = detail::trim_ws(body.substr(1, body.size() - 2));
            if (section.empty())
                throw ParseError("config line " + std::to_string(line_no) +
                                 ": empty section name");
            continue;
        }

        const size_t eq = body.find('=');
        if (eq == std::string::npos)
            throw ParseError("config line " + std::to_string(line_no) +
                             ": expected key = value");
        const std::string key = detail::trim_ws(body.substr(0, eq));
        std::string value = detail::trim_ws(body.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ParseError("config line " + std::to_string(line_no) +
                             ": expected key = value");
        if (section.empty())
            throw ParseError("config line " + std::to_string(line_no) +
                             ": key outside any [section]");

        detail::ConfigValue cv;
        cv.line = line_no;
        if (value.front() == '"') {
            if (value.size() < 2 || value.back() != '"')
                throw ParseError("config line " + std::to_string(line_no) +
                                 ": unterminated string");
            cv.raw = value.substr(1, value.size() - 2);
            cv.quoted = true;
        } else {
            cv.raw = value;
        }

        const auto it = setters.find(section + "." + key);
        if (it == setters.end())
            throw ParseError("config line " + std::to_string(line_no) +
                             ": unknown key '" + section + "." + key + "'");
        it->second(cfg, cv);
    }
}

}  // namespace ham
