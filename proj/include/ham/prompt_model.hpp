#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ham/dataset_io.hpp"
#include "ham/error.hpp"
#include "ham/rng.hpp"

namespace ham {

// Minimal autoregressive model for exercising style-prompt learning: frozen
// token embeddings and decoder, a trainable prompt bank with one M x D slice
// per style, and a trainable adaptor that projects a context vector into the
// embedding space. The hidden state at step m is
//   h_m = tanh(adaptor^T context + meanpool(prompt[s]) + E[y_{m-1}])
// and logits are decoder^T h_m.
struct ToyPromptModel {
    size_t vocab = 0;          // V
    size_t embed_dim = 0;      // D
    size_t prompt_tokens = 0;  // M
    size_t prompt_count = 0;   // K
    size_t context_dim = 0;    // F
    uint64_t seed = 0;

    std::vector<double> token_embeddings;  // V x D, frozen
    std::vector<double> output_weights;    // D x V, frozen
    std::vector<double> adaptor;           // F x D, trainable
    std::vector<double> prompt_bank;       // K x M x D, trainable

    // Frozen weights from U(-0.5, 0.5), trainable ones from U(-0.1, 0.1),
    // drawn in declaration order from a single generator.
    static ToyPromptModel init(size_t vocab, size_t embed_dim, size_t prompt_tokens,
                               size_t prompt_count, size_t context_dim,
                               uint64_t seed) {
        if (vocab < 2) throw ArgumentError("vocab must be >= 2");
        if (embed_dim < 1 || prompt_tokens < 1 || prompt_count < 1 || context_dim < 1)
            throw ArgumentError("model dimensions must be >= 1");
        ToyPromptModel m;
        m.vocab = vocab;
        m.embed_dim = embed_dim;
        m.prompt_tokens = prompt_tokens;
        m.prompt_count = prompt_count;
        m.context_dim = context_dim;
        m.seed = seed;
        Rng rng(seed);
        auto fill = [&rng](std::vector<double>& v, size_t count, double half_range) {
            v.resize(count);
            for (auto& x : v) x = rng.uniform(-half_range, half_range);
        };
        fill(m.token_embeddings, vocab * embed_dim, 0.5);
        fill(m.output_weights, embed_dim * vocab, 0.5);
        fill(m.adaptor, context_dim * embed_dim, 0.1);
        fill(m.prompt_bank, prompt_count * prompt_tokens * embed_dim, 0.1);
        return m;
    }

    const double* prompt_slice(size_t style) const {
        return prompt_bank.data() + style * prompt_tokens * embed_dim;
    }
    double* prompt_slice(size_t style) {
        return prompt_bank.data() + style * prompt_tokens * embed_dim;
    }
};

struct TrainSample {
    std::vector<double> context;  // F entries
    std::vector<int> tokens;      // length >= 2, ids < V
    int style = 0;
};

namespace detail {

inline void check_sample(const ToyPromptModel& m, const TrainSample& s) {
    if (s.tokens.size() < 2) throw ArgumentError("sample needs at least 2 tokens");
    for (int t : s.tokens)
        if (t < 0 || static_cast<size_t>(t) >= m.vocab)
            throw ArgumentError("token id " + std::to_string(t) + " out of range");
    if (s.context.size() != m.context_dim)
        throw ArgumentError("context dimension mismatch");
    if (s.style < 0 || static_cast<size_t>(s.style) >= m.prompt_count)
        throw ArgumentError("style label " + std::to_string(s.style) + " out of range");
}

// adaptor^T context + meanpool(prompt[s]); shared across positions.
inline std::vector<double> fused_base(const ToyPromptModel& m, const TrainSample& s) {
    const size_t d = m.embed_dim;
    std::vector<double> base(d, 0.0);
    for (size_t f = 0; f < m.context_dim; ++f) {
        const double c = s.context[f];
        const double* arow = m.adaptor.data() + f * d;
        for (size_t j = 0; j < d; ++j) base[j] += c * arow[j];
    }
    const double* prompt = m.prompt_slice(static_cast<size_t>(s.style));
    const double inv_m = 1.0 / static_cast<double>(m.prompt_tokens);
    for (size_t t = 0; t < m.prompt_tokens; ++t)
        for (size_t j = 0; j < d; ++j) base[j] += prompt[t * d + j] * inv_m;
    return base;
}

inline double log_sum_exp(const std::vector<double>& u) {
    const double hi = *std::max_element(u.begin(), u.end());
    double acc = 0.0;
    for (double x : u) acc += std::exp(x - hi);
    return hi + std::log(acc);
}

}  // namespace detail

// Mean negative log-likelihood over positions m >= 1.
inline double forward_logprob(const ToyPromptModel& model, const TrainSample& sample) {
    detail::check_sample(model, sample);
    const size_t d = model.embed_dim;
    const size_t v = model.vocab;
    const size_t len = sample.tokens.size();
    const std::vector<double> base = detail::fused_base(model, sample);

    std::vector<double> logits(v);
    double loss = 0.0;
    for (size_t m = 1; m < len; ++m) {
        const double* prev = model.token_embeddings.data() +
                             static_cast<size_t>(sample.tokens[m - 1]) * d;
        std::vector<double> h(d);
        for (size_t j = 0; j < d; ++j) h[j] = std::tanh(base[j] + prev[j]);
        for (size_t w = 0; w < v; ++w) {
            double acc = 0.0;
            for (size_t j = 0; j < d; ++j) acc += model.output_weights[j * v + w] * h[j];
            logits[w] = acc;
        }
        loss += detail::log_sum_exp(logits) - logits[static_cast<size_t>(sample.tokens[m])];
    }
    return loss / static_cast<double>(len - 1);
}

// Gradients of the loss for one sample. Only the sample's own prompt slice
// and the adaptor are touched; every other prompt slice has an exactly zero
// gradient and is never materialized.
struct PromptGrads {
    int style = 0;
    std::vector<double> prompt;   // M x D
    std::vector<double> adaptor;  // F x D
    double loss = 0.0;
};

inline PromptGrads backward(const ToyPromptModel& model, const TrainSample& sample) {
    detail::check_sample(model, sample);
    const size_t d = model.embed_dim;
    const size_t v = model.vocab;
    const size_t len = sample.tokens.size();
    const std::vector<double> base = detail::fused_base(model, sample);
    const double scale = 1.0 / static_cast<double>(len - 1);

    std::vector<double> logits(v), probs(v), h(d);
    std::vector<double> dz_sum(d, 0.0);
    double loss = 0.0;
    for (size_t m = 1; m < len; ++m) {
        const double* prev = model.token_embeddings.data() +
                             static_cast<size_t>(sample.tokens[m - 1]) * d;
        for (size_t j = 0; j < d; ++j) h[j] = std::tanh(base[j] + prev[j]);
        for (size_t w = 0; w < v; ++w) {
            double acc = 0.0;
            for (size_t j = 0; j < d; ++j) acc += model.output_weights[j * v + w] * h[j];
            logits[w] = acc;
        }
        const double lse = detail::log_sum_exp(logits);
        loss += lse - logits[static_cast<size_t>(sample.tokens[m])];
        for (size_t w = 0; w < v; ++w) probs[w] = std::exp(logits[w] - lse);
        probs[static_cast<size_t>(sample.tokens[m])] -= 1.0;
        for (size_t j = 0; j < d; ++j) {
            double dh = 0.0;
            const double* wrow = model.output_weights.data() + j * v;
            for (size_t w = 0; w < v; ++w) dh += wrow[w] * probs[w];
            dz_sum[j] += dh * (1.0 - h[j] * h[j]) * scale;
        }
    }

    PromptGrads g;
    g.style = sample.style;
    g.loss = loss * scale;
    g.prompt.resize(model.prompt_tokens * d);
    const double inv_m = 1.0 / static_cast<double>(model.prompt_tokens);
    for (size_t t = 0; t < model.prompt_tokens; ++t)
        for (size_t j = 0; j < d; ++j) g.prompt[t * d + j] = dz_sum[j] * inv_m;
    g.adaptor.resize(model.context_dim * d);
    for (size_t f = 0; f < model.context_dim; ++f)
        for (size_t j = 0; j < d; ++j)
            g.adaptor[f * d + j] = sample.context[f] * dz_sum[j];
    return g;
}

// Plain SGD over a seeded shuffle. A step on a sample labeled s mutates only
// prompt slice s and the adaptor. Epoch means are accumulated in sample
// index order so the trace does not depend on the visit order.
inline std::vector<double> train(ToyPromptModel& model,
                                 const std::vector<TrainSample>& samples, double lr,
                                 size_t epochs, uint64_t seed) {
    if (samples.empty()) throw ArgumentError("training set is empty");
    for (const auto& s : samples) detail::check_sample(model, s);

    Rng rng(seed);
    const size_t d = model.embed_dim;
    std::vector<double> trace;
    std::vector<double> losses(samples.size());
    for (size_t epoch = 0; epoch < epochs; ++epoch) {
        const std::vector<size_t> order = shuffled_indices(samples.size(), rng);
        for (size_t idx : order) {
            const TrainSample& s = samples[idx];
            PromptGrads g = backward(model, s);
            if (!std::isfinite(g.loss))
                throw NumericError("non-finite loss at epoch " + std::to_string(epoch) +
                                   ", sample " + std::to_string(idx));
            losses[idx] = g.loss;
            double* prompt = model.prompt_slice(static_cast<size_t>(s.style));
            for (size_t k = 0; k < g.prompt.size(); ++k) prompt[k] -= lr * g.prompt[k];
            for (size_t k = 0; k < g.adaptor.size(); ++k)
                model.adaptor[k] -= lr * g.adaptor[k];
            for (size_t k = 0; k < g.prompt.size(); ++k)
                if (!std::isfinite(prompt[k]))
                    throw NumericError("non-finite prompt parameter at epoch " +
                                       std::to_string(epoch));
            for (size_t f = 0; f < model.context_dim * d; ++f)
                if (!std::isfinite(model.adaptor[f]))
                    throw NumericError("non-finite adaptor parameter at epoch " +
                                       std::to_string(epoch));
        }
        double sum = 0.0;
        for (double l : losses) sum += l;
        trace.push_back(sum / static_cast<double>(samples.size()));
    }
    return trace;
}

inline double mean_loss(const ToyPromptModel& model,
                        const std::vector<TrainSample>& samples) {
    if (samples.empty()) throw ArgumentError("no samples");
    double sum = 0.0;
    for (const auto& s : samples) sum += forward_logprob(model, s);
    return sum / static_cast<double>(samples.size());
}

// Word tokenizer for driving the toy model from captions: token 0 is a
// start-of-sequence marker, words hash into [1, vocab).
inline std::vector<int> tokenize_words(const std::string& text, size_t vocab) {
    if (vocab < 2) throw ArgumentError("vocab must be >= 2");
    constexpr uint64_t kTokenHashSeed = 0x746f6b656e7331ull;
    std::vector<int> tokens{0};
    size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) {
            const uint64_t h = hash64(std::string_view(text).substr(start, i - start),
                                      kTokenHashSeed);
            tokens.push_back(1 + static_cast<int>(h % (vocab - 1)));
        }
    }
    return tokens;
}

// --- Checkpoints -----------------------------------------------------------
//
// One SFM1 file per tensor (f32) plus manifest.json with the shape fields.
// The prompt bank is stored as a (K*M) x D matrix.

namespace detail {

inline FeatureMatrix to_matrix(const std::vector<double>& v, size_t rows, size_t cols) {
    FeatureMatrix m(rows, cols);
    for (size_t k = 0; k < v.size(); ++k) m.data[k] = static_cast<float>(v[k]);
    return m;
}

inline std::vector<double> to_doubles(const FeatureMatrix& m) {
    std::vector<double> v(m.data.size());
    for (size_t k = 0; k < v.size(); ++k) v[k] = static_cast<double>(m.data[k]);
    return v;
}

}  // namespace detail

inline void save_checkpoint(const ToyPromptModel& m, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path base(dir);
    nlohmann::json manifest{{"vocab", m.vocab},          {"embed_dim", m.embed_dim},
                            {"prompt_tokens", m.prompt_tokens},
                            {"prompt_count", m.prompt_count},
                            {"context_dim", m.context_dim},
                            {"seed", m.seed}};
    std::ofstream mf(base / "manifest.json", std::ios::binary | std::ios::trunc);
    if (!mf) throw IoError("cannot write manifest in " + dir);
    mf << manifest.dump(2) << '\n';
    write_matrix(detail::to_matrix(m.token_embeddings, m.vocab, m.embed_dim),
                 (base / "token_embeddings.sfm").string());
    write_matrix(detail::to_matrix(m.output_weights, m.embed_dim, m.vocab),
                 (base / "output_weights.sfm").string());
    write_matrix(detail::to_matrix(m.adaptor, m.context_dim, m.embed_dim),
                 (base / "adaptor.sfm").string());
    write_matrix(detail::to_matrix(m.prompt_bank, m.prompt_count * m.prompt_tokens,
                                   m.embed_dim),
                 (base / "prompt_bank.sfm").string());
}

inline ToyPromptModel load_checkpoint(const std::string& dir) {
    const std::filesystem::path base(dir);
    std::ifstream mf(base / "manifest.json", std::ios::binary);
    if (!mf) throw IoError("cannot open manifest in " + dir);
    nlohmann::json manifest;
    try {
        mf >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed checkpoint manifest: ") + e.what());
    }
    ToyPromptModel m;
    m.vocab = manifest.at("vocab").get<size_t>();
    m.embed_dim = manifest.at("embed_dim").get<size_t>();
    m.prompt_tokens = manifest.at("prompt_tokens").get<size_t>();
    m.prompt_count = manifest.at("prompt_count").get<size_t>();
    m.context_dim = manifest.at("context_dim").get<size_t>();
    m.seed = manifest.at("seed").get<uint64_t>();

    auto load = [&](const char* name, size_t rows, size_t cols) {
        const FeatureMatrix mat = read_matrix((base / name).string());
        if (mat.rows != rows || mat.cols != cols)
            throw ValidationError(std::string("checkpoint tensor ") + name +
                                  " has unexpected shape");
        return detail::to_doubles(mat);
    };
    m.token_embeddings = load("token_embeddings.sfm", m.vocab, m.embed_dim);
    m.output_weights = load("output_weights.sfm", m.embed_dim, m.vocab);
    m.adaptor = load("adaptor.sfm", m.context_dim, m.embed_dim);
    m.prompt_bank =
        load("prompt_bank.sfm", m.prompt_count * m.prompt_tokens, m.embed_dim);
    return m;
}

}  // namespace ham
