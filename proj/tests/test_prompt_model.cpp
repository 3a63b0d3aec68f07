#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "ham/prompt_model.hpp"
#include "ham/rng.hpp"
#include "test_util.hpp"

using namespace ham;
using testutil::TempDir;

namespace {

TrainSample make_sample(Rng& rng, const ToyPromptModel& m, size_t len) {
    TrainSample s;
    s.context.resize(m.context_dim);
    for (auto& c : s.context) c = rng.uniform(-1.0, 1.0);
    s.tokens.resize(len);
    for (auto& t : s.tokens) t = static_cast<int>(rng.bounded(m.vocab));
    s.style = static_cast<int>(rng.bounded(m.prompt_count));
    return s;
}

// Straight-line re-derivation of the per-sample loss, structured differently
// from the library path: explicit prompt mean, per-position softmax without
// max subtraction (safe at these magnitudes).
double forward_oracle(const ToyPromptModel& m, const TrainSample& s) {
    const size_t d = m.embed_dim;
    std::vector<double> pooled(d, 0.0);
    const double* slice = m.prompt_slice(static_cast<size_t>(s.style));
    for (size_t t = 0; t < m.prompt_tokens; ++t)
        for (size_t j = 0; j < d; ++j) pooled[j] += slice[t * d + j];
    for (size_t j = 0; j < d; ++j) pooled[j] /= static_cast<double>(m.prompt_tokens);

    double total = 0.0;
    for (size_t pos = 1; pos < s.tokens.size(); ++pos) {
        std::vector<double> h(d);
        for (size_t j = 0; j < d; ++j) {
            double z = pooled[j];
            for (size_t f = 0; f < m.context_dim; ++f)
                z += s.context[f] * m.adaptor[f * d + j];
            z += m.token_embeddings[static_cast<size_t>(s.tokens[pos - 1]) * d + j];
            h[j] = std::tanh(z);
        }
        double denom = 0.0, target_logit = 0.0;
        for (size_t w = 0; w < m.vocab; ++w) {
            double logit = 0.0;
            for (size_t j = 0; j < d; ++j)
                logit += m.output_weights[j * m.vocab + w] * h[j];
            denom += std::exp(logit);
            if (w == static_cast<size_t>(s.tokens[pos])) target_logit = logit;
        }
        total += std::log(denom) - target_logit;
    }
    return total / static_cast<double>(s.tokens.size() - 1);
}

// Central differences on every trainable entry the sample can reach, with the
// same hybrid denominator as the library gradient checks: relative above unit
// magnitude, absolute below it.
double fd_worst_error(ToyPromptModel model, const TrainSample& s, double step) {
    const PromptGrads g = backward(model, s);
    double worst = 0.0;
    auto probe = [&](double& param, double analytic) {
        const double orig = param;
        param = orig + step;
        const double up = forward_logprob(model, s);
        param = orig - step;
        const double down = forward_logprob(model, s);
        param = orig;
        const double fd = (up - down) / (2.0 * step);
        const double denom = std::max({std::abs(fd), std::abs(analytic), 1.0});
        worst = std::max(worst, std::abs(fd - analytic) / denom);
    };
    const size_t slice_off = static_cast<size_t>(s.style) * model.prompt_tokens *
                             model.embed_dim;
    for (size_t k = 0; k < g.prompt.size(); ++k)
        probe(model.prompt_bank[slice_off + k], g.prompt[k]);
    for (size_t k = 0; k < g.adaptor.size(); ++k)
        probe(model.adaptor[k], g.adaptor[k]);
    return worst;
}

}  // namespace

TEST_CASE("zero decoder weights give the uniform-prediction loss") {
    ToyPromptModel m = ToyPromptModel::init(2, 3, 2, 2, 2, 5);
    std::fill(m.output_weights.begin(), m.output_weights.end(), 0.0);
    TrainSample s;
    s.context = {0.3, -0.2};
    s.tokens = {0, 1};
    s.style = 1;
    CHECK(forward_logprob(m, s) == Catch::Approx(std::log(2.0)).margin(1e-15));

    ToyPromptModel m5 = ToyPromptModel::init(5, 4, 1, 1, 1, 6);
    std::fill(m5.output_weights.begin(), m5.output_weights.end(), 0.0);
    TrainSample s5;
    s5.context = {1.0};
    s5.tokens = {2, 4, 0};
    s5.style = 0;
    CHECK(forward_logprob(m5, s5) == Catch::Approx(std::log(5.0)).margin(1e-12));
}

TEST_CASE("zero decoder weights kill every gradient") {
    ToyPromptModel m = ToyPromptModel::init(6, 4, 3, 2, 3, 7);
    std::fill(m.output_weights.begin(), m.output_weights.end(), 0.0);
    Rng rng(8);
    const TrainSample s = make_sample(rng, m, 5);
    const PromptGrads g = backward(m, s);
    for (double x : g.prompt) CHECK(x == 0.0);
    for (double x : g.adaptor) CHECK(x == 0.0);
    CHECK(g.loss == Catch::Approx(std::log(6.0)).margin(1e-12));
}

TEST_CASE("forward matches an independent re-derivation") {
    Rng rng(9);
    for (int iter = 0; iter < 40; ++iter) {
        const size_t v = 2 + rng.bounded(18);
        const size_t d = 1 + rng.bounded(8);
        const size_t mt = 1 + rng.bounded(4);
        const size_t k = 1 + rng.bounded(5);
        const size_t f = 1 + rng.bounded(6);
        const ToyPromptModel m = ToyPromptModel::init(v, d, mt, k, f, rng.next());
        const TrainSample s = make_sample(rng, m, 2 + rng.bounded(7));
        const double got = forward_logprob(m, s);
        const double want = forward_oracle(m, s);
        REQUIRE(std::abs(got - want) < 1e-10 * std::max(1.0, std::abs(want)));
        REQUIRE(got >= 0.0);  // cross-entropy of a softmax is non-negative
    }
}

TEST_CASE("backward loss agrees with forward") {
    Rng rng(10);
    const ToyPromptModel m = ToyPromptModel::init(9, 5, 2, 3, 4, 11);
    for (int iter = 0; iter < 10; ++iter) {
        const TrainSample s = make_sample(rng, m, 2 + rng.bounded(6));
        const PromptGrads g = backward(m, s);
        CHECK(std::abs(g.loss - forward_logprob(m, s)) < 1e-14);
        CHECK(g.style == s.style);
    }
}

TEST_CASE("analytic gradients match central differences") {
    Rng rng(12);
    for (int iter = 0; iter < 6; ++iter) {
        const size_t v = 2 + rng.bounded(14);
        const size_t d = 1 + rng.bounded(7);
        const size_t mt = 1 + rng.bounded(4);
        const size_t k = 1 + rng.bounded(4);
        const size_t f = 1 + rng.bounded(5);
        const ToyPromptModel m = ToyPromptModel::init(v, d, mt, k, f, rng.next());
        const TrainSample s = make_sample(rng, m, 2 + rng.bounded(6));
        const double worst = fd_worst_error(m, s, 1e-4);
        INFO("config v=" << v << " d=" << d << " m=" << mt << " k=" << k
                         << " f=" << f << " worst=" << worst);
        REQUIRE(worst < 1e-4);
    }
}

TEST_CASE("loss is flat in every other prompt slice") {
    Rng rng(13);
    ToyPromptModel m = ToyPromptModel::init(8, 4, 2, 3, 2, 14);
    TrainSample s = make_sample(rng, m, 4);
    s.style = 1;
    const double base = forward_logprob(m, s);
    for (size_t other : {size_t{0}, size_t{2}}) {
        double* slice = m.prompt_slice(other);
        for (size_t k = 0; k < m.prompt_tokens * m.embed_dim; ++k) {
            const double orig = slice[k];
            slice[k] = orig + 0.37;
            REQUIRE(forward_logprob(m, s) == base);  // bitwise: untouched path
            slice[k] = orig;
        }
    }
}

TEST_CASE("training touches only the labeled slice and the adaptor") {
    Rng rng(15);
    ToyPromptModel m = ToyPromptModel::init(10, 4, 3, 4, 3, 16);
    const ToyPromptModel before = m;
    std::vector<TrainSample> samples;
    for (int i = 0; i < 6; ++i) {
        TrainSample s = make_sample(rng, m, 5);
        s.style = 0;
        samples.push_back(std::move(s));
    }
    const auto trace = train(m, samples, 0.1, 3, 99);
    REQUIRE(trace.size() == 3);
    const size_t slice_len = m.prompt_tokens * m.embed_dim;
    // slices 1..3 bitwise untouched, slice 0 and the adaptor moved
    for (size_t style = 1; style < 4; ++style)
        for (size_t k = 0; k < slice_len; ++k)
            REQUIRE(m.prompt_slice(style)[k] == before.prompt_slice(style)[k]);
    CHECK(m.token_embeddings == before.token_embeddings);
    CHECK(m.output_weights == before.output_weights);
    bool slice0_moved = false, adaptor_moved = false;
    for (size_t k = 0; k < slice_len; ++k)
        slice0_moved |= m.prompt_slice(0)[k] != before.prompt_slice(0)[k];
    for (size_t k = 0; k < m.adaptor.size(); ++k)
        adaptor_moved |= m.adaptor[k] != before.adaptor[k];
    CHECK(slice0_moved);
    CHECK(adaptor_moved);
}

TEST_CASE("zero learning rate leaves the model bitwise intact") {
    Rng rng(17);
    ToyPromptModel m = ToyPromptModel::init(7, 3, 2, 2, 2, 18);
    const ToyPromptModel before = m;
    std::vector<TrainSample> samples;
    for (int i = 0; i < 5; ++i) samples.push_back(make_sample(rng, m, 4));
    const auto trace = train(m, samples, 0.0, 4, 7);
    CHECK(m.prompt_bank == before.prompt_bank);
    CHECK(m.adaptor == before.adaptor);
    REQUIRE(trace.size() == 4);
    for (size_t e = 1; e < trace.size(); ++e) CHECK(trace[e] == trace[0]);
    CHECK(trace[0] == Catch::Approx(mean_loss(before, samples)).margin(1e-12));
}

TEST_CASE("training is deterministic in the seed") {
    Rng rng(19);
    std::vector<TrainSample> samples;
    ToyPromptModel a = ToyPromptModel::init(12, 5, 2, 3, 3, 20);
    ToyPromptModel b = a;
    for (int i = 0; i < 8; ++i) samples.push_back(make_sample(rng, a, 5));
    const auto ta = train(a, samples, 0.2, 5, 321);
    const auto tb = train(b, samples, 0.2, 5, 321);
    CHECK(a.prompt_bank == b.prompt_bank);
    CHECK(a.adaptor == b.adaptor);
    CHECK(ta == tb);
}

TEST_CASE("training reduces the epoch-mean loss on a learnable set") {
    ToyPromptModel m = ToyPromptModel::init(16, 8, 2, 2, 2, 21);
    // two styles with disjoint constant continuations; zero context isolates
    // the prompt bank as the only thing that can tell them apart
    std::vector<TrainSample> samples;
    for (int rep = 0; rep < 4; ++rep) {
        samples.push_back({{0.0, 0.0}, {0, 3, 3, 3, 3}, 0});
        samples.push_back({{0.0, 0.0}, {0, 7, 7, 7, 7}, 1});
    }
    const double initial = mean_loss(m, samples);
    const auto trace = train(m, samples, 0.3, 50, 5);
    CHECK(trace.back() < initial);

    // the learned prompts should prefer their own continuation
    std::vector<TrainSample> matched = {{{0.0, 0.0}, {0, 3, 3, 3, 3}, 0},
                                        {{0.0, 0.0}, {0, 7, 7, 7, 7}, 1}};
    std::vector<TrainSample> swapped = {{{0.0, 0.0}, {0, 3, 3, 3, 3}, 1},
                                        {{0.0, 0.0}, {0, 7, 7, 7, 7}, 0}};
    CHECK(mean_loss(m, matched) < mean_loss(m, swapped));
}

TEST_CASE("sample validation rejects malformed inputs") {
    const ToyPromptModel m = ToyPromptModel::init(6, 3, 2, 2, 2, 22);
    TrainSample good;
    good.context = {0.1, 0.2};
    good.tokens = {0, 1, 2};
    good.style = 1;
    REQUIRE_NOTHROW(forward_logprob(m, good));

    TrainSample s = good;
    s.tokens = {1};
    REQUIRE_THROWS_AS(forward_logprob(m, s), ArgumentError);
    s = good;
    s.tokens = {0, 6};
    REQUIRE_THROWS_AS(forward_logprob(m, s), ArgumentError);
    s = good;
    s.tokens = {0, -1};
    REQUIRE_THROWS_AS(forward_logprob(m, s), ArgumentError);
    s = good;
    s.context = {0.1};
    REQUIRE_THROWS_AS(backward(m, s), ArgumentError);
    s = good;
    s.style = 2;
    REQUIRE_THROWS_AS(backward(m, s), ArgumentError);
    REQUIRE_THROWS_AS(ToyPromptModel::init(1, 3, 2, 2, 2, 0), ArgumentError);
    REQUIRE_THROWS_AS(ToyPromptModel::init(6, 0, 2, 2, 2, 0), ArgumentError);
}

TEST_CASE("train validates the whole set before mutating anything") {
    ToyPromptModel m = ToyPromptModel::init(6, 3, 2, 2, 2, 23);
    const ToyPromptModel before = m;
    Rng rng(24);
    std::vector<TrainSample> samples{make_sample(rng, m, 4)};
    TrainSample bad = samples[0];
    bad.style = 9;
    samples.push_back(bad);
    REQUIRE_THROWS_AS(train(m, samples, 0.1, 2, 1), ArgumentError);
    CHECK(m.prompt_bank == before.prompt_bank);
    CHECK(m.adaptor == before.adaptor);
    REQUIRE_THROWS_AS(train(m, {}, 0.1, 2, 1), ArgumentError);
}

TEST_CASE("word tokenizer emits a start marker and in-range ids") {
    const auto t = tokenize_words("a man  walks\tby ", 64);
    REQUIRE(t.size() == 5);
    CHECK(t[0] == 0);
    for (size_t i = 1; i < t.size(); ++i) {
        CHECK(t[i] >= 1);
        CHECK(t[i] < 64);
    }
    CHECK(tokenize_words("a man  walks\tby ", 64) == t);
    // same word maps to the same id
    const auto rep = tokenize_words("man man", 64);
    CHECK(rep[1] == rep[2]);
    CHECK(tokenize_words("", 64) == std::vector<int>{0});
    REQUIRE_THROWS_AS(tokenize_words("x", 1), ArgumentError);
}

TEST_CASE("checkpoints round-trip through f32 storage") {
    TempDir tmp;
    const ToyPromptModel m = ToyPromptModel::init(9, 4, 3, 2, 3, 77);
    const std::string dir = tmp.file("ckpt");
    save_checkpoint(m, dir);
    const ToyPromptModel back = load_checkpoint(dir);
    CHECK(back.vocab == m.vocab);
    CHECK(back.embed_dim == m.embed_dim);
    CHECK(back.prompt_tokens == m.prompt_tokens);
    CHECK(back.prompt_count == m.prompt_count);
    CHECK(back.context_dim == m.context_dim);
    CHECK(back.seed == m.seed);
    auto f32_equal = [](const std::vector<double>& orig,
                        const std::vector<double>& loaded) {
        REQUIRE(orig.size() == loaded.size());
        for (size_t k = 0; k < orig.size(); ++k)
            REQUIRE(loaded[k] ==
                    static_cast<double>(static_cast<float>(orig[k])));
    };
    f32_equal(m.token_embeddings, back.token_embeddings);
    f32_equal(m.output_weights, back.output_weights);
    f32_equal(m.adaptor, back.adaptor);
    f32_equal(m.prompt_bank, back.prompt_bank);

    Rng rng(78);
    const TrainSample s = make_sample(rng, back, 4);
    CHECK(std::isfinite(forward_logprob(back, s)));
}

TEST_CASE("checkpoint loader reports specific failures") {
    TempDir tmp;
    SECTION("missing directory") {
        REQUIRE_THROWS_AS(load_checkpoint(tmp.file("nope")), IoError);
    }
    SECTION("malformed manifest") {
        const std::string dir = tmp.file("bad");
        std::filesystem::create_directories(dir);
        testutil::write_file(dir + "/manifest.json", "{not json");
        REQUIRE_THROWS_AS(load_checkpoint(dir), ParseError);
    }
    SECTION("tensor shape mismatch") {
        const ToyPromptModel m = ToyPromptModel::init(5, 3, 2, 2, 2, 1);
        const std::string dir = tmp.file("shape");
        save_checkpoint(m, dir);
        write_matrix(FeatureMatrix(2, 2), dir + "/adaptor.sfm");
        REQUIRE_THROWS_AS(load_checkpoint(dir), ValidationError);
    }
}
