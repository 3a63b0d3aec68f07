#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ham/dataset_io.hpp"
#include "ham/error.hpp"

namespace ham {

// One mini-batch of paired holistic features for the similarity distribution
// matching loss. `match[i*batch+j] == 1` marks (image i, text j) as the same
// identity. Stored in double; f32 inputs are promoted on load.
struct SdmBatch {
    size_t batch = 0;
    size_t dim = 0;
    std::vector<double> image_feats;  // B x D
    std::vector<double> text_feats;   // B x D
    std::vector<uint8_t> match;       // B x B
    double tau = 0.02;
    double epsilon = 1e-8;

    void validate() const {
        if (batch < 1 || dim < 1) throw ArgumentError("batch and dim must be >= 1");
        if (image_feats.size() != batch * dim || text_feats.size() != batch * dim)
            throw ArgumentError("feature buffer sizes do not match batch x dim");
        if (match.size() != batch * batch)
            throw ArgumentError("match matrix size does not match batch x batch");
        if (tau <= 0.0) throw ArgumentError("tau must be > 0");
        if (epsilon <= 0.0) throw ArgumentError("epsilon must be > 0");
        for (double v : image_feats)
            if (!std::isfinite(v)) throw ArgumentError("non-finite image feature");
        for (double v : text_feats)
            if (!std::isfinite(v)) throw ArgumentError("non-finite text feature");
        for (size_t i = 0; i < batch; ++i) {
            if (row_norm(image_feats, i) == 0.0)
                throw ArgumentError("zero image feature row " + std::to_string(i));
            if (row_norm(text_feats, i) == 0.0)
                throw ArgumentError("zero text feature row " + std::to_string(i));
        }
        for (size_t i = 0; i < batch; ++i) {
            size_t row_sum = 0, col_sum = 0;
            for (size_t j = 0; j < batch; ++j) {
                row_sum += match[i * batch + j];
                col_sum += match[j * batch + i];
            }
            if (row_sum == 0)
                throw ArgumentError("match matrix row " + std::to_string(i) +
                                    " is all-zero");
            if (col_sum == 0)
                throw ArgumentError("match matrix column " + std::to_string(i) +
                                    " is all-zero");
        }
    }

    double row_norm(const std::vector<double>& feats, size_t i) const {
        double acc = 0.0;
        for (size_t j = 0; j < dim; ++j) acc += feats[i * dim + j] * feats[i * dim + j];
        return std::sqrt(acc);
    }
};

struct SdmResult {
    double loss = 0.0;
    double loss_i2t = 0.0;
    double loss_t2i = 0.0;
    std::vector<double> p;  // B x B image->text matching probabilities
    std::vector<double> q;  // B x B normalized ground-truth distribution
};

struct SdmGrads {
    std::vector<double> image;  // B x D
    std::vector<double> text;   // B x D
};

namespace detail {

struct SdmWork {
    size_t b = 0, d = 0;
    std::vector<double> vnorm, tnorm;    // row norms
    std::vector<double> vhat, that;      // normalized rows
    std::vector<double> sim;             // B x B cosine
};

inline SdmWork sdm_prepare(const SdmBatch& batch) {
    SdmWork w;
    w.b = batch.batch;
    w.d = batch.dim;
    w.vnorm.resize(w.b);
    w.tnorm.resize(w.b);
    w.vhat.resize(w.b * w.d);
    w.that.resize(w.b * w.d);
    for (size_t i = 0; i < w.b; ++i) {
        w.vnorm[i] = batch.row_norm(batch.image_feats, i);
        w.tnorm[i] = batch.row_norm(batch.text_feats, i);
        for (size_t j = 0; j < w.d; ++j) {
            w.vhat[i * w.d + j] = batch.image_feats[i * w.d + j] / w.vnorm[i];
            w.that[i * w.d + j] = batch.text_feats[i * w.d + j] / w.tnorm[i];
        }
    }
    w.sim.resize(w.b * w.b);
    for (size_t i = 0; i < w.b; ++i)
        for (size_t j = 0; j < w.b; ++j) {
            double acc = 0.0;
            for (size_t k = 0; k < w.d; ++k)
                acc += w.vhat[i * w.d + k] * w.that[j * w.d + k];
            w.sim[i * w.b + j] = acc;
        }
    return w;
}

// softmax over each row of sim/tau, max-subtracted. sim(i,j) is read through
// `at` so the same routine serves both retrieval directions.
template <typename SimAt, typename MatchAt>
double kl_direction(size_t b, double tau, double epsilon, SimAt sim_at,
                    MatchAt match_at, std::vector<double>* p_out,
                    std::vector<double>* q_out, std::vector<double>* dsim_out) {
    std::vector<double> p(b), q(b), r(b);
    double loss = 0.0;
    for (size_t i = 0; i < b; ++i) {
        double hi = sim_at(i, 0) / tau;
        for (size_t j = 1; j < b; ++j) hi = std::max(hi, sim_at(i, j) / tau);
        double z = 0.0;
        for (size_t j = 0; j < b; ++j) {
            p[j] = std::exp(sim_at(i, j) / tau - hi);
            z += p[j];
        }
        double y_sum = 0.0;
        for (size_t j = 0; j < b; ++j) y_sum += match_at(i, j);
        double row_loss = 0.0;
        for (size_t j = 0; j < b; ++j) {
            p[j] /= z;
            q[j] = match_at(i, j) / y_sum;
            // p log(p/(q+eps)); vanishing p contributes nothing in the limit
            r[j] = p[j] > 0.0 ? std::log(p[j] / (q[j] + epsilon)) : 0.0;
            row_loss += p[j] * r[j];
        }
        loss += row_loss;
        for (size_t j = 0; j < b; ++j) {
            if (p_out) (*p_out)[i * b + j] = p[j];
            if (q_out) (*q_out)[i * b + j] = q[j];
            if (dsim_out)
                (*dsim_out)[i * b + j] +=
                    p[j] * (r[j] - row_loss) / (tau * static_cast<double>(b));
        }
    }
    return loss / static_cast<double>(b);
}

}  // namespace detail

// Supplementary-style SDM loss: KL between the temperature softmax of the
// cosine similarities and the normalized identity-match distribution, summed
// over the image->text and text->image directions.
inline SdmResult sdm_loss(const SdmBatch& batch) {
    batch.validate();
    const detail::SdmWork w = detail::sdm_prepare(batch);
    const size_t b = w.b;

    SdmResult res;
    res.p.resize(b * b);
    res.q.resize(b * b);
    res.loss_i2t = detail::kl_direction(
        b, batch.tau, batch.epsilon,
        [&](size_t i, size_t j) { return w.sim[i * b + j]; },
        [&](size_t i, size_t j) { return static_cast<double>(batch.match[i * b + j]); },
        &res.p, &res.q, nullptr);
    res.loss_t2i = detail::kl_direction(
        b, batch.tau, batch.epsilon,
        [&](size_t i, size_t j) { return w.sim[j * b + i]; },
        [&](size_t i, size_t j) { return static_cast<double>(batch.match[j * b + i]); },
        nullptr, nullptr, nullptr);
    res.loss = res.loss_i2t + res.loss_t2i;
    return res;
}

// Analytic gradients of sdm_loss w.r.t. both feature matrices. The cosine
// chain rule is applied once to the combined dL/dsim of both directions.
inline SdmGrads sdm_grad(const SdmBatch& batch) {
    batch.validate();
    const detail::SdmWork w = detail::sdm_prepare(batch);
    const size_t b = w.b;
    const size_t d = w.d;

    std::vector<double> dsim(b * b, 0.0);
    detail::kl_direction(
        b, batch.tau, batch.epsilon,
        [&](size_t i, size_t j) { return w.sim[i * b + j]; },
        [&](size_t i, size_t j) { return static_cast<double>(batch.match[i * b + j]); },
        nullptr, nullptr, &dsim);
    std::vector<double> dsim_t(b * b, 0.0);
    detail::kl_direction(
        b, batch.tau, batch.epsilon,
        [&](size_t i, size_t j) { return w.sim[j * b + i]; },
        [&](size_t i, size_t j) { return static_cast<double>(batch.match[j * b + i]); },
        nullptr, nullptr, &dsim_t);
    for (size_t i = 0; i < b; ++i)
        for (size_t j = 0; j < b; ++j) dsim[i * b + j] += dsim_t[j * b + i];

    SdmGrads g;
    g.image.assign(b * d, 0.0);
    g.text.assign(b * d, 0.0);
    for (size_t i = 0; i < b; ++i) {
        for (size_t j = 0; j < b; ++j) {
            const double m = dsim[i * b + j];
            if (m == 0.0) continue;
            const double s = w.sim[i * b + j];
            for (size_t k = 0; k < d; ++k) {
                g.image[i * d + k] +=
                    m * (w.that[j * d + k] - s * w.vhat[i * d + k]) / w.vnorm[i];
                g.text[j * d + k] +=
                    m * (w.vhat[i * d + k] - s * w.that[j * d + k]) / w.tnorm[j];
            }
        }
    }
    return g;
}

// Central finite differences over every feature entry; returns the maximum
// deviation from the analytic gradients, relative for entries above unit
// magnitude and absolute below it so FD round-off on near-zero entries does
// not dominate. Used by the CLI check.
inline double sdm_grad_check(const SdmBatch& batch, double step = 1e-5) {
    const SdmGrads analytic = sdm_grad(batch);
    SdmBatch probe = batch;
    double max_rel = 0.0;
    auto probe_all = [&](std::vector<double>& feats, const std::vector<double>& grad) {
        for (size_t k = 0; k < feats.size(); ++k) {
            const double saved = feats[k];
            feats[k] = saved + step;
            const double up = sdm_loss(probe).loss;
            feats[k] = saved - step;
            const double down = sdm_loss(probe).loss;
            feats[k] = saved;
            const double fd = (up - down) / (2.0 * step);
            const double denom = std::max({std::abs(fd), std::abs(grad[k]), 1.0});
            max_rel = std::max(max_rel, std::abs(fd - grad[k]) / denom);
        }
    };
    probe_all(probe.image_feats, analytic.image);
    probe_all(probe.text_feats, analytic.text);
    return max_rel;
}

// Batch loader: two SFM1 feature files plus a JSON file holding the B x B
// 0/1 match matrix as a nested array.
inline SdmBatch load_sdm_batch(const std::string& image_path,
                               const std::string& text_path,
                               const std::string& match_path, double tau,
                               double epsilon) {
    const FeatureMatrix vi = read_matrix(image_path);
    const FeatureMatrix ti = read_matrix(text_path);
    if (vi.rows != ti.rows || vi.cols != ti.cols)
        throw ArgumentError("image and text feature shapes differ");

    std::ifstream in(match_path, std::ios::binary);
    if (!in) throw IoError("cannot open match matrix file: " + match_path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed match matrix: ") + e.what());
    }
    if (!j.is_array() || j.size() != vi.rows)
        throw ValidationError("match matrix must have one row per batch entry");

    SdmBatch batch;
    batch.batch = vi.rows;
    batch.dim = vi.cols;
    batch.tau = tau;
    batch.epsilon = epsilon;
    batch.image_feats.assign(vi.data.begin(), vi.data.end());
    batch.text_feats.assign(ti.data.begin(), ti.data.end());
    batch.match.resize(batch.batch * batch.batch);
    for (size_t i = 0; i < batch.batch; ++i) {
        const auto& row = j.at(i);
        if (!row.is_array() || row.size() != batch.batch)
            throw ValidationError("match matrix row " + std::to_string(i) +
                                  " has wrong length");
        for (size_t k = 0; k < batch.batch; ++k) {
            const int v = row.at(k).get<int>();
            if (v != 0 && v != 1)
                throw ValidationError("match matrix entries must be 0 or 1");
            batch.match[i * batch.batch + k] = static_cast<uint8_t>(v);
        }
    }
    return batch;
}

}  // namespace ham
