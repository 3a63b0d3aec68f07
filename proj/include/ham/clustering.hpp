#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "ham/dataset_io.hpp"
#include "ham/error.hpp"
#include "ham/rng.hpp"

namespace ham {

// Squared Euclidean distance, accumulated in double. All clustering in this
// module is defined on this metric.
inline double dist2(const float* a, const float* b, size_t d) {
    double acc = 0.0;
    for (size_t j = 0; j < d; ++j) {
        const double t = static_cast<double>(a[j]) - static_cast<double>(b[j]);
        acc += t * t;
    }
    return acc;
}

inline double dist2_fd(const float* a, const double* b, size_t d) {
    double acc = 0.0;
    for (size_t j = 0; j < d; ++j) {
        const double t = static_cast<double>(a[j]) - b[j];
        acc += t * t;
    }
    return acc;
}

// Per-dimension mean/std box of a feature set. Ranges are evaluated at f32
// precision so sampled centers and stored features live in the same domain.
struct StyleSpace {
    std::vector<float> mu;
    std::vector<float> sigma;
    double beta = 7.0;

    size_t dims() const { return mu.size(); }

    float range_lo(size_t j) const {
        return static_cast<float>(static_cast<double>(mu[j]) -
                                  beta * static_cast<double>(sigma[j]));
    }
    float range_hi(size_t j) const {
        return static_cast<float>(static_cast<double>(mu[j]) +
                                  beta * static_cast<double>(sigma[j]));
    }
};

// Population mean and standard deviation (divisor N) of each column.
inline StyleSpace style_space(const FeatureMatrix& features, double beta) {
    if (features.rows < 1) throw ArgumentError("style_space needs at least one row");
    if (beta < 0.0) throw ArgumentError("beta must be non-negative");
    const size_t n = features.rows;
    const size_t d = features.cols;
    std::vector<double> mean(d, 0.0);
    for (size_t i = 0; i < n; ++i) {
        const float* row = features.row(i);
        for (size_t j = 0; j < d; ++j) mean[j] += row[j];
    }
    for (size_t j = 0; j < d; ++j) mean[j] /= static_cast<double>(n);

    std::vector<double> var(d, 0.0);
    for (size_t i = 0; i < n; ++i) {
        const float* row = features.row(i);
        for (size_t j = 0; j < d; ++j) {
            const double t = static_cast<double>(row[j]) - mean[j];
            var[j] += t * t;
        }
    }
    StyleSpace space;
    space.beta = beta;
    space.mu.resize(d);
    space.sigma.resize(d);
    for (size_t j = 0; j < d; ++j) {
        space.mu[j] = static_cast<float>(mean[j]);
        space.sigma[j] = static_cast<float>(std::sqrt(var[j] / static_cast<double>(n)));
    }
    return space;
}

enum class ClusterMethod { kmeans, dbscan, ups };

struct AssignmentPolicy {
    enum class Kind { exclusive, fixed_q };
    Kind kind = Kind::exclusive;
    size_t q = 0;

    static AssignmentPolicy exclusive() { return {Kind::exclusive, 0}; }
    static AssignmentPolicy fixed_q(size_t q) { return {Kind::fixed_q, q}; }
};

struct ClusterModel {
    FeatureMatrix centers;
    ClusterMethod method = ClusterMethod::kmeans;
    AssignmentPolicy policy = AssignmentPolicy::exclusive();
    uint64_t seed = 0;

    void validate() const {
        if (policy.kind == AssignmentPolicy::Kind::fixed_q &&
            method != ClusterMethod::ups)
            throw ValidationError("fixed_q assignment is only valid for ups models");
    }
};

struct Member {
    size_t index;
    double distance;
};

// Per-cluster membership lists plus the samples that landed in no cluster.
// Exclusive policies put every sample in exactly one cluster or in noise;
// the fixed-Q policy lets a sample appear in several lists.
struct Assignment {
    std::vector<std::vector<Member>> memberships;
    std::vector<size_t> noise;

    size_t cluster_count() const { return memberships.size(); }
};

// Uniform draw of K2 centers from the per-dimension box of `space`. Values
// are generated center-major, dimension-minor from xoshiro256** uniforms, so
// the output is a pure function of (space, k2, seed). Every coordinate lies
// in the closed f32 range [range_lo(j), range_hi(j)].
inline FeatureMatrix ups_sample_centers(const StyleSpace& space, size_t k2,
                                        uint64_t seed) {
    if (k2 < 1) throw ArgumentError("k2 must be >= 1");
    const size_t d = space.dims();
    if (d < 1) throw ArgumentError("style space has no dimensions");
    std::vector<double> lo(d), width(d);
    for (size_t j = 0; j < d; ++j) {
        lo[j] = static_cast<double>(space.range_lo(j));
        width[j] = static_cast<double>(space.range_hi(j)) - lo[j];
    }
    Rng rng(seed);
    FeatureMatrix centers(k2, d);
    for (size_t i = 0; i < k2; ++i) {
        float* row = centers.row(i);
        for (size_t j = 0; j < d; ++j) {
            // u in [0,1) and f32-representable bounds keep the rounded value
            // inside the closed interval.
            row[j] = static_cast<float>(lo[j] + rng.uniform() * width[j]);
        }
    }
    return centers;
}

// Fixed-Q assignment: each center takes its min(Q, N) nearest samples,
// ordered by ascending distance with index as the tie-break. Samples nearest
// to no center at all end up in `noise`.
inline Assignment ups_assign(const FeatureMatrix& features,
                             const FeatureMatrix& centers, size_t q) {
    if (q < 1) throw ArgumentError("q must be >= 1");
    if (features.cols != centers.cols)
        throw ArgumentError("feature and center dimensions differ");
    const size_t n = features.rows;
    const size_t take = std::min(q, n);

    Assignment out;
    out.memberships.resize(centers.rows);
    std::vector<char> used(n, 0);
    std::vector<std::pair<double, size_t>> dist(n);
    for (size_t c = 0; c < centers.rows; ++c) {
        const float* center = centers.row(c);
        for (size_t i = 0; i < n; ++i)
            dist[i] = {dist2(features.row(i), center, features.cols), i};
        std::partial_sort(dist.begin(), dist.begin() + static_cast<ptrdiff_t>(take),
                          dist.end());
        auto& members = out.memberships[c];
        members.reserve(take);
        for (size_t k = 0; k < take; ++k) {
            members.push_back({dist[k].second, std::sqrt(dist[k].first)});
            used[dist[k].second] = 1;
        }
    }
    for (size_t i = 0; i < n; ++i)
        if (!used[i]) out.noise.push_back(i);
    return out;
}

struct KMeansResult {
    ClusterModel model;
    Assignment assignment;
    std::vector<double> inertia_trace;  // one entry per Lloyd iteration
    double final_inertia = 0.0;
    size_t iterations = 0;
};

// Lloyd iterations with k-means++ seeding. Centers are kept in double during
// iteration and cast to f32 at the end; the returned assignment is then
// recomputed against the f32 centers so every sample sits at its true
// nearest center of the published model (ties to the lower center index).
// Empty clusters seize the sample farthest from its assigned center.
inline KMeansResult kmeans(const FeatureMatrix& features, size_t k1, uint64_t seed,
                           size_t max_iters = 300, double tol = 1e-6) {
    const size_t n = features.rows;
    const size_t d = features.cols;
    if (k1 < 1) throw ArgumentError("k1 must be >= 1");
    if (k1 > n)
        throw ArgumentError("k1 (" + std::to_string(k1) + ") exceeds sample count (" +
                            std::to_string(n) + ")");

    Rng rng(seed);

    // k-means++ seeding: first center uniform, the rest proportional to the
    // squared distance to the nearest chosen center. A zero total (duplicate
    // points) falls back to the lowest-index unchosen sample.
    std::vector<double> centers(k1 * d);
    std::vector<char> chosen(n, 0);
    std::vector<double> best_d2(n, std::numeric_limits<double>::infinity());
    {
        size_t first = static_cast<size_t>(rng.bounded(n));
        chosen[first] = 1;
        const float* row = features.row(first);
        for (size_t j = 0; j < d; ++j) centers[j] = row[j];
        for (size_t k = 1; k < k1; ++k) {
            const double* prev = centers.data() + (k - 1) * d;
            double total = 0.0;
            for (size_t i = 0; i < n; ++i) {
                best_d2[i] = std::min(best_d2[i], dist2_fd(features.row(i), prev, d));
                total += best_d2[i];
            }
            size_t pick = n;
            if (total > 0.0) {
                const double r = rng.uniform() * total;
                double cum = 0.0;
                for (size_t i = 0; i < n; ++i) {
                    cum += best_d2[i];
                    if (cum > r) {
                        pick = i;
                        break;
                    }
                }
                if (pick == n) pick = n - 1;  // guard against rounding at the top end
            } else {
                for (size_t i = 0; i < n; ++i)
                    if (!chosen[i]) {
                        pick = i;
                        break;
                    }
            }
            chosen[pick] = 1;
            const float* prow = features.row(pick);
            for (size_t j = 0; j < d; ++j) centers[k * d + j] = prow[j];
        }
    }

    std::vector<size_t> assign(n, 0);
    std::vector<double> point_d2(n, 0.0);
    std::vector<double> new_centers(k1 * d);
    std::vector<size_t> counts(k1);
    KMeansResult result;

    for (size_t iter = 0; iter < max_iters; ++iter) {
        ++result.iterations;
        double inertia = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            size_t best_c = 0;
            for (size_t c = 0; c < k1; ++c) {
                const double dd = dist2_fd(features.row(i), centers.data() + c * d, d);
                if (dd < best) {
                    best = dd;
                    best_c = c;
                }
            }
            assign[i] = best_c;
            point_d2[i] = best;
            inertia += best;
        }
        result.inertia_trace.push_back(inertia);

        std::fill(new_centers.begin(), new_centers.end(), 0.0);
        std::fill(counts.begin(), counts.end(), size_t{0});
        for (size_t i = 0; i < n; ++i) {
            const float* row = features.row(i);
            double* target = new_centers.data() + assign[i] * d;
            for (size_t j = 0; j < d; ++j) target[j] += row[j];
            ++counts[assign[i]];
        }
        std::vector<char> seized(n, 0);
        for (size_t c = 0; c < k1; ++c) {
            if (counts[c] > 0) {
                double* target = new_centers.data() + c * d;
                for (size_t j = 0; j < d; ++j) target[j] /= static_cast<double>(counts[c]);
                continue;
            }
            size_t far = n;
            double far_d2 = -1.0;
            for (size_t i = 0; i < n; ++i)
                if (!seized[i] && point_d2[i] > far_d2) {
                    far_d2 = point_d2[i];
                    far = i;
                }
            seized[far] = 1;
            const float* row = features.row(far);
            double* target = new_centers.data() + c * d;
            for (size_t j = 0; j < d; ++j) target[j] = row[j];
        }

        double shift = 0.0;
        for (size_t k = 0; k < centers.size(); ++k)
            shift = std::max(shift, std::abs(new_centers[k] - centers[k]));
        centers.swap(new_centers);
        if (shift < tol) break;
    }

    result.model.method = ClusterMethod::kmeans;
    result.model.policy = AssignmentPolicy::exclusive();
    result.model.seed = seed;
    result.model.centers = FeatureMatrix(k1, d);
    for (size_t c = 0; c < k1; ++c)
        for (size_t j = 0; j < d; ++j)
            result.model.centers.at(c, j) = static_cast<float>(centers[c * d + j]);

    result.assignment.memberships.resize(k1);
    result.final_inertia = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        size_t best_c = 0;
        for (size_t c = 0; c < k1; ++c) {
            const double dd =
                dist2(features.row(i), result.model.centers.row(c), d);
            if (dd < best) {
                best = dd;
                best_c = c;
            }
        }
        result.assignment.memberships[best_c].push_back({i, std::sqrt(best)});
        result.final_inertia += best;
    }
    return result;
}

// Density clustering: a sample is a core point iff at least min_pts samples
// (itself included) lie within eps. Clusters grow from core points in
// ascending index order with a FIFO frontier, so a border point reachable
// from several clusters joins the one discovered first.
inline Assignment dbscan(const FeatureMatrix& features, double eps, size_t min_pts) {
    if (eps <= 0.0) throw ArgumentError("eps must be > 0");
    if (min_pts < 1) throw ArgumentError("min_pts must be >= 1");
    const size_t n = features.rows;
    const size_t d = features.cols;
    const double eps2 = eps * eps;

    constexpr int kUnvisited = -1;
    constexpr int kNoise = -2;
    std::vector<int> label(n, kUnvisited);

    auto neighbors_of = [&](size_t i) {
        std::vector<size_t> out;
        const float* row = features.row(i);
        for (size_t j = 0; j < n; ++j)
            if (dist2(row, features.row(j), d) <= eps2) out.push_back(j);
        return out;
    };

    int next_cluster = 0;
    std::deque<size_t> frontier;
    for (size_t i = 0; i < n; ++i) {
        if (label[i] != kUnvisited) continue;
        std::vector<size_t> neigh = neighbors_of(i);
        if (neigh.size() < min_pts) {
            label[i] = kNoise;
            continue;
        }
        const int cluster = next_cluster++;
        label[i] = cluster;
        frontier.assign(neigh.begin(), neigh.end());
        while (!frontier.empty()) {
            const size_t p = frontier.front();
            frontier.pop_front();
            if (label[p] == kNoise) {
                label[p] = cluster;  // border point
                continue;
            }
            if (label[p] != kUnvisited) continue;
            label[p] = cluster;
            std::vector<size_t> np = neighbors_of(p);
            if (np.size() >= min_pts)
                frontier.insert(frontier.end(), np.begin(), np.end());
        }
    }

    Assignment out;
    out.memberships.resize(static_cast<size_t>(next_cluster));
    for (size_t i = 0; i < n; ++i) {
        if (label[i] == kNoise)
            out.noise.push_back(i);
        else
            out.memberships[static_cast<size_t>(label[i])].push_back({i, 0.0});
    }
    return out;
}

// Appends (cluster id + label_offset) to the style labels of every record a
// cluster contains. Noise samples receive nothing.
inline std::vector<CaptionRecord> label_dataset(const std::vector<CaptionRecord>& records,
                                                const Assignment& assignment,
                                                int label_offset) {
    std::vector<CaptionRecord> out = records;
    for (size_t c = 0; c < assignment.memberships.size(); ++c)
        for (const Member& m : assignment.memberships[c]) {
            if (m.index >= out.size())
                throw ValidationError("assignment references sample " +
                                      std::to_string(m.index) + " but only " +
                                      std::to_string(out.size()) + " records exist");
            out[m.index].style_labels.push_back(static_cast<int>(c) + label_offset);
        }
    for (size_t i : assignment.noise)
        if (i >= out.size())
            throw ValidationError("assignment noise references sample " +
                                  std::to_string(i) + " but only " +
                                  std::to_string(out.size()) + " records exist");
    return out;
}

// --- Assignment JSONL ------------------------------------------------------
//
// One line per cluster {"cluster": c, "members": [...], "distances": [...]},
// ascending by cluster id, followed by one {"noise": [...]} line.

inline void write_assignment(const Assignment& assignment, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open assignment file for writing: " + path);
    for (size_t c = 0; c < assignment.memberships.size(); ++c) {
        nlohmann::json members = nlohmann::json::array();
        nlohmann::json distances = nlohmann::json::array();
        for (const Member& m : assignment.memberships[c]) {
            members.push_back(m.index);
            distances.push_back(m.distance);
        }
        out << nlohmann::json{{"cluster", c},
                              {"members", members},
                              {"distances", distances}}
                   .dump()
            << '\n';
    }
    out << nlohmann::json{{"noise", assignment.noise}}.dump() << '\n';
    if (!out) throw IoError("write failed: " + path);
}

inline Assignment read_assignment(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open assignment file: " + path);
    Assignment out;
    std::string line;
    size_t line_no = 0;
    bool saw_noise = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trimmed(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("malformed assignment at line " + std::to_string(line_no) +
                             ": " + e.what());
        }
        if (j.contains("noise")) {
            if (saw_noise)
                throw ParseError("duplicate noise line at line " + std::to_string(line_no));
            saw_noise = true;
            out.noise = j.at("noise").get<std::vector<size_t>>();
            continue;
        }
        const size_t cluster = j.at("cluster").get<size_t>();
        if (cluster != out.memberships.size())
            throw ParseError("cluster ids out of order at line " + std::to_string(line_no));
        auto members = j.at("members").get<std::vector<size_t>>();
        auto distances = j.at("distances").get<std::vector<double>>();
        if (members.size() != distances.size())
            throw ParseError("members/distances length mismatch at line " +
                             std::to_string(line_no));
        std::vector<Member> ms(members.size());
        for (size_t k = 0; k < members.size(); ++k) ms[k] = {members[k], distances[k]};
        out.memberships.push_back(std::move(ms));
    }
    if (!saw_noise)
        throw ParseError("assignment file has no noise line: " + path);
    return out;
}

}  // namespace ham
