// Command line front end for the style pipeline. Subcommands cover the data
// path end to end: mask -> embed -> stats/kmeans/ups/dbscan -> label ->
// train-toy, plus sdm-check and eval for the retrieval side.
//
// Option precedence: built-in default < --config file < explicit flag.
// Errors print one line to stderr as kind=<kind> msg="..." and exit with
// 1 (argument/validation/parse), 2 (io), or 3 (numeric).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ham/clustering.hpp"
#include "ham/dataset_io.hpp"
#include "ham/error.hpp"
#include "ham/pipeline.hpp"
#include "ham/prompt_model.hpp"
#include "ham/retrieval.hpp"
#include "ham/rng.hpp"
#include "ham/sdm.hpp"
#include "ham/style.hpp"

namespace {

// Per-subcommand option state. Flags write into `flags`; resolve() layers
// defaults, then the config file, then every flag the user actually passed.
struct Ctx {
    ham::PipelineConfig flags;
    std::string config_path;
    std::vector<std::pair<CLI::Option*,
                          std::function<void(ham::PipelineConfig&,
                                             const ham::PipelineConfig&)>>>
        appliers;

    ham::PipelineConfig resolve() const {
        ham::PipelineConfig cfg;
        if (!config_path.empty()) ham::apply_config_file(cfg, config_path);
        for (const auto& [opt, apply] : appliers)
            if (opt->count() > 0) apply(cfg, flags);
        return cfg;
    }
};

std::vector<std::unique_ptr<Ctx>> g_ctxs;

Ctx& new_ctx(CLI::App* sub) {
    g_ctxs.push_back(std::make_unique<Ctx>());
    Ctx& ctx = *g_ctxs.back();
    sub->add_option("--config", ctx.config_path, "TOML config file");
    return ctx;
}

template <typename T>
void bind_opt(CLI::App* sub, Ctx& ctx, const std::string& name,
          T ham::PipelineConfig::* field, const std::string& desc) {
    CLI::Option* opt = sub->add_option(name, ctx.flags.*field, desc);
    ctx.appliers.emplace_back(opt, [field](ham::PipelineConfig& dst,
                                           const ham::PipelineConfig& src) {
        dst.*field = src.*field;
    });
}

void bind_embedder(CLI::App* sub, Ctx& ctx) {
    auto push = [&](CLI::Option* opt,
                    std::function<void(ham::PipelineConfig&,
                                       const ham::PipelineConfig&)> apply) {
        ctx.appliers.emplace_back(opt, std::move(apply));
    };
    push(sub->add_option("--dims", ctx.flags.embedder.dims, "embedding dimensions"),
         [](auto& dst, const auto& src) { dst.embedder.dims = src.embedder.dims; });
    push(sub->add_option("--ngram-min", ctx.flags.embedder.ngram_min,
                         "shortest character n-gram"),
         [](auto& dst, const auto& src) {
             dst.embedder.ngram_min = src.embedder.ngram_min;
         });
    push(sub->add_option("--ngram-max", ctx.flags.embedder.ngram_max,
                         "longest character n-gram"),
         [](auto& dst, const auto& src) {
             dst.embedder.ngram_max = src.embedder.ngram_max;
         });
    push(sub->add_option("--embed-seed", ctx.flags.embedder.seed,
                         "hashing seed for the embedder"),
         [](auto& dst, const auto& src) { dst.embedder.seed = src.embedder.seed; });
    push(sub->add_flag("--normalize,!--no-normalize", ctx.flags.embedder.normalize,
                       "L2-normalize embeddings"),
         [](auto& dst, const auto& src) {
             dst.embedder.normalize = src.embedder.normalize;
         });
}

void need(const std::string& value, const std::string& what) {
    if (value.empty())
        throw ham::ArgumentError("missing " + what +
                                 " (pass the flag or set it in the config file)");
}

ham::MaskLexicon lexicon_or_identity(const std::string& path) {
    if (path.empty()) return ham::MaskLexicon{};
    return ham::read_lexicon(path);
}

void setup_mask(CLI::App& app) {
    CLI::App* sub = app.add_subcommand("mask", "replace attribute words in captions");
    Ctx& ctx = new_ctx(sub);
    bind_opt(sub, ctx, "--captions", &ham::PipelineConfig::captions, "input caption JSONL");
    bind_opt(sub, ctx, "--lexicon", &ham::PipelineConfig::lexicon, "mask lexicon TSV");
    bind_opt(sub, ctx, "--output", &ham::PipelineConfig::output, "masked caption JSONL");
    sub->callback([&ctx]() {
        const ham::PipelineConfig cfg = ctx.resolve();
        need(cfg.captions, "--captions");
        need(cfg.lexicon, "--lexicon");
        need(cfg.output, "--output");
        const ham::MaskLexicon lex = ham::read_lexicon(cfg.lexicon);
        std::vector<ham::CaptionRecord> records = ham::read_captions(cfg.captions);
        for (auto& rec : records) rec.text = ham::mask_caption(rec.text, lex);
        ham::write_captions(records, cfg.output);
        std::cout << "masked " << records.size() << " captions -> " << cfg.output
                  << "\n";
    });
}

void setup_embed(CLI::App& app) {
    CLI::App* sub =
        app.add_subcommand("embed", "extract style features from captions");
    Ctx& ctx = new_ctx(sub);
    bind_opt(sub, ctx, "--captions", &ham::PipelineConfig::captions, "input caption JSONL");
    bind_opt(sub, ctx, "--lexicon", &ham::PipelineConfig::lexicon,
         "mask lexicon TSV (omit to embed unmasked text)");
    bind_opt(sub, ctx, "--output", &ham::PipelineConfig::output, "output feature matrix");
    bind_embedder(sub, ctx);
    sub->callback([&ctx]() {
        const ham::PipelineConfig cfg = ctx.resolve();
        need(cfg.captions, "--captions");
        need(cfg.output, "--output");
        const ham::MaskLexicon lex = lexicon_or_identity(cfg.lexicon);
        const std::vector<ham::CaptionRecord> records =
            ham::read_captions(cfg.captions);
        const ham::FeatureMatrix features =
            ham::extract_styles(records, lex, cfg.embedder);
        ham::write_matrix(features, cfg.output);
        std::cout << "embedded " << features.rows << " captions into "
                  << features.cols << " dims -> " << cfg.output << "\n";
    });
}

void setup_stats(CLI::App& app) {
    CLI::App* sub =
        app.add_subcommand("stats", "per-dimension style space statistics");
    Ctx& ctx = new_ctx(sub);
    bind_opt(sub, ctx, "--features", &ham::PipelineConfig::features, "feature matrix");
    bind_opt(sub, ctx, "--beta", &ham::PipelineConfig::beta, "range half-width in sigmas");
    bind_opt(sub, ctx, "--output", &ham::PipelineConfig::output,
         "optional JSON stats output");
    sub->callback([&ctx]() {
        const ham::PipelineConfig cfg = ctx.resolve();
        need(cfg.features, "--features");
        const ham::FeatureMatrix features = ham::read_matrix(cfg.features);
        const ham::StyleSpace space = ham::style_space(features, cfg.beta);
        double sigma_sum = 0.0, width_max = 0.0;
        for (size_t j = 0; j < space.dims(); ++j) {
            sigma_sum += space.sigma[j];
            width_max = std::max(
                width_max, static_cast<double>(space.range_hi(j)) - space.range_lo(j));
        }
        std::printf("rows=%zu dims=%zu beta=%.4f sigma_mean=%.6f width_max=%.6f\n",
                    features.rows, space.dims(), space.beta,
                    sigma_sum / static_cast<double>(space.dims()), width_max);
        if (!cfg.output.empty()) {
            nlohmann::json j;
            j["beta"] = space.beta;
            j["mu"] = space.mu;
            j["sigma"] = space.sigma;
            std::ofstream out(cfg.output, std::ios::binary | std::ios::trunc);
            if (!out) throw ham::IoError("cannot write stats file: " + cfg.output);
            out << j.dump() << '\n';
        }
    });
}

void setup_kmeans(CLI::App& app) {
    CLI::App* sub =
        app.add_subcommand("kmeans", "exclusive clustering of style features");
    Ctx& ctx = new_ctx(sub);
    auto iters = std::make_shared<size_t>(300);
    auto tol = std::make_shared<double>(1e-6);
    bind_opt(sub, ctx, "--features", &ham::PipelineConfig::features, "feature matrix");
    bind_opt(sub, ctx, "--k1", &ham::PipelineConfig::k1, "cluster count");
    bind_opt(sub, ctx, "--seed", &ham::PipelineConfig::seed, "clustering seed");
    bind_opt(sub, ctx, "--output", &ham::PipelineConfig::output, "assignment JSONL");
    bind_opt(sub, ctx, "--centers", &ham::PipelineConfig::centers,
         "optional centers matrix output");
    sub->add_option("--max-iters", *iters, "Lloyd iteration cap");
    sub->add_option("--tol", *tol, "center shift stopping tolerance");
    sub->callback([&ctx, iters, tol]() {
        const ham::PipelineConfig cfg = ctx.resolve();
        need(cfg.features, "--features");
        need(cfg.output, "--output");
        if (cfg.k1 < 1) throw ham::ArgumentError("k1 must be >= 1");
        const ham::FeatureMatrix features = ham::read_matrix(cfg.features);
        const ham::KMeansResult res =
            ham::kmeans(features, static_cast<size_t>(cfg.k1), cfg.seed, *iters, *tol);
        ham::write_assignment(res.assignment, cfg.output);
        if (!cfg.centers.empty()) ham::write_matrix(res.model.centers, cfg.centers);
        std::printf("kmeans k1=%ld iterations=%zu inertia=%.6f -> %s\n", cfg.k1,
                    res.iterations, res.final_inertia, cfg.output.c_str());
    });
}

void setup_ups(CLI::App& app) {
    CLI::App* sub = app.add_subcommand(
        "ups", "uniform prototype sampling with fixed-quota assignment");
    Ctx& ctx = new_ctx(sub);
    bind_opt(sub, ctx, "--features", &ham::PipelineConfig::features, "feature matrix");
    bind_opt(sub, ctx, "--k2", &ham::PipelineConfig::k2, "prototype count");
    bind_opt(sub, ctx, "--q", &ham::PipelineConfig::q, "captions per prototype");
    bind_opt(sub, ctx, "--beta", &ham::PipelineConfig::beta, "range half-width in sigmas");
    bind_opt(sub, ctx, "--seed", &ham::PipelineConfig::seed, "sampling seed");
    bind_opt(sub, ctx, "--output", &ham::PipelineConfig::output, "assignment JSONL");
    bind_opt(sub, ctx, "--centers", &ham::PipelineConfig::centers,
         "optional prototype matrix output");
    sub->callback([&ctx]() {
        const ham::PipelineConfig cfg = ctx.resolve();
        need(cfg.features, "--features");
        need(cfg.output, "--output");
        if (cfg.k2 < 1) throw ham::ArgumentError("k2 must be >= 1");
        if (cfg.q < 1) throw ham::ArgumentError("q must be >= 1");
        const ham::FeatureMatrix features = ham::read_matrix(cfg.features);
        const ham::StyleSpace space = ham::style_space(features, cfg.beta);
        const ham::FeatureMatrix centers =
            ham::ups_sample_centers(space, static_cast<size_t>(cfg.k2), cfg.seed);
        const ham::Assignment assignment =
            ham::ups_assign(features, centers, static_cast<size_t>(cfg.q));
        ham::write_assignment(assignment, cfg.output);
        if (!cfg.centers.empty()) ham::write_matrix(centers, cfg.centers);
        std::printf("ups k2=%ld q=%ld beta=%.4f -> %s\n", cfg.k2, cfg.q, cfg.beta,
                    cfg.output.c_str());
    });
}

void setup_dbscan(CLI::App& app) {
    CLI::App* sub =
        app.add_subcommand("dbscan", "density clustering of style features");
    Ctx& ctx = new_ctx(sub);
    bind_opt(sub, ctx, "--features", &ham::PipelineConfig::features, "feature matrix");
    bind_opt(sub, ctx, "--eps", &ham::PipelineConfig::eps_dbscan, "density radius");
    bind_opt(sub, ctx, "--min-pts", &ham::PipelineConfig::min_pts,
         "neighborhood size threshold");
    bind_opt(sub, ctx, "--output", &ham::PipelineConfig::output, "assignment JSONL");
    sub->callback([&ctx]() {
        const ham::PipelineConfig cfg = ctx.resolve();
        need(cfg.features, "--features");
        need(cfg.output, "--output");
        if (cfg.min_pts < 1) throw ham::ArgumentError("min_pts must be >= 1");
        const ham::FeatureMatrix features = ham::read_matrix(cfg.features);
        const ham::Assignment assignment =
            ham::dbscan(features, cfg.eps_dbscan, static_cast<size_t>(cfg.min_pts));
        ham::write_assignment(assignment, cfg.output);
        std::printf("dbscan eps=%.4f min_pts=%ld clusters=%zu noise=%zu -> %s\n",
                    cfg.eps_dbscan, cfg.min_pts, assignment.cluster_count(),
                    assignment.noise.size(), cfg.output.c_str());
    });
}

void setup_label(CLI::App& app) {
    CLI::App* sub = app.add_subcommand(
        "label", "append pseudo style labels from an assignment");
    Ctx& ctx = new_ctx(sub);
    auto offset = std::make_shared<long>(0);
    bind_opt(sub, ctx, "--captions", &ham::PipelineConfig::captions, "input caption JSONL");
    bind_opt(sub, ctx, "--assignment", &ham::PipelineConfig::assignment,
         "assignment JSONL");
    bind_opt(sub, ctx, "--output", &ham::PipelineConfig::output, "labeled caption JSONL");
    sub->add_option("--offset", *offset, "label id offset for this assignment");
    sub->callback([&ctx, offset]() {
        const ham::PipelineConfig cfg = ctx.resolve();
        need(cfg.captions, "--captions");
        need(cfg.assignment, "--assignment");
        need(cfg.output, "--output");
        if (*offset < 0) throw ham::ArgumentError("offset must be >= 0");
        const std::vector<ham::CaptionRecord> records =
            ham::read_captions(cfg.captions);
        const ham::Assignment assignment = ham::read_assignment(cfg.assignment);
        const std::vector<ham::CaptionRecord> labeled =
            ham::label_dataset(records, assignment, static_cast<int>(*offset));
        ham::write_captions(labeled, cfg.output);
        std::printf("labeled %zu captions with %zu clusters (offset %ld) -> %s\n",
                    labeled.size(), assignment.cluster_count(), *offset,
                    cfg.output.c_str());
    });
}

void setup_train_toy(CLI::App& app) {
    CLI::App* sub = app.add_subcommand(
        "train-toy", "fit the toy prompt model on a labeled dataset");
    Ctx& ctx = new_ctx(sub);
    struct Extra {
        long k = 0;  // 0 infers max label + 1
        long vocab = 64;
        long embed_dim = 16;
        double lr = 0.1;
        long epochs = 5;
    };
    auto extra = std::make_shared<Extra>();
    bind_opt(sub, ctx, "--captions", &ham::PipelineConfig::captions,
         "labeled caption JSONL");
    bind_opt(sub, ctx, "--features", &ham::PipelineConfig::features,
         "context feature matrix, one row per caption");
    bind_opt(sub, ctx, "--m", &ham::PipelineConfig::m, "prompt tokens per style");
    bind_opt(sub, ctx, "--seed", &ham::PipelineConfig::seed, "init and shuffle seed");
    bind_opt(sub, ctx, "--output", &ham::PipelineConfig::output, "checkpoint directory");
    sub->add_option("--k", extra->k, "style count (0 = infer from labels)");
    sub->add_option("--vocab", extra->vocab, "token vocabulary size");
    sub->add_option("--embed-dim", extra->embed_dim, "hidden width");
    sub->add_option("--lr", extra->lr, "SGD learning rate");
    sub->add_option("--epochs", extra->epochs, "training epochs");
    sub->callback([&ctx, extra]() {
        const ham::PipelineConfig cfg = ctx.resolve();
        need(cfg.captions, "--captions");
        need(cfg.features, "--features");
        need(cfg.output, "--output");
        if (extra->vocab < 2) throw ham::ArgumentError("vocab must be >= 2");
        if (extra->embed_dim < 1) throw ham::ArgumentError("embed-dim must be >= 1");
        if (extra->epochs < 1) throw ham::ArgumentError("epochs must be >= 1");
        if (cfg.m < 1) throw ham::ArgumentError("m must be >= 1");

        const std::vector<ham::CaptionRecord> records =
            ham::read_captions(cfg.captions);
        const ham::FeatureMatrix features = ham::read_matrix(cfg.features);
        if (features.rows != records.size())
            throw ham::ValidationError("feature rows (" +
                                       std::to_string(features.rows) +
                                       ") do not match caption count (" +
                                       std::to_string(records.size()) + ")");

        long max_label = -1;
        for (const auto& rec : records)
            for (long l : rec.style_labels) max_label = std::max(max_label, l);
        if (max_label < 0)
            throw ham::ValidationError("no style labels in the dataset");
        const size_t styles = extra->k > 0 ? static_cast<size_t>(extra->k)
                                           : static_cast<size_t>(max_label + 1);

        std::vector<ham::TrainSample> samples;
        for (size_t i = 0; i < records.size(); ++i) {
            const std::vector<int> tokens = ham::tokenize_words(
                records[i].text, static_cast<size_t>(extra->vocab));
            std::vector<double> context(features.cols);
            for (size_t j = 0; j < features.cols; ++j)
                context[j] = features.at(i, j);
            for (long l : records[i].style_labels) {
                ham::TrainSample s;
                s.context = context;
                s.tokens = tokens;
                s.style = static_cast<int>(l);
                samples.push_back(std::move(s));
            }
        }
        if (samples.empty())
            throw ham::ValidationError("no labeled samples to train on");

        ham::ToyPromptModel model = ham::ToyPromptModel::init(
            static_cast<size_t>(extra->vocab), static_cast<size_t>(extra->embed_dim),
            static_cast<size_t>(cfg.m), styles, features.cols, cfg.seed);
        const std::vector<double> trace = ham::train(
            model, samples, extra->lr, static_cast<size_t>(extra->epochs), cfg.seed);
        ham::save_checkpoint(model, cfg.output);
        nlohmann::json tj;
        tj["epoch_loss"] = trace;
        std::ofstream out(std::filesystem::path(cfg.output) / "loss_trace.json",
                          std::ios::binary | std::ios::trunc);
        if (!out) throw ham::IoError("cannot write loss trace in " + cfg.output);
        out << tj.dump() << '\n';
        std::printf("trained %zu samples, %zu styles, %ld epochs\n", samples.size(),
                    styles, extra->epochs);
        for (size_t e = 0; e < trace.size(); ++e)
            std::printf("epoch %zu loss=%.6f\n", e, trace[e]);
    });
}

void setup_sdm_check(CLI::App& app) {
    CLI::App* sub = app.add_subcommand(
        "sdm-check", "similarity distribution matching loss and gradient check");
    Ctx& ctx = new_ctx(sub);
    struct Extra {
        std::string image_feats, text_feats, match;
        long trials = 20;
        long batch = 8;
        long dim = 16;
        double step = 1e-5;
        double threshold = 1e-4;
    };
    auto extra = std::make_shared<Extra>();
    bind_opt(sub, ctx, "--tau", &ham::PipelineConfig::tau, "similarity temperature");
    bind_opt(sub, ctx, "--epsilon", &ham::PipelineConfig::epsilon,
         "KL denominator guard");
    bind_opt(sub, ctx, "--seed", &ham::PipelineConfig::seed, "random batch seed");
    sub->add_option("--image-feats", extra->image_feats,
                    "image feature matrix (omit for the random suite)");
    sub->add_option("--text-feats", extra->text_feats, "text feature matrix");
    sub->add_option("--match", extra->match, "JSON 0/1 match matrix");
    sub->add_option("--trials", extra->trials, "random batches to check");
    sub->add_option("--batch", extra->batch, "random batch size");
    sub->add_option("--dim", extra->dim, "random feature width");
    sub->add_option("--step", extra->step, "finite difference step");
    sub->add_option("--threshold", extra->threshold,
                    "max tolerated relative gradient error");
    sub->callback([&ctx, extra]() {
        const ham::PipelineConfig cfg = ctx.resolve();
        if (!extra->image_feats.empty()) {
            need(extra->text_feats, "--text-feats");
            need(extra->match, "--match");
            const ham::SdmBatch batch =
                ham::load_sdm_batch(extra->image_feats, extra->text_feats,
                                    extra->match, cfg.tau, cfg.epsilon);
            const ham::SdmResult res = ham::sdm_loss(batch);
            const double rel = ham::sdm_grad_check(batch, extra->step);
            std::printf("loss=%.8f i2t=%.8f t2i=%.8f max_rel_err=%.3e\n", res.loss,
                        res.loss_i2t, res.loss_t2i, rel);
            if (rel > extra->threshold)
                throw ham::NumericError("gradient check failed: max_rel_err=" +
                                        std::to_string(rel));
            return;
        }
        if (extra->trials < 1 || extra->batch < 1 || extra->dim < 1)
            throw ham::ArgumentError("trials, batch and dim must be >= 1");
        ham::Rng rng(cfg.seed);
        const size_t b = static_cast<size_t>(extra->batch);
        const size_t d = static_cast<size_t>(extra->dim);
        double worst = 0.0;
        for (long t = 0; t < extra->trials; ++t) {
            ham::SdmBatch batch;
            batch.batch = b;
            batch.dim = d;
            batch.tau = cfg.tau;
            batch.epsilon = cfg.epsilon;
            batch.image_feats.resize(b * d);
            batch.text_feats.resize(b * d);
            for (auto& v : batch.image_feats) v = rng.uniform(-1.0, 1.0);
            for (auto& v : batch.text_feats) v = rng.uniform(-1.0, 1.0);
            // even trials pair consecutive rows into shared identities,
            // odd trials use the plain diagonal
            batch.match.assign(b * b, 0);
            for (size_t i = 0; i < b; ++i)
                for (size_t j = 0; j < b; ++j)
                    batch.match[i * b + j] =
                        (t % 2 == 0 ? i / 2 == j / 2 : i == j) ? 1 : 0;
            worst = std::max(worst, ham::sdm_grad_check(batch, extra->step));
        }
        std::printf("trials=%ld batch=%zu dim=%zu max_rel_err=%.3e\n", extra->trials,
                    b, d, worst);
        if (worst > extra->threshold)
            throw ham::NumericError("gradient check failed: max_rel_err=" +
                                    std::to_string(worst));
        std::printf("gradient check ok (threshold %.1e)\n", extra->threshold);
    });
}

void setup_eval(CLI::App& app) {
    CLI::App* sub =
        app.add_subcommand("eval", "retrieval metrics from scores and relevance");
    Ctx& ctx = new_ctx(sub);
    struct Extra {
        std::string scores, relevance;
    };
    auto extra = std::make_shared<Extra>();
    sub->add_option("--scores", extra->scores, "query x gallery score matrix");
    sub->add_option("--relevance", extra->relevance, "relevance JSONL");
    bind_opt(sub, ctx, "--output", &ham::PipelineConfig::output,
         "optional metrics JSON output");
    sub->callback([&ctx, extra]() {
        const ham::PipelineConfig cfg = ctx.resolve();
        need(extra->scores, "--scores");
        need(extra->relevance, "--relevance");
        const ham::FeatureMatrix scores = ham::read_matrix(extra->scores);
        ham::EvalSet eval;
        eval.queries = scores.rows;
        eval.gallery = scores.cols;
        eval.scores = scores.data;
        eval.relevance =
            ham::read_relevance(extra->relevance, eval.queries, eval.gallery);
        const nlohmann::json metrics = ham::metrics_report(eval);
        std::printf("rank1=%.6f rank5=%.6f rank10=%.6f map=%.6f\n",
                    metrics["rank1"].get<double>(), metrics["rank5"].get<double>(),
                    metrics["rank10"].get<double>(), metrics["map"].get<double>());
        if (!cfg.output.empty()) {
            std::ofstream out(cfg.output, std::ios::binary | std::ios::trunc);
            if (!out) throw ham::IoError("cannot write metrics file: " + cfg.output);
            out << metrics.dump() << '\n';
        }
    });
}

int exit_code_for(const std::string& kind) {
    if (kind == "io") return 2;
    if (kind == "numeric") return 3;
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"caption style pipeline"};
    app.require_subcommand(1);
    setup_mask(app);
    setup_embed(app);
    setup_stats(app);
    setup_kmeans(app);
    setup_ups(app);
    setup_dbscan(app);
    setup_label(app);
    setup_train_toy(app);
    setup_sdm_check(app);
    setup_eval(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "kind=argument msg=\"" << e.what() << "\"\n";
        return 1;
    } catch (const ham::Error& e) {
        std::cerr << "kind=" << e.kind() << " msg=\"" << e.what() << "\"\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "kind=internal msg=\"" << e.what() << "\"\n";
        return 1;
    }
    return 0;
}
