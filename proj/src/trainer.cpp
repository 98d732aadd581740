#include "oracle/trainer.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "oracle/eval.hpp"
#include "oracle/rng.hpp"

namespace oracle {

const char* metric_name(ValidationMetric m) {
    return m == ValidationMetric::TotalLoss ? "total_loss" : "semantic_retrieval_acc";
}

ValidationMetric metric_from_name(const std::string& s) {
    if (s == "total_loss") return ValidationMetric::TotalLoss;
    if (s == "semantic_retrieval_acc") return ValidationMetric::SemanticRetrievalAcc;
    throw DataError("unknown validation metric \"" + s + "\"");
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0)) throw DataError("learning_rate must be > 0");
    if (batch_size < 2) throw DataError("batch_size must be >= 2");
    if (patience < 1) throw DataError("patience must be >= 1");
    if (max_iterations < 0) throw DataError("max_iterations must be >= 0");
    if (eval_every < 0) throw DataError("eval_every must be >= 0");
}

AdamState AdamState::init(const ModelParams& params) {
    AdamState st;
    st.m = zeros_like(params);
    st.v = zeros_like(params);
    return st;
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr) {
    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    std::vector<TensorRef> p = tensor_refs(params);
    std::vector<TensorRef> g = tensor_refs(const_cast<ModelParams&>(grads));
    std::vector<TensorRef> m = tensor_refs(state.m);
    std::vector<TensorRef> v = tensor_refs(state.v);
    for (std::size_t k = 0; k < p.size(); ++k) {
        if (p[k].size != g[k].size)
            throw DataError("adam_step: gradient shape mismatch at " + p[k].path);
        for (Index i = 0; i < p[k].size; ++i) {
            const double gi = g[k].data[i];
            if (!std::isfinite(gi))
                throw NumericError("adam_step: non-finite gradient in " + p[k].path +
                                   "[" + std::to_string(i) + "]");
            m[k].data[i] = state.beta1 * m[k].data[i] + (1.0 - state.beta1) * gi;
            v[k].data[i] = state.beta2 * v[k].data[i] + (1.0 - state.beta2) * gi * gi;
            const double mhat = m[k].data[i] / bc1;
            const double vhat = v[k].data[i] / bc2;
            p[k].data[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

LossBreakdown train_step(ModelParams& params, AdamState& state, const Matrix& e_s,
                         const Matrix& e_t, const TrainConfig& tc, const LossConfig& lc,
                         const std::vector<int>& labels) {
    ModelParams grads = zeros_like(params);
    LossBreakdown bd =
        compose_objective(params, e_s, e_t, lc, labels, PairingMode::Cyclic, &grads);
    if (!std::isfinite(bd.total))
        throw NumericError("train_step: non-finite total loss " + std::to_string(bd.total));
    adam_step(params, grads, state, tc.learning_rate);
    return bd;
}

std::vector<std::uint16_t> collect_language_ids(const std::vector<EmbeddingCorpus>& corpora) {
    std::vector<std::uint16_t> ids;
    for (const auto& c : corpora) {
        ids.push_back(c.src_lang);
        ids.push_back(c.tgt_lang);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

std::vector<int> corpus_labels(const EmbeddingCorpus& corpus,
                               const std::vector<std::uint16_t>& registry, Index n_rows) {
    auto idx_of = [&](std::uint16_t id) {
        const auto it = std::lower_bound(registry.begin(), registry.end(), id);
        if (it == registry.end() || *it != id)
            throw DataError("language id " + std::to_string(id) + " not in registry");
        return static_cast<int>(it - registry.begin());
    };
    std::vector<int> labels(static_cast<std::size_t>(2 * n_rows));
    std::fill(labels.begin(), labels.begin() + n_rows, idx_of(corpus.src_lang));
    std::fill(labels.begin() + n_rows, labels.end(), idx_of(corpus.tgt_lang));
    return labels;
}

namespace {

double evaluate_metric(const ModelParams& params, const EmbeddingCorpus& val,
                       const LossConfig& lc, const std::vector<int>& labels,
                       ValidationMetric metric) {
    if (metric == ValidationMetric::SemanticRetrievalAcc) {
        const Matrix qm = mlp_forward(params.mlp_m, val.src);
        const Matrix cm = mlp_forward(params.mlp_m, val.tgt);
        return retrieval_accuracy(qm, cm).accuracy;
    }
    return compose_objective(params, val.src, val.tgt, lc, labels).total;
}

nlohmann::json breakdown_to_json(const LossBreakdown& bd) {
    nlohmann::json terms = nlohmann::json::object();
    for (const auto& [t, v] : bd.values) terms[term_name(t)] = v;
    return {{"total", bd.total},
            {"terms", terms},
            {"classifier_accuracy", bd.classifier_accuracy}};
}

}  // namespace

std::pair<ModelParams, TrainReport> fit(const std::vector<EmbeddingCorpus>& train_corpora,
                                        const EmbeddingCorpus& val_corpus,
                                        const TrainConfig& tc, const LossConfig& lc,
                                        const ModelParams& init) {
    tc.validate();
    lc.validate();
    if (train_corpora.empty()) throw DataError("fit: empty training corpus list");
    for (const auto& c : train_corpora)
        if (c.n() == 0) throw DataError("fit: empty training corpus");
    if (val_corpus.n() == 0) throw DataError("fit: empty validation corpus");
    const Index d = train_corpora.front().dim();
    for (const auto& c : train_corpora)
        if (c.dim() != d) throw DataError("fit: training corpora disagree on d");
    if (val_corpus.dim() != d) throw DataError("fit: validation corpus d mismatch");

    std::vector<EmbeddingCorpus> all = train_corpora;
    all.push_back(val_corpus);
    const std::vector<std::uint16_t> registry = collect_language_ids(all);
    if (static_cast<int>(registry.size()) > init.L)
        throw DataError("fit: " + std::to_string(registry.size()) +
                        " distinct languages exceed model L=" + std::to_string(init.L));
    const std::vector<int> val_labels = corpus_labels(val_corpus, registry, val_corpus.n());

    // Epoch-equivalent: total number of batches one pass over all corpora yields.
    std::int64_t batches_per_epoch = 0;
    for (const auto& c : train_corpora)
        batches_per_epoch +=
            static_cast<std::int64_t>(batch_iter(c.n(), tc.batch_size, tc.seed, 0).size());
    if (batches_per_epoch == 0)
        throw DataError("fit: no usable batches (every corpus smaller than 2 rows?)");
    const std::int64_t eval_every =
        tc.eval_every > 0 ? tc.eval_every : std::max<std::int64_t>(1, batches_per_epoch);
    const std::int64_t curve_stride = std::max<std::int64_t>(1, (tc.max_iterations + 999) / 1000);

    ModelParams params = init;
    AdamState state = AdamState::init(params);
    TrainReport report;

    auto evaluate = [&](const ModelParams& p) {
        return evaluate_metric(p, val_corpus, lc, val_labels, tc.validation_metric);
    };
    const bool maximize = tc.validation_metric == ValidationMetric::SemanticRetrievalAcc;

    double best = evaluate(params);
    ModelParams best_params = params;
    std::int64_t best_iter = 0;
    report.eval_curve.emplace_back(0, best);

    int bad_evals = 0;
    std::int64_t iter = 0;
    report.stop_reason = "max_iterations";
    // Per-corpus decorrelated shuffle streams, reproducible from (seed, epoch).
    auto corpus_seed = [&](std::size_t c) {
        return tc.seed ^ (0xBF58476D1CE4E5B9ULL * static_cast<std::uint64_t>(c + 1));
    };

    bool done = tc.max_iterations == 0;
    for (std::uint64_t epoch = 0; !done; ++epoch) {
        std::vector<std::vector<std::vector<Index>>> sched;
        std::size_t max_batches = 0;
        for (std::size_t c = 0; c < train_corpora.size(); ++c) {
            sched.push_back(
                batch_iter(train_corpora[c].n(), tc.batch_size, corpus_seed(c), epoch));
            max_batches = std::max(max_batches, sched.back().size());
        }
        for (std::size_t k = 0; k < max_batches && !done; ++k) {
            for (std::size_t c = 0; c < train_corpora.size() && !done; ++c) {
                if (k >= sched[c].size()) continue;
                const EmbeddingCorpus batch = take_rows(train_corpora[c], sched[c][k]);
                const std::vector<int> labels = corpus_labels(batch, registry, batch.n());
                const LossBreakdown bd =
                    train_step(params, state, batch.src, batch.tgt, tc, lc, labels);
                ++iter;
                if (iter == 1 || iter % curve_stride == 0)
                    report.loss_curve.push_back({iter, bd});

                if (iter % eval_every == 0) {
                    const double v = evaluate(params);
                    report.eval_curve.emplace_back(iter, v);
                    const bool improved = maximize ? v > best + 1e-6 : v < best - 1e-6;
                    if (improved) {
                        best = v;
                        best_iter = iter;
                        best_params = params;
                        bad_evals = 0;
                    } else if (++bad_evals >= tc.patience) {
                        report.stop_reason = "early_stopped";
                        done = true;
                    }
                }
                if (iter >= tc.max_iterations) done = true;
            }
        }
    }

    report.iterations_run = iter;
    report.best_validation_value = best;
    report.best_iteration = best_iter;
    return {std::move(best_params), std::move(report)};
}

std::string train_report_to_json(const TrainReport& report) {
    nlohmann::json j;
    j["iterations_run"] = report.iterations_run;
    j["best_validation_value"] = report.best_validation_value;
    j["best_iteration"] = report.best_iteration;
    j["stop_reason"] = report.stop_reason;
    nlohmann::json curve = nlohmann::json::array();
    for (const auto& pt : report.loss_curve) {
        nlohmann::json e = breakdown_to_json(pt.breakdown);
        e["iteration"] = pt.iteration;
        curve.push_back(std::move(e));
    }
    j["loss_curve"] = std::move(curve);
    nlohmann::json evals = nlohmann::json::array();
    for (const auto& [it, v] : report.eval_curve) evals.push_back({it, v});
    j["eval_curve"] = std::move(evals);
    return j.dump(2);
}

}  // namespace oracle
