#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "oracle/data.hpp"
#include "oracle/losses.hpp"
#include "oracle/model.hpp"

namespace oracle {

enum class ValidationMetric { TotalLoss, SemanticRetrievalAcc };

const char* metric_name(ValidationMetric m);
ValidationMetric metric_from_name(const std::string& s);

struct TrainConfig {
    double learning_rate = 1e-5;
    Index batch_size = 512;
    std::int64_t max_iterations = 10000;  // iteration = one optimizer step
    int patience = 10;                    // consecutive non-improving evaluations
    std::uint64_t seed = 0;
    ValidationMetric validation_metric = ValidationMetric::TotalLoss;
    std::int64_t eval_every = 0;  // 0 = one epoch-equivalent (batches per epoch)

    void validate() const;
};

struct AdamState {
    ModelParams m, v;  // first/second moment accumulators, shaped like the params
    std::int64_t t = 0;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    static AdamState init(const ModelParams& params);
};

// Bias-corrected Adam. Aborts with the parameter path on a non-finite
// gradient.
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr);

struct LossCurvePoint {
    std::int64_t iteration;
    LossBreakdown breakdown;
};

struct TrainReport {
    std::int64_t iterations_run = 0;
    double best_validation_value = 0.0;
    std::int64_t best_iteration = 0;
    std::vector<LossCurvePoint> loss_curve;  // downsampled to <= 1000 points
    std::vector<std::pair<std::int64_t, double>> eval_curve;
    std::string stop_reason;  // "max_iterations" or "early_stopped"
};

// One optimizer step; returns the pre-update loss breakdown.
LossBreakdown train_step(ModelParams& params, AdamState& state, const Matrix& e_s,
                         const Matrix& e_t, const TrainConfig& tc, const LossConfig& lc,
                         const std::vector<int>& labels);

// Mini-batch training with validation-driven early stopping. Multiple train
// corpora are interleaved round-robin per batch. Evaluates at iteration 0
// first, then every eval_every steps; keeps the best parameters seen and
// returns them (not the final iterate). Improvement must beat the incumbent
// by more than 1e-6.
std::pair<ModelParams, TrainReport> fit(const std::vector<EmbeddingCorpus>& train_corpora,
                                        const EmbeddingCorpus& val_corpus,
                                        const TrainConfig& tc, const LossConfig& lc,
                                        const ModelParams& init);

std::string train_report_to_json(const TrainReport& report);

// Language-id -> label index mapping shared by trainer and CLI: indices follow
// the sorted order of the distinct language ids present.
std::vector<std::uint16_t> collect_language_ids(const std::vector<EmbeddingCorpus>& corpora);
std::vector<int> corpus_labels(const EmbeddingCorpus& corpus,
                               const std::vector<std::uint16_t>& registry, Index n_rows);

}  // namespace oracle
