#pragma once

#include <string>
#include <vector>

#include "oracle/data.hpp"
#include "oracle/model.hpp"
#include "oracle/types.hpp"

namespace oracle {

struct RetrievalResult {
    std::vector<Index> predicted;  // argmax candidate per query, ties to lowest index
    std::vector<char> correct;     // predicted == query index
    double accuracy = 0.0;
};

// Exhaustive cosine scoring, explicit double loop with left-to-right sums so
// results are exactly reproducible (and exactly match an independent oracle
// using the same summation order). Ground truth is index identity.
RetrievalResult retrieval_accuracy(const Matrix& queries, const Matrix& candidates);

// Fractional (average-tie) ranks, 1-based.
Vector fractional_ranks(const Vector& x);

double pearson(const Vector& x, const Vector& y);

// Pearson correlation of fractional ranks. Constant input -> DataError
// (undefined correlation), never a silent 0.
double spearman_rho(const Vector& x, const Vector& y);

enum class Representation { Semantic, Language, Original };

Representation representation_from_name(const std::string& s);

// Cosine similarity of the chosen representation per pair, rank-correlated
// against the gold scores.
double sts_eval(const EmbeddingCorpus& corpus, const ModelParams& params,
                Representation rep);

struct LeakageReport {
    double mean_abs_inter_cos = 0.0;  // mean |cos(m_i, l_i)| over both sides
    double intra_src = 0.0;           // mean pairwise cos within s_l rows
    double intra_tgt = 0.0;           // mean pairwise cos within t_l rows
};

// Intra-language pairs are exhaustive for N <= 512 and cyclic above.
LeakageReport leakage_report(const DisentangledBatch& batch);

struct EvalReport {
    double semantic_acc_fwd = 0.0, semantic_acc_bwd = 0.0;
    double language_acc_fwd = 0.0, language_acc_bwd = 0.0;
    double sts_rho_semantic = 0.0, sts_rho_language = 0.0;
    bool has_sts = false;
    double mean_abs_inter_cos = 0.0;
    double intra_lang_mean_cos_src = 0.0, intra_lang_mean_cos_tgt = 0.0;
};

// Fills every report field. "fwd" treats source rows as queries.
EvalReport evaluate_suite(const EmbeddingCorpus& test_corpus,
                          const EmbeddingCorpus* sts_corpus, const ModelParams& params);

// Fixed-width table in the Semantic(up)/Language(down) layout.
std::string format_report_table(const EvalReport& r);

std::string report_to_json(const EvalReport& r);

}  // namespace oracle
