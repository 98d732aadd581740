#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "oracle/model.hpp"
#include "oracle/types.hpp"

namespace oracle {

// The eight loss terms. R/CR reconstruct, S aligns semantics, Lm clusters
// language embeddings in L2, Li classifies them, A is the adversarial
// classifier on semantics, IC/IS are the cosine clustering/separation pair.
enum class Term { R, CR, S, Lm, Li, A, IC, IS };

const char* term_name(Term t);
Term term_from_name(const std::string& s);
const std::vector<Term>& all_terms();

enum class Preset { Dream, Meat, DreamOracle, MeatOracle, OracleOnly, Custom };

const char* preset_name(Preset p);
// Accepts "dream", "meat", "dream+oracle", "meat+oracle", "oracle_only" and
// the CLI spelling "oracle" for the stand-alone objective.
Preset preset_from_name(const std::string& s);

struct LossConfig {
    Preset preset = Preset::MeatOracle;
    std::set<Term> enabled_terms;
    std::map<Term, double> weights;  // absent key = 1.0 for an enabled term
    double adversarial_lambda = 1.0;

    static LossConfig from_preset(Preset p);
    static LossConfig from_name(const std::string& preset);

    double weight(Term t) const;
    bool enabled(Term t) const { return enabled_terms.count(t) != 0; }
    void validate() const;
};

struct LossBreakdown {
    std::map<Term, double> values;  // unweighted per-term values
    double total = 0.0;             // sum of weight * value over enabled terms
    double classifier_accuracy = 0.0;
};

enum class PairingMode { Cyclic, AllPairs };

// Cyclic: (i, i+1 mod N), N pairs, O(N), every row participates --- the
// training default. AllPairs: i<j, for small-N tests.
std::vector<std::pair<Index, Index>> make_pairing(Index N, PairingMode mode);

// --- individual terms -------------------------------------------------------
// Each returns the unweighted value; when grads is non-null the weighted
// gradient contribution is accumulated into it. The classifier terms emit
// logits cotangents instead (they reach the features via model_backward).

struct BatchGrads {
    Matrix ds_m, ds_l, dt_m, dt_l;
    static BatchGrads zero(Index n, Index d);
};

double loss_reconstruction(const DisentangledBatch& b, double w, BatchGrads* grads);
double loss_cross_reconstruction(const DisentangledBatch& b, double w, BatchGrads* grads);
double loss_semantic(const DisentangledBatch& b, double w, BatchGrads* grads);
double loss_language_embed(const DisentangledBatch& b, double w, BatchGrads* grads);
double loss_language_classify(const DisentangledBatch& b, const ClassifierHead& head,
                              const std::vector<int>& labels, double w, Matrix* d_logits,
                              double* accuracy);
double loss_adversarial(const DisentangledBatch& b, const ClassifierHead& head,
                        const std::vector<int>& labels, double w, Matrix* d_logits,
                        double* accuracy);
double loss_intra_class(const DisentangledBatch& b,
                        const std::vector<std::pair<Index, Index>>& pairing, double w,
                        BatchGrads* grads);
double loss_inter_class(const DisentangledBatch& b, double w, BatchGrads* grads);

// --- composition ------------------------------------------------------------

// Forward (and backward when grads_out is non-null) of the configured
// objective on one aligned batch. labels has 2N entries: language index of
// each source row, then of each target row. Disabled terms are neither
// computed nor contribute; zero-weight enabled terms are computed but
// contribute nothing to total or gradients.
LossBreakdown compose_objective(const ModelParams& params, const Matrix& e_s,
                                const Matrix& e_t, const LossConfig& cfg,
                                const std::vector<int>& labels,
                                PairingMode pairing = PairingMode::Cyclic,
                                ModelParams* grads_out = nullptr,
                                DisentangledBatch* batch_out = nullptr);

// --- finite-difference verification ------------------------------------------

struct FdCheckResult {
    double max_rel_error = 0.0;
    std::string worst_path;
};

// Central-difference check of compose_objective's analytic gradients,
// tensor by tensor. The reversal makes the analytic gradient of the semantic
// extractor the gradient of a different scalar (the adversarial term enters
// it with factor -lambda), so each tensor is differenced against the scalar
// its own gradient is defined by.
FdCheckResult fd_check_objective(const ModelParams& params, const Matrix& e_s,
                                 const Matrix& e_t, const LossConfig& cfg,
                                 const std::vector<int>& labels,
                                 PairingMode pairing = PairingMode::Cyclic,
                                 double h = 1e-5);

// Smallest |cos(m_i, l_i)| over both languages. Instances near the separation
// hinge are non-differentiable; FD callers resample them away.
double is_kink_margin(const ModelParams& params, const Matrix& e_s, const Matrix& e_t);

}  // namespace oracle
