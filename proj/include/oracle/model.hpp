#pragma once

#include <string>
#include <vector>

#include "oracle/numerics.hpp"
#include "oracle/types.hpp"

namespace oracle {

// A stack of affine layers with the activation applied after every layer
// except the last. First in-dim and last out-dim both equal d.
struct MlpParams {
    std::vector<Matrix> W;
    std::vector<Vector> b;
    Activation activation = Activation::Tanh;
};

struct ClassifierHead {
    Matrix W;  // d x L
    Vector b;  // L
};

// The two extraction networks plus the two language classifiers.
// lang_head reads language embeddings; adv_head reads semantic embeddings
// through gradient reversal.
struct ModelParams {
    MlpParams mlp_m, mlp_l;
    ClassifierHead lang_head, adv_head;
    int d = 0;
    int L = 0;
};

// The four extracted representations of one aligned batch, with the original
// embeddings cached for the reconstruction terms.
struct DisentangledBatch {
    Matrix s_m, s_l, t_m, t_l;
    Matrix e_s, e_t;
};

// Per-layer inputs and pre-activations retained for the backward pass.
struct MlpCache {
    std::vector<Matrix> inputs;   // input to every layer
    std::vector<Matrix> preacts;  // pre-activation of every non-final layer
};

struct ForwardCaches {
    MlpCache m_src, m_tgt, l_src, l_tgt;
};

// Cotangents entering the model from the loss side. Zero-sized matrices mean
// "no gradient from this output". The logits cotangents carry the classifier
// paths; adversarial feature gradients are reversed with factor lambda.
struct LossGrads {
    Matrix ds_m, ds_l, dt_m, dt_l;
    Matrix d_lang_logits;  // 2N x L, rows [source; target] over s_l/t_l
    Matrix d_adv_logits;   // 2N x L, rows [source; target] over s_m/t_m
    double lambda = 1.0;
};

ModelParams init_model(std::uint64_t seed, int d, const std::vector<int>& hidden_layers,
                       int L, Activation activation = Activation::Tanh);

ModelParams zeros_like(const ModelParams& p);

Matrix mlp_forward(const MlpParams& mlp, const Matrix& X, MlpCache* cache = nullptr);

// Accumulates layer gradients into grad_accum (shaped like mlp); returns dX.
Matrix mlp_backward(const MlpParams& mlp, const MlpCache& cache, const Matrix& dY,
                    MlpParams& grad_accum);

DisentangledBatch disentangle_forward(const ModelParams& params, const Matrix& e_s,
                                      const Matrix& e_t, ForwardCaches* caches = nullptr);

// Element-wise sum; the model's reconstruction primitive.
Matrix reconstruct(const Matrix& m, const Matrix& l);

Matrix classify_logits(const ClassifierHead& head, const Matrix& X);

struct ClassifyBackward {
    Matrix dX;
    Matrix dW;
    Vector db;
};

// Head gradients are always the true gradients; the gradient into X is
// negated and scaled by lambda when reverse_grad is set. Forward values are
// unaffected by the flag.
ClassifyBackward classify_backward(const ClassifierHead& head, const Matrix& X,
                                   const Matrix& dlogits, bool reverse_grad, double lambda);

// Chains the cotangents through both MLPs and both heads; gradients from the
// source and target paths of a shared MLP are summed. Returns a gradient set
// shaped exactly like ModelParams.
ModelParams model_backward(const ModelParams& params, const ForwardCaches& caches,
                           const DisentangledBatch& batch, const LossGrads& lg);

// Flat named view over every parameter tensor, in a fixed order. Used by the
// optimizer, the checkpointer, and the finite-difference harness.
struct TensorRef {
    std::string path;
    double* data;
    Index size;
};

std::vector<TensorRef> tensor_refs(ModelParams& p);

}  // namespace oracle
