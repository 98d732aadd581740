#include "oracle/model.hpp"

#include <cmath>

#include "oracle/rng.hpp"

namespace oracle {

namespace {

Matrix glorot(Rng& rng, Index fan_in, Index fan_out) {
    const double lim = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix W(fan_in, fan_out);
    for (Index i = 0; i < fan_in; ++i)
        for (Index j = 0; j < fan_out; ++j) W(i, j) = rng.uniform_in(-lim, lim);
    return W;
}

MlpParams init_mlp(Rng& rng, int d, const std::vector<int>& hidden, Activation act) {
    std::vector<Index> dims;
    dims.push_back(d);
    for (int h : hidden) {
        if (h < 1) throw DataError("init_model: hidden width must be >= 1");
        dims.push_back(h);
    }
    dims.push_back(d);
    MlpParams mlp;
    mlp.activation = act;
    for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
        mlp.W.push_back(glorot(rng, dims[k], dims[k + 1]));
        mlp.b.push_back(Vector::Zero(dims[k + 1]));
    }
    return mlp;
}

void check_mlp_chain(const MlpParams& mlp, int d, const char* name) {
    if (mlp.W.empty() || mlp.W.size() != mlp.b.size())
        throw DataError(std::string(name) + ": empty or inconsistent layer list");
    if (mlp.W.front().rows() != d || mlp.W.back().cols() != d)
        throw DataError(std::string(name) + ": first in-dim and last out-dim must equal d");
    for (std::size_t k = 0; k < mlp.W.size(); ++k) {
        if (mlp.b[k].size() != mlp.W[k].cols())
            throw DataError(std::string(name) + ": bias length mismatch at layer " +
                            std::to_string(k));
        if (k + 1 < mlp.W.size() && mlp.W[k].cols() != mlp.W[k + 1].rows())
            throw DataError(std::string(name) + ": layer shapes do not chain at " +
                            std::to_string(k));
    }
}

}  // namespace

ModelParams init_model(std::uint64_t seed, int d, const std::vector<int>& hidden_layers,
                       int L, Activation activation) {
    if (d < 1) throw DataError("init_model: d must be >= 1");
    if (L < 2) throw DataError("init_model: L must be >= 2");
    Rng rng(seed);
    ModelParams p;
    p.d = d;
    p.L = L;
    p.mlp_m = init_mlp(rng, d, hidden_layers, activation);
    p.mlp_l = init_mlp(rng, d, hidden_layers, activation);
    p.lang_head.W = glorot(rng, d, L);
    p.lang_head.b = Vector::Zero(L);
    p.adv_head.W = glorot(rng, d, L);
    p.adv_head.b = Vector::Zero(L);
    check_mlp_chain(p.mlp_m, d, "mlp_m");
    check_mlp_chain(p.mlp_l, d, "mlp_l");
    return p;
}

ModelParams zeros_like(const ModelParams& p) {
    ModelParams z = p;
    for (auto& W : z.mlp_m.W) W.setZero();
    for (auto& b : z.mlp_m.b) b.setZero();
    for (auto& W : z.mlp_l.W) W.setZero();
    for (auto& b : z.mlp_l.b) b.setZero();
    z.lang_head.W.setZero();
    z.lang_head.b.setZero();
    z.adv_head.W.setZero();
    z.adv_head.b.setZero();
    return z;
}

Matrix mlp_forward(const MlpParams& mlp, const Matrix& X, MlpCache* cache) {
    if (mlp.W.empty()) throw DataError("mlp_forward: no layers");
    if (X.cols() != mlp.W.front().rows())
        throw DataError("mlp_forward: input dim " + std::to_string(X.cols()) +
                        " vs layer dim " + std::to_string(mlp.W.front().rows()));
    if (cache) {
        cache->inputs.clear();
        cache->preacts.clear();
    }
    Matrix h = X;
    for (std::size_t k = 0; k < mlp.W.size(); ++k) {
        if (cache) cache->inputs.push_back(h);
        Matrix a = affine_forward(h, mlp.W[k], mlp.b[k]);
        if (k + 1 < mlp.W.size()) {
            if (cache) cache->preacts.push_back(a);
            h = activation_forward(mlp.activation, a);
        } else {
            h = std::move(a);
        }
    }
    return h;
}

Matrix mlp_backward(const MlpParams& mlp, const MlpCache& cache, const Matrix& dY,
                    MlpParams& grad_accum) {
    const std::size_t n = mlp.W.size();
    if (cache.inputs.size() != n || cache.preacts.size() + 1 != n)
        throw DataError("mlp_backward: cache does not match layer count");
    Matrix d = dY;
    for (std::size_t k = n; k-- > 0;) {
        if (k + 1 < n) d = activation_backward(mlp.activation, cache.preacts[k], d);
        AffineGrads<double> g = affine_backward(cache.inputs[k], mlp.W[k], d);
        grad_accum.W[k] += g.dW;
        grad_accum.b[k] += g.dbias;
        d = std::move(g.dX);
    }
    return d;
}

DisentangledBatch disentangle_forward(const ModelParams& params, const Matrix& e_s,
                                      const Matrix& e_t, ForwardCaches* caches) {
    if (e_s.cols() != params.d || e_t.cols() != params.d)
        throw DataError("disentangle_forward: embedding dim " + std::to_string(e_s.cols()) +
                        "/" + std::to_string(e_t.cols()) + " vs model d " +
                        std::to_string(params.d));
    if (e_s.rows() != e_t.rows())
        throw DataError("disentangle_forward: source/target row counts differ");
    DisentangledBatch b;
    b.e_s = e_s;
    b.e_t = e_t;
    b.s_m = mlp_forward(params.mlp_m, e_s, caches ? &caches->m_src : nullptr);
    b.s_l = mlp_forward(params.mlp_l, e_s, caches ? &caches->l_src : nullptr);
    b.t_m = mlp_forward(params.mlp_m, e_t, caches ? &caches->m_tgt : nullptr);
    b.t_l = mlp_forward(params.mlp_l, e_t, caches ? &caches->l_tgt : nullptr);
    return b;
}

Matrix reconstruct(const Matrix& m, const Matrix& l) {
    require_same_shape(m, l, "reconstruct");
    return m + l;
}

Matrix classify_logits(const ClassifierHead& head, const Matrix& X) {
    return affine_forward(X, head.W, head.b);
}

ClassifyBackward classify_backward(const ClassifierHead& head, const Matrix& X,
                                   const Matrix& dlogits, bool reverse_grad, double lambda) {
    AffineGrads<double> g = affine_backward(X, head.W, dlogits);
    ClassifyBackward out;
    out.dW = std::move(g.dW);
    out.db = std::move(g.dbias);
    out.dX = reverse_grad ? Matrix(-lambda * g.dX) : std::move(g.dX);
    return out;
}

ModelParams model_backward(const ModelParams& params, const ForwardCaches& caches,
                           const DisentangledBatch& batch, const LossGrads& lg) {
    const Index N = batch.e_s.rows();
    ModelParams grads = zeros_like(params);

    Matrix ds_m = lg.ds_m.size() ? lg.ds_m : Matrix::Zero(N, params.d);
    Matrix ds_l = lg.ds_l.size() ? lg.ds_l : Matrix::Zero(N, params.d);
    Matrix dt_m = lg.dt_m.size() ? lg.dt_m : Matrix::Zero(N, params.d);
    Matrix dt_l = lg.dt_l.size() ? lg.dt_l : Matrix::Zero(N, params.d);

    if (lg.d_lang_logits.size()) {
        if (lg.d_lang_logits.rows() != 2 * N || lg.d_lang_logits.cols() != params.L)
            throw DataError("model_backward: lang logits cotangent shape mismatch");
        Matrix stacked(2 * N, params.d);
        stacked.topRows(N) = batch.s_l;
        stacked.bottomRows(N) = batch.t_l;
        ClassifyBackward cb =
            classify_backward(params.lang_head, stacked, lg.d_lang_logits, false, 0.0);
        grads.lang_head.W += cb.dW;
        grads.lang_head.b += cb.db;
        ds_l += cb.dX.topRows(N);
        dt_l += cb.dX.bottomRows(N);
    }
    if (lg.d_adv_logits.size()) {
        if (lg.d_adv_logits.rows() != 2 * N || lg.d_adv_logits.cols() != params.L)
            throw DataError("model_backward: adv logits cotangent shape mismatch");
        Matrix stacked(2 * N, params.d);
        stacked.topRows(N) = batch.s_m;
        stacked.bottomRows(N) = batch.t_m;
        ClassifyBackward cb =
            classify_backward(params.adv_head, stacked, lg.d_adv_logits, true, lg.lambda);
        grads.adv_head.W += cb.dW;
        grads.adv_head.b += cb.db;
        ds_m += cb.dX.topRows(N);
        dt_m += cb.dX.bottomRows(N);
    }

    mlp_backward(params.mlp_m, caches.m_src, ds_m, grads.mlp_m);
    mlp_backward(params.mlp_m, caches.m_tgt, dt_m, grads.mlp_m);
    mlp_backward(params.mlp_l, caches.l_src, ds_l, grads.mlp_l);
    mlp_backward(params.mlp_l, caches.l_tgt, dt_l, grads.mlp_l);
    return grads;
}

std::vector<TensorRef> tensor_refs(ModelParams& p) {
    std::vector<TensorRef> refs;
    auto add_mlp = [&](const char* name, MlpParams& mlp) {
        for (std::size_t k = 0; k < mlp.W.size(); ++k) {
            refs.push_back({std::string(name) + ".W" + std::to_string(k), mlp.W[k].data(),
                            mlp.W[k].size()});
            refs.push_back({std::string(name) + ".b" + std::to_string(k), mlp.b[k].data(),
                            mlp.b[k].size()});
        }
    };
    add_mlp("mlp_m", p.mlp_m);
    add_mlp("mlp_l", p.mlp_l);
    refs.push_back({"lang_head.W", p.lang_head.W.data(), p.lang_head.W.size()});
    refs.push_back({"lang_head.b", p.lang_head.b.data(), p.lang_head.b.size()});
    refs.push_back({"adv_head.W", p.adv_head.W.data(), p.adv_head.W.size()});
    refs.push_back({"adv_head.b", p.adv_head.b.data(), p.adv_head.b.size()});
    return refs;
}

}  // namespace oracle
