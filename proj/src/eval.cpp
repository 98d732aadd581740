#include "oracle/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "oracle/numerics.hpp"

namespace oracle {

namespace {

// Left-to-right accumulation; the summation order is part of the contract.
double dot_lr(const Matrix& A, Index i, const Matrix& B, Index j) {
    double s = 0.0;
    for (Index k = 0; k < A.cols(); ++k) s += A(i, k) * B(j, k);
    return s;
}

std::vector<double> row_norms_lr(const Matrix& A) {
    std::vector<double> out(static_cast<std::size_t>(A.rows()));
    for (Index i = 0; i < A.rows(); ++i) out[static_cast<std::size_t>(i)] =
        std::sqrt(dot_lr(A, i, A, i));
    return out;
}

}  // namespace

RetrievalResult retrieval_accuracy(const Matrix& queries, const Matrix& candidates) {
    if (queries.cols() != candidates.cols() || queries.rows() != candidates.rows())
        throw DataError("retrieval_accuracy: shape mismatch");
    const Index N = queries.rows();
    const std::vector<double> qn = row_norms_lr(queries);
    const std::vector<double> cn = row_norms_lr(candidates);
    std::string bad;
    for (Index i = 0; i < N; ++i) {
        if (qn[static_cast<std::size_t>(i)] <= kNormFloor) bad += " q" + std::to_string(i);
        if (cn[static_cast<std::size_t>(i)] <= kNormFloor) bad += " c" + std::to_string(i);
    }
    if (!bad.empty()) throw DataError("retrieval_accuracy: degenerate rows:" + bad);

    RetrievalResult r;
    r.predicted.resize(static_cast<std::size_t>(N));
    r.correct.resize(static_cast<std::size_t>(N));
    Index hits = 0;
    for (Index i = 0; i < N; ++i) {
        Index best = 0;
        double best_score = -2.0;
        for (Index j = 0; j < N; ++j) {
            const double score = dot_lr(queries, i, candidates, j) /
                                 (qn[static_cast<std::size_t>(i)] *
                                  cn[static_cast<std::size_t>(j)]);
            if (score > best_score) {  // strict: ties keep the lowest index
                best_score = score;
                best = j;
            }
        }
        r.predicted[static_cast<std::size_t>(i)] = best;
        r.correct[static_cast<std::size_t>(i)] = best == i;
        if (best == i) ++hits;
    }
    r.accuracy = N == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(N);
    return r;
}

Vector fractional_ranks(const Vector& x) {
    const Index n = x.size();
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index(0));
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return x(a) < x(b); });
    Vector ranks(n);
    Index i = 0;
    while (i < n) {
        Index j = i;
        while (j + 1 < n && x(order[static_cast<std::size_t>(j + 1)]) ==
                                x(order[static_cast<std::size_t>(i)]))
            ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (Index k = i; k <= j; ++k) ranks(order[static_cast<std::size_t>(k)]) = r;
        i = j + 1;
    }
    return ranks;
}

double pearson(const Vector& x, const Vector& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw DataError("pearson: need two equally sized vectors of length >= 2");
    const Vector xc = x.array() - x.mean();
    const Vector yc = y.array() - y.mean();
    const double sx = xc.squaredNorm(), sy = yc.squaredNorm();
    if (sx == 0.0 || sy == 0.0)
        throw DataError("pearson: undefined correlation for constant input");
    return xc.dot(yc) / std::sqrt(sx * sy);
}

double spearman_rho(const Vector& x, const Vector& y) {
    return pearson(fractional_ranks(x), fractional_ranks(y));
}

Representation representation_from_name(const std::string& s) {
    if (s == "semantic") return Representation::Semantic;
    if (s == "language") return Representation::Language;
    if (s == "original") return Representation::Original;
    throw DataError("unknown representation \"" + s + "\"");
}

double sts_eval(const EmbeddingCorpus& corpus, const ModelParams& params,
                Representation rep) {
    if (!corpus.has_gold) throw DataError("sts_eval: corpus has no gold scores");
    Matrix a, b;
    switch (rep) {
        case Representation::Semantic:
            a = mlp_forward(params.mlp_m, corpus.src);
            b = mlp_forward(params.mlp_m, corpus.tgt);
            break;
        case Representation::Language:
            a = mlp_forward(params.mlp_l, corpus.src);
            b = mlp_forward(params.mlp_l, corpus.tgt);
            break;
        case Representation::Original:
            a = corpus.src;
            b = corpus.tgt;
            break;
    }
    Vector sims(corpus.n());
    for (Index i = 0; i < corpus.n(); ++i)
        sims(i) = cosine_value(a.row(i).transpose(), b.row(i).transpose());
    return spearman_rho(sims, corpus.gold);
}

namespace {

double mean_intra_cos(const Matrix& X) {
    const Index N = X.rows();
    if (N < 2) return 0.0;
    double sum = 0.0;
    Index cnt = 0;
    if (N <= 512) {
        for (Index i = 0; i < N; ++i)
            for (Index j = i + 1; j < N; ++j, ++cnt)
                sum += cosine_value(X.row(i).transpose(), X.row(j).transpose());
    } else {
        for (Index i = 0; i < N; ++i, ++cnt)
            sum += cosine_value(X.row(i).transpose(), X.row((i + 1) % N).transpose());
    }
    return sum / static_cast<double>(cnt);
}

}  // namespace

LeakageReport leakage_report(const DisentangledBatch& batch) {
    const Index N = batch.s_m.rows();
    LeakageReport r;
    double sum = 0.0;
    for (Index i = 0; i < N; ++i) {
        sum += std::abs(cosine_value(batch.s_m.row(i).transpose(), batch.s_l.row(i).transpose()));
        sum += std::abs(cosine_value(batch.t_m.row(i).transpose(), batch.t_l.row(i).transpose()));
    }
    r.mean_abs_inter_cos = N == 0 ? 0.0 : sum / static_cast<double>(2 * N);
    r.intra_src = mean_intra_cos(batch.s_l);
    r.intra_tgt = mean_intra_cos(batch.t_l);
    return r;
}

EvalReport evaluate_suite(const EmbeddingCorpus& test_corpus,
                          const EmbeddingCorpus* sts_corpus, const ModelParams& params) {
    DisentangledBatch b = disentangle_forward(params, test_corpus.src, test_corpus.tgt);
    EvalReport r;
    r.semantic_acc_fwd = retrieval_accuracy(b.s_m, b.t_m).accuracy;
    r.semantic_acc_bwd = retrieval_accuracy(b.t_m, b.s_m).accuracy;
    r.language_acc_fwd = retrieval_accuracy(b.s_l, b.t_l).accuracy;
    r.language_acc_bwd = retrieval_accuracy(b.t_l, b.s_l).accuracy;
    if (sts_corpus) {
        r.has_sts = true;
        r.sts_rho_semantic = sts_eval(*sts_corpus, params, Representation::Semantic);
        r.sts_rho_language = sts_eval(*sts_corpus, params, Representation::Language);
    } else {
        r.sts_rho_semantic = std::numeric_limits<double>::quiet_NaN();
        r.sts_rho_language = std::numeric_limits<double>::quiet_NaN();
    }
    LeakageReport lk = leakage_report(b);
    r.mean_abs_inter_cos = lk.mean_abs_inter_cos;
    r.intra_lang_mean_cos_src = lk.intra_src;
    r.intra_lang_mean_cos_tgt = lk.intra_tgt;
    return r;
}

std::string format_report_table(const EvalReport& r) {
    std::ostringstream os;
    auto line = [&](const char* name, double fwd, double bwd) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%-26s %8.4f %8.4f\n", name, fwd, bwd);
        os << buf;
    };
    os << "metric                          fwd      bwd\n";
    line("semantic acc (↑)", r.semantic_acc_fwd, r.semantic_acc_bwd);
    line("language acc (↓)", r.language_acc_fwd, r.language_acc_bwd);
    char buf[96];
    if (r.has_sts) {
        std::snprintf(buf, sizeof(buf), "%-26s %8.4f\n", "sts rho semantic (↑)",
                      r.sts_rho_semantic);
        os << buf;
        std::snprintf(buf, sizeof(buf), "%-26s %8.4f\n", "sts rho language (↓)",
                      r.sts_rho_language);
        os << buf;
    } else {
        os << "sts rho                        n/a\n";
    }
    std::snprintf(buf, sizeof(buf), "%-26s %8.4f\n", "mean |cos(m,l)| (↓)",
                  r.mean_abs_inter_cos);
    os << buf;
    std::snprintf(buf, sizeof(buf), "%-26s %8.4f %8.4f\n", "intra-language cos (↑)",
                  r.intra_lang_mean_cos_src, r.intra_lang_mean_cos_tgt);
    os << buf;
    return os.str();
}

std::string report_to_json(const EvalReport& r) {
    nlohmann::json j;
    j["semantic_acc_fwd"] = r.semantic_acc_fwd;
    j["semantic_acc_bwd"] = r.semantic_acc_bwd;
    j["language_acc_fwd"] = r.language_acc_fwd;
    j["language_acc_bwd"] = r.language_acc_bwd;
    if (r.has_sts) {
        j["sts_rho_semantic"] = r.sts_rho_semantic;
        j["sts_rho_language"] = r.sts_rho_language;
    } else {
        j["sts_rho_semantic"] = nullptr;
        j["sts_rho_language"] = nullptr;
    }
    j["mean_abs_inter_cos"] = r.mean_abs_inter_cos;
    j["intra_lang_mean_cos_src"] = r.intra_lang_mean_cos_src;
    j["intra_lang_mean_cos_tgt"] = r.intra_lang_mean_cos_tgt;
    return j.dump(2);
}

}  // namespace oracle
