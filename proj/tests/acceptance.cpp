// Acceptance gate: one self-contained check per release criterion, one
// PASS/FAIL line each, nonzero exit when anything fails. Every check pins its
// seeds and thresholds so a pass is reproducible bit for bit.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "oracle/checkpoint.hpp"
#include "oracle/codeswitch.hpp"
#include "oracle/data.hpp"
#include "oracle/eval.hpp"
#include "oracle/losses.hpp"
#include "oracle/model.hpp"
#include "oracle/project.hpp"
#include "oracle/rng.hpp"
#include "oracle/trainer.hpp"

namespace {

using namespace oracle;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::vector<int> half_labels(Index n) {
    std::vector<int> labels(static_cast<std::size_t>(2 * n), 0);
    for (Index i = n; i < 2 * n; ++i) labels[static_cast<std::size_t>(i)] = 1;
    return labels;
}

bool params_bitwise_equal(ModelParams& a, ModelParams& b) {
    auto ra = tensor_refs(a), rb = tensor_refs(b);
    if (ra.size() != rb.size()) return false;
    for (std::size_t k = 0; k < ra.size(); ++k) {
        if (ra[k].size != rb[k].size) return false;
        for (Index i = 0; i < ra[k].size; ++i) {
            const double x = ra[k].data[i], y = rb[k].data[i];
            if (std::memcmp(&x, &y, sizeof(double)) != 0) return false;
        }
    }
    return true;
}

// Value equality (not memcmp): gradients may legitimately differ in the sign
// of zero.
bool params_value_equal(ModelParams& a, ModelParams& b) {
    auto ra = tensor_refs(a), rb = tensor_refs(b);
    if (ra.size() != rb.size()) return false;
    for (std::size_t k = 0; k < ra.size(); ++k) {
        if (ra[k].size != rb[k].size) return false;
        for (Index i = 0; i < ra[k].size; ++i)
            if (ra[k].data[i] != rb[k].data[i]) return false;
    }
    return true;
}

std::string fmt(const char* pattern, ...) {
    char buf[512];
    va_list args;
    va_start(args, pattern);
    std::vsnprintf(buf, sizeof buf, pattern, args);
    va_end(args);
    return buf;
}

// --- criterion 1: finite differences confirm every analytic gradient --------

bool criterion1(std::string& detail) {
    const auto t0 = Clock::now();

    std::vector<LossConfig> configs;
    std::vector<std::string> names;
    for (Term t : all_terms()) {
        LossConfig c;
        c.preset = Preset::Custom;
        c.enabled_terms = {t};
        configs.push_back(c);
        names.emplace_back(term_name(t));
    }
    for (Preset p : {Preset::Dream, Preset::Meat, Preset::DreamOracle, Preset::MeatOracle,
                     Preset::OracleOnly}) {
        configs.push_back(LossConfig::from_preset(p));
        names.emplace_back(preset_name(p));
    }

    double worst = 0.0;
    std::string worst_at = "-";
    int instances = 0;
    for (std::size_t ci = 0; ci < configs.size(); ++ci) {
        const LossConfig& cfg = configs[ci];
        for (int k = 0; k < 20; ++k) {
            // Separation hinges are non-differentiable; resample instances
            // that land within 1e-3 of one.
            for (int attempt = 0; attempt < 64; ++attempt) {
                Rng rng(batch_seed(1000 + ci,
                                   static_cast<std::uint64_t>(k) * 64 +
                                       static_cast<std::uint64_t>(attempt)));
                const int d = 4 + static_cast<int>(rng.index(5));
                const Index N = 3 + static_cast<Index>(rng.index(4));
                const int h = 3 + static_cast<int>(rng.index(4));
                ModelParams params = init_model(rng.raw(), d, {h}, 2);
                const Matrix e_s = rng.gauss_matrix(N, d);
                const Matrix e_t = rng.gauss_matrix(N, d);
                if (cfg.enabled(Term::IS) && is_kink_margin(params, e_s, e_t) < 1e-3) continue;
                const FdCheckResult r =
                    fd_check_objective(params, e_s, e_t, cfg, half_labels(N));
                ++instances;
                if (r.max_rel_error > worst) {
                    worst = r.max_rel_error;
                    worst_at = names[ci] + "/" + r.worst_path;
                }
                break;
            }
        }
    }

    const double secs = seconds_since(t0);
    const int expected = static_cast<int>(configs.size()) * 20;
    detail = fmt("max rel err %.2e (%s) over %d instances, %.1fs", worst, worst_at.c_str(),
                 instances, secs);
    return instances == expected && worst <= 1e-4 && secs < 10.0;
}

// --- criterion 2: stand-alone objective decomposes and hits exact values ----

Matrix filled_rows(Index n, std::initializer_list<double> row) {
    Matrix m(n, static_cast<Index>(row.size()));
    for (Index i = 0; i < n; ++i) {
        Index j = 0;
        for (double v : row) m(i, j++) = v;
    }
    return m;
}

bool criterion2(std::string& detail) {
    const LossConfig oc = LossConfig::from_preset(Preset::OracleOnly);
    double worst_gap = 0.0;
    for (int k = 0; k < 20; ++k) {
        Rng rng(batch_seed(2000, static_cast<std::uint64_t>(k)));
        const int d = 4 + static_cast<int>(rng.index(5));
        const Index N = 3 + static_cast<Index>(rng.index(4));
        ModelParams params = init_model(rng.raw(), d, {4}, 2);
        const Matrix e_s = rng.gauss_matrix(N, d);
        const Matrix e_t = rng.gauss_matrix(N, d);
        DisentangledBatch batch;
        const LossBreakdown bd = compose_objective(params, e_s, e_t, oc, half_labels(N),
                                                   PairingMode::Cyclic, nullptr, &batch);
        const double ic =
            loss_intra_class(batch, make_pairing(N, PairingMode::Cyclic), 1.0, nullptr);
        const double is = loss_inter_class(batch, 1.0, nullptr);
        worst_gap = std::max(worst_gap, std::abs(bd.total - (ic + is)));
    }

    // Dyadic rows with squared norm 4 make every cosine exact: dot = 4,
    // sqrt(4) = 2, 4/(2*2) = 1, all without rounding.
    const Index N = 5;
    DisentangledBatch b;
    b.s_m = filled_rows(N, {1, 1, 1, 1});
    b.t_m = filled_rows(N, {1, -1, 1, -1});
    b.s_l = filled_rows(N, {2, 0, 0, 0});  // identical within each side
    b.t_l = filled_rows(N, {0, 0, 2, 0});
    const double ic_zero =
        loss_intra_class(b, make_pairing(N, PairingMode::Cyclic), 1.0, nullptr);

    DisentangledBatch orth;
    orth.s_m = filled_rows(N, {2, 0, 0, 0});
    orth.s_l = filled_rows(N, {0, 2, 0, 0});  // row-wise orthogonal to s_m
    orth.t_m = filled_rows(N, {0, 0, 2, 0});
    orth.t_l = filled_rows(N, {0, 0, 0, 2});
    const double is_zero = loss_inter_class(orth, 1.0, nullptr);

    DisentangledBatch same;
    same.s_m = Matrix(N, 4);
    same.s_m.row(0) << 2, 0, 0, 0;
    same.s_m.row(1) << 0, 2, 0, 0;
    same.s_m.row(2) << 1, 1, 1, 1;
    same.s_m.row(3) << -2, 0, 0, 0;
    same.s_m.row(4) << 1, -1, -1, 1;
    same.s_l = same.s_m;  // every m row coincides with its l row
    same.t_m = same.s_m;
    same.t_l = same.s_m;
    const double is_two = loss_inter_class(same, 1.0, nullptr);

    detail = fmt("total-(IC+IS) gap %.1e; IC(identical)=%g IS(orthogonal)=%g IS(coincident)=%g",
                 worst_gap, ic_zero, is_zero, is_two);
    return worst_gap <= 1e-12 && ic_zero == 0.0 && is_zero == 0.0 && is_two == 2.0;
}

// --- criterion 3: reference trajectory disentangles the synthetic corpus ----

bool criterion3(std::string& detail) {
    const auto t0 = Clock::now();
    SyntheticSpec spec;  // defaults: 2000 pairs, d=16, k=8, offset 4.0, sigma 0.05
    spec.seed = 0;
    const EmbeddingCorpus corpus = generate_synthetic(spec);
    const SplitResult sp = split_corpus(corpus, 0.8, 0.1, 0.1, 0);  // 1600/200/200

    TrainConfig tc;
    tc.learning_rate = 1e-3;
    tc.batch_size = 512;
    tc.max_iterations = 3000;
    tc.patience = 1000000;  // threshold gate, not an early-stopping exercise
    tc.eval_every = 500;
    tc.seed = 1;
    const LossConfig lc = LossConfig::from_preset(Preset::MeatOracle);
    const ModelParams init = init_model(1, 16, {16}, 2);

    auto [best, report] = fit({sp.train}, sp.val, tc, lc, init);
    const EvalReport r = evaluate_suite(sp.test, nullptr, best);
    const double secs = seconds_since(t0);

    detail = fmt("sem_fwd %.3f (>=0.95), lang_fwd %.3f (<=0.10), inter-cos %.4f (<=0.10), %.0fs",
                 r.semantic_acc_fwd, r.language_acc_fwd, r.mean_abs_inter_cos, secs);
    return r.semantic_acc_fwd >= 0.95 && r.language_acc_fwd <= 0.10 &&
           r.mean_abs_inter_cos <= 0.10 && secs < 120.0;
}

// --- criterion 4: adding the stand-alone pair reduces language leakage ------

double lang_acc_after(const EmbeddingCorpus& train, const EmbeddingCorpus& test, Preset preset) {
    TrainConfig tc;
    tc.learning_rate = 1e-3;
    tc.batch_size = 512;
    tc.seed = 1;
    const LossConfig lc = LossConfig::from_preset(preset);
    ModelParams params = init_model(1, 16, {16}, 2);
    AdamState st = AdamState::init(params);
    const auto registry = collect_language_ids({train});
    long long iter = 0;
    for (std::uint64_t epoch = 0; iter < 300; ++epoch) {
        for (const auto& idx : batch_iter(train.n(), tc.batch_size, tc.seed, epoch)) {
            const EmbeddingCorpus b = take_rows(train, idx);
            train_step(params, st, b.src, b.tgt, tc, lc, corpus_labels(b, registry, b.n()));
            if (++iter >= 300) break;
        }
    }
    return evaluate_suite(test, nullptr, params).language_acc_fwd;
}

bool criterion4(std::string& detail) {
    SyntheticSpec spec;
    spec.seed = 0;
    // A mild offset keeps the language signal learnable but unsaturated at
    // 300 steps, so the added terms have headroom to show up in the metric.
    spec.language_offset_scale = 0.25;
    const EmbeddingCorpus corpus = generate_synthetic(spec);
    const SplitResult sp = split_corpus(corpus, 0.8, 0.1, 0.1, 0);

    const double meat = lang_acc_after(sp.train, sp.test, Preset::Meat);
    const double meat_o = lang_acc_after(sp.train, sp.test, Preset::MeatOracle);
    const double dream = lang_acc_after(sp.train, sp.test, Preset::Dream);
    const double dream_o = lang_acc_after(sp.train, sp.test, Preset::DreamOracle);

    detail = fmt("lang_acc meat %.4f -> %.4f, dream %.4f -> %.4f", meat, meat_o, dream, dream_o);
    return meat_o < meat && dream_o < dream;
}

// --- criterion 5: retrieval and rank correlation match naive oracles --------

std::vector<Index> oracle_retrieval(const Matrix& Q, const Matrix& C) {
    auto dot = [](const Matrix& A, Index i, const Matrix& B, Index j) {
        double s = 0.0;
        for (Index k = 0; k < A.cols(); ++k) s += A(i, k) * B(j, k);
        return s;
    };
    std::vector<Index> out;
    for (Index i = 0; i < Q.rows(); ++i) {
        Index best = 0;
        double best_score = -2.0;
        for (Index j = 0; j < C.rows(); ++j) {
            const double score =
                dot(Q, i, C, j) / (std::sqrt(dot(Q, i, Q, i)) * std::sqrt(dot(C, j, C, j)));
            if (score > best_score) {
                best_score = score;
                best = j;
            }
        }
        out.push_back(best);
    }
    return out;
}

Vector oracle_ranks(const Vector& x) {
    const Index n = x.size();
    Vector r(n);
    for (Index i = 0; i < n; ++i) {
        int less = 0, equal = 0;
        for (Index j = 0; j < n; ++j) {
            if (x(j) < x(i)) ++less;
            if (x(j) == x(i)) ++equal;
        }
        r(i) = static_cast<double>(less) + 0.5 * static_cast<double>(equal + 1);
    }
    return r;
}

double oracle_spearman(const Vector& x, const Vector& y) {
    const Vector rx = oracle_ranks(x), ry = oracle_ranks(y);
    const double mx = rx.mean(), my = ry.mean();
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (Index i = 0; i < x.size(); ++i) {
        sxy += (rx(i) - mx) * (ry(i) - my);
        sxx += (rx(i) - mx) * (rx(i) - mx);
        syy += (ry(i) - my) * (ry(i) - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

bool criterion5(std::string& detail) {
    int retrieval_exact = 0;
    for (int k = 0; k < 200; ++k) {
        Rng rng(batch_seed(5000, static_cast<std::uint64_t>(k)));
        const Index N = 2 + static_cast<Index>(rng.index(63));  // 2..64
        const Index d = 2 + static_cast<Index>(rng.index(7));
        const Matrix Q = rng.gauss_matrix(N, d);
        Matrix C = rng.gauss_matrix(N, d);
        if (N > 3) C.row(3) = C.row(1);  // planted duplicate exercises the tie rule
        const RetrievalResult r = retrieval_accuracy(Q, C);
        if (r.predicted != oracle_retrieval(Q, C)) break;
        Index hits = 0;
        for (Index i = 0; i < N; ++i)
            if (r.predicted[static_cast<std::size_t>(i)] == i) ++hits;
        if (r.accuracy != static_cast<double>(hits) / static_cast<double>(N)) break;
        ++retrieval_exact;
    }

    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        Rng rng(batch_seed(5001, static_cast<std::uint64_t>(k)));
        const Index n = 3 + static_cast<Index>(rng.index(30));
        Vector x(n), y(n);
        for (;;) {  // quantized draws force ties; constants are undefined, resample
            for (Index i = 0; i < n; ++i) x(i) = 0.5 * static_cast<double>(rng.index(6));
            for (Index i = 0; i < n; ++i) y(i) = 0.5 * static_cast<double>(rng.index(6));
            const bool xc = (x.array() == x(0)).all(), yc = (y.array() == y(0)).all();
            if (!xc && !yc) break;
        }
        worst = std::max(worst, std::abs(spearman_rho(x, y) - oracle_spearman(x, y)));
    }

    detail = fmt("retrieval exact on %d/200 instances; spearman max gap %.1e", retrieval_exact,
                 worst);
    return retrieval_exact == 200 && worst <= 1e-12;
}

// --- criterion 6: early stopping fires after exactly `patience` evals -------

bool criterion6(std::string& detail) {
    SyntheticSpec spec;
    spec.n_pairs = 256;
    spec.d = 8;
    spec.k = 3;
    spec.seed = 11;
    const EmbeddingCorpus corpus = generate_synthetic(spec);
    const SplitResult sp = split_corpus(corpus, 0.8, 0.1, 0.1, 3);

    TrainConfig tc;
    // Far below one ulp of any O(0.1) parameter: every update is absorbed and
    // the validation metric repeats bitwise, so no evaluation ever improves.
    tc.learning_rate = 1e-300;
    tc.batch_size = 64;
    tc.max_iterations = 1000;
    tc.patience = 10;
    tc.eval_every = 1;
    tc.seed = 6;
    ModelParams init = init_model(7, 8, {8}, 2);

    auto [best, report] = fit({sp.train}, sp.val, tc, LossConfig::from_preset(Preset::Dream),
                              init);

    detail = fmt("stop=%s after %lld iterations, best at %lld, %zu evals",
                 report.stop_reason.c_str(), static_cast<long long>(report.iterations_run),
                 static_cast<long long>(report.best_iteration), report.eval_curve.size());
    return report.stop_reason == "early_stopped" && report.iterations_run == 10 &&
           report.best_iteration == 0 && report.eval_curve.size() == 11 &&
           params_bitwise_equal(best, init);
}

// --- criterion 7: code-switch corpus covers, excludes, and reproduces -------

std::string serialize_codeswitch(const CodeSwitchResult& r) {
    std::ostringstream out;
    for (const auto& rec : r.records) {
        for (std::size_t i = 0; i < rec.switched.size(); ++i) {
            if (i) out << ' ';
            out << rec.switched[i];
        }
        out << '\t';
        for (std::size_t i = 0; i < rec.replaced_positions.size(); ++i) {
            if (i) out << ',';
            out << rec.replaced_positions[i];
        }
        out << '\n';
    }
    return out.str();
}

bool criterion7(std::string& detail) {
    std::ostringstream dict_src;
    for (int i = 0; i < 50; ++i) dict_src << "w" << i << " x" << i << "\n";
    std::istringstream in(dict_src.str());
    const BilingualDictionary dict = parse_dictionary(in);
    if (dict.entries.size() != 50) {
        detail = "dictionary fixture did not parse to 50 entries";
        return false;
    }

    Rng rng(77);
    std::vector<std::vector<std::string>> sentences;
    std::size_t uncovered = 0;
    for (int i = 0; i < 500; ++i) {
        const int len = 3 + static_cast<int>(rng.index(6));
        const bool force_uncovered = (i % 25 == 0);  // guarantees exclusions exist
        std::vector<std::string> s;
        for (int j = 0; j < len; ++j) {
            if (!force_uncovered && rng.index(3) < 2)
                s.push_back("w" + std::to_string(rng.index(50)));
            else
                s.push_back("u" + std::to_string(rng.index(30)));
        }
        bool covered = false;
        for (const auto& tok : s) covered = covered || dict.entries.count(tok) != 0;
        if (!covered) ++uncovered;
        sentences.push_back(std::move(s));
    }

    const CodeSwitchResult r1 = build_codeswitch(sentences, dict, 0.35, 99);
    const CodeSwitchResult r2 = build_codeswitch(sentences, dict, 0.35, 99);

    bool records_ok = true;
    for (const auto& rec : r1.records) {
        if (rec.replaced_positions.empty() || rec.switched.size() != rec.original.size())
            records_ok = false;
        for (std::size_t p : rec.replaced_positions) {
            const auto it = dict.entries.find(rec.original[p]);
            if (it == dict.entries.end()) records_ok = false;
            else if (std::find(it->second.begin(), it->second.end(), rec.switched[p]) ==
                     it->second.end())
                records_ok = false;
        }
    }

    const bool identical = serialize_codeswitch(r1) == serialize_codeswitch(r2) &&
                           r1.excluded == r2.excluded;
    detail = fmt("%zu records + %zu excluded (fixture has %zu uncovered); same-seed %s",
                 r1.records.size(), r1.excluded, uncovered,
                 identical ? "byte-identical" : "DIVERGED");
    return records_ok && r1.excluded == uncovered &&
           r1.records.size() + r1.excluded == sentences.size() && identical;
}

// --- criterion 8: persistence is deterministic and lossless -----------------

bool criterion8(std::string& detail) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "oracle_acceptance";
    fs::create_directories(dir);

    // (a) identical training runs serialize to byte-identical checkpoints
    SyntheticSpec spec;
    spec.n_pairs = 256;
    spec.d = 8;
    spec.k = 3;
    spec.seed = 21;
    const EmbeddingCorpus corpus = generate_synthetic(spec);
    const SplitResult sp = split_corpus(corpus, 0.7, 0.15, 0.15, 2);
    TrainConfig tc;
    tc.learning_rate = 1e-3;
    tc.batch_size = 128;
    tc.max_iterations = 60;
    tc.patience = 100;
    tc.eval_every = 20;
    tc.seed = 5;
    const LossConfig lc = LossConfig::from_preset(Preset::MeatOracle);
    const ModelParams init = init_model(9, 8, {8}, 2);
    auto [p1, rep1] = fit({sp.train}, sp.val, tc, lc, init);
    auto [p2, rep2] = fit({sp.train}, sp.val, tc, lc, init);
    const std::string ck1 = (dir / "run1.ckpt").string(), ck2 = (dir / "run2.ckpt").string();
    save_checkpoint(p1, lc, ck1);
    save_checkpoint(p2, lc, ck2);
    const bool ckpt_identical = !slurp(ck1).empty() && slurp(ck1) == slurp(ck2);

    // (b) the container stores f32; f32-representable corpora round-trip exactly
    EmbeddingCorpus c32 = corpus;
    auto quantize = [](double v) { return static_cast<double>(static_cast<float>(v)); };
    c32.src = corpus.src.unaryExpr(quantize);
    c32.tgt = corpus.tgt.unaryExpr(quantize);
    c32.gold = Vector(corpus.n());
    for (Index i = 0; i < corpus.n(); ++i) c32.gold(i) = quantize(0.1 * static_cast<double>(i));
    c32.has_gold = true;
    const std::string emb1 = (dir / "round1.oemb").string(),
                      emb2 = (dir / "round2.oemb").string();
    save_corpus(c32, emb1);
    const EmbeddingCorpus back = load_corpus(emb1);
    save_corpus(back, emb2);
    const bool oemb_lossless = back.src == c32.src && back.tgt == c32.tgt &&
                               back.gold == c32.gold && back.has_gold &&
                               back.src_lang == c32.src_lang && back.tgt_lang == c32.tgt_lang &&
                               slurp(emb1) == slurp(emb2);

    // (c) exported projections parse back to the computed coordinates
    Rng prng(31);
    const Matrix X = prng.gauss_matrix(40, 6);
    std::vector<std::string> groups;
    for (int i = 0; i < 40; ++i) groups.push_back(i % 2 ? "tgt" : "src");
    const ProjectionResult pr = pca_project(X, 2, &groups);
    const std::string csv = (dir / "proj.csv").string();
    export_projection(pr, csv);
    std::ifstream pin(csv);
    std::string line;
    std::getline(pin, line);  // "# method=..." note
    std::getline(pin, line);  // header
    double worst = 0.0;
    Index row = 0;
    bool parse_ok = line == "x,y,group";
    while (std::getline(pin, line)) {
        const auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos || row >= pr.coords.rows()) {
            parse_ok = false;
            break;
        }
        worst = std::max(worst, std::abs(std::stod(line.substr(0, c1)) - pr.coords(row, 0)));
        worst = std::max(worst,
                         std::abs(std::stod(line.substr(c1 + 1, c2 - c1 - 1)) - pr.coords(row, 1)));
        if (line.substr(c2 + 1) != groups[static_cast<std::size_t>(row)]) parse_ok = false;
        ++row;
    }
    parse_ok = parse_ok && row == pr.coords.rows();

    detail = fmt("checkpoints %s; container %s; projection parse-back gap %.1e",
                 ckpt_identical ? "byte-identical" : "DIVERGED",
                 oemb_lossless ? "lossless" : "LOSSY", worst);
    return ckpt_identical && oemb_lossless && parse_ok && worst <= 1e-9;
}

// --- criterion 9: weights isolate terms; separation beats clustering --------

double variant_leakage(const EmbeddingCorpus& corpus, std::uint64_t t, Term zeroed) {
    TrainConfig tc;
    tc.learning_rate = 1e-4;
    tc.batch_size = 512;
    tc.seed = t;
    LossConfig lc = LossConfig::from_preset(Preset::OracleOnly);
    lc.weights[zeroed] = 0.0;
    ModelParams params = init_model(t, 16, {16}, 2);
    AdamState st = AdamState::init(params);
    const auto registry = collect_language_ids({corpus});
    long long iter = 0;
    for (std::uint64_t epoch = 0; iter < 4000; ++epoch) {
        for (const auto& idx : batch_iter(corpus.n(), tc.batch_size, tc.seed, epoch)) {
            const EmbeddingCorpus b = take_rows(corpus, idx);
            train_step(params, st, b.src, b.tgt, tc, lc, corpus_labels(b, registry, b.n()));
            if (++iter >= 4000) break;
        }
    }
    return leakage_report(disentangle_forward(params, corpus.src, corpus.tgt))
        .mean_abs_inter_cos;
}

bool criterion9(std::string& detail) {
    // (a) zero weights keep the term's value but remove its contribution
    Rng rng(batch_seed(9000, 1));
    const int d = 6;
    const Index N = 5;
    ModelParams params = init_model(rng.raw(), d, {5}, 2);
    const Matrix e_s = rng.gauss_matrix(N, d);
    const Matrix e_t = rng.gauss_matrix(N, d);
    const auto labels = half_labels(N);

    const LossConfig full = LossConfig::from_preset(Preset::MeatOracle);
    LossConfig ic0 = full;
    ic0.weights[Term::IC] = 0.0;
    LossConfig is0 = full;
    is0.weights[Term::IS] = 0.0;

    ModelParams g_full = zeros_like(params), g_ic0 = zeros_like(params),
                g_is0 = zeros_like(params);
    const LossBreakdown bd_full =
        compose_objective(params, e_s, e_t, full, labels, PairingMode::Cyclic, &g_full);
    const LossBreakdown bd_ic0 =
        compose_objective(params, e_s, e_t, ic0, labels, PairingMode::Cyclic, &g_ic0);
    const LossBreakdown bd_is0 =
        compose_objective(params, e_s, e_t, is0, labels, PairingMode::Cyclic, &g_is0);

    bool wiring_ok = true;
    for (Term t : all_terms()) {
        if (!full.enabled(t)) continue;
        // every term is still computed, and its value is unchanged
        if (bd_ic0.values.at(t) != bd_full.values.at(t)) wiring_ok = false;
        if (bd_is0.values.at(t) != bd_full.values.at(t)) wiring_ok = false;
    }
    auto weighted_total = [](const LossConfig& cfg, const LossBreakdown& bd) {
        double s = 0.0;
        for (Term t : all_terms())
            if (cfg.enabled(t)) s += cfg.weight(t) * bd.values.at(t);
        return s;
    };
    if (bd_full.total != weighted_total(full, bd_full)) wiring_ok = false;
    if (bd_ic0.total != weighted_total(ic0, bd_ic0)) wiring_ok = false;
    if (bd_is0.total != weighted_total(is0, bd_is0)) wiring_ok = false;

    // gradients with a zeroed weight match the config without the term
    auto without = [&](Term t) {
        LossConfig c;
        c.preset = Preset::Custom;
        c.enabled_terms = full.enabled_terms;
        c.enabled_terms.erase(t);
        c.weights = full.weights;
        c.adversarial_lambda = full.adversarial_lambda;
        return c;
    };
    ModelParams g_no_ic = zeros_like(params), g_no_is = zeros_like(params);
    compose_objective(params, e_s, e_t, without(Term::IC), labels, PairingMode::Cyclic, &g_no_ic);
    compose_objective(params, e_s, e_t, without(Term::IS), labels, PairingMode::Cyclic, &g_no_is);
    if (!params_value_equal(g_ic0, g_no_ic)) wiring_ok = false;
    if (!params_value_equal(g_is0, g_no_is)) wiring_ok = false;

    // (b) trained separately on a wide-offset corpus, the separation term
    // drives residual m/l alignment lower than the clustering term does
    SyntheticSpec spec;
    spec.seed = 15;
    spec.language_offset_scale = 400.0;
    const EmbeddingCorpus corpus = generate_synthetic(spec);
    const double ic_only = variant_leakage(corpus, 10, Term::IS);  // IS zeroed
    const double is_only = variant_leakage(corpus, 10, Term::IC);  // IC zeroed

    detail = fmt("wiring %s; inter-cos IS-only %.4f < IC-only %.4f", wiring_ok ? "ok" : "BROKEN",
                 is_only, ic_only);
    return wiring_ok && is_only < ic_only;
}

int g_failed = 0;

template <typename F>
void run_criterion(int n, const char* title, F&& f) {
    std::string detail;
    bool ok = false;
    try {
        ok = f(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    std::printf("%s  criterion %d  %s: %s\n", ok ? "PASS" : "FAIL", n, title, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failed;
}

}  // namespace

int main() {
    run_criterion(1, "gradient check", criterion1);
    run_criterion(2, "stand-alone objective identities", criterion2);
    run_criterion(3, "synthetic disentanglement", criterion3);
    run_criterion(4, "objective extension lowers leakage", criterion4);
    run_criterion(5, "evaluation matches oracles", criterion5);
    run_criterion(6, "early stopping", criterion6);
    run_criterion(7, "code-switch construction", criterion7);
    run_criterion(8, "deterministic persistence", criterion8);
    run_criterion(9, "term isolation and separation", criterion9);
    return g_failed == 0 ? 0 : 1;
}
