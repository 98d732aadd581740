#include "oracle/cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "oracle/codeswitch.hpp"
#include "oracle/data.hpp"
#include "oracle/eval.hpp"
#include "oracle/project.hpp"
#include "oracle/rng.hpp"

namespace oracle {

namespace {

namespace fs = std::filesystem;

void require_input_file(const std::string& path, const char* what) {
    if (path.empty()) throw DataError(std::string(what) + ": no path configured");
    if (!fs::exists(path))
        throw DataError(std::string(what) + ": file not found '" + path + "'");
}

void require_output_slot(const std::string& path, const char* what) {
    if (path.empty()) throw DataError(std::string(what) + ": no path configured");
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty() && !fs::exists(parent))
        throw DataError(std::string(what) + ": directory '" + parent.string() +
                        "' does not exist");
}

void reject_unknown_keys(const Json& j, std::initializer_list<const char*> known,
                         const char* where) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        bool ok = false;
        for (const char* k : known)
            if (key == k) ok = true;
        if (!ok)
            throw DataError(std::string("config: unknown key \"") + key + "\" in " + where);
    }
}

// The environment always has the last word on the seed.
bool env_seed(std::uint64_t& out) {
    const char* env = std::getenv("ORACLE_DIS_SEED");
    if (!env) return false;
    const std::string s = env;
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(s, &pos, 10);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        out = v;
        return true;
    } catch (const std::exception&) {
        throw DataError("ORACLE_DIS_SEED is not an unsigned integer: \"" + s + "\"");
    }
}

EmbeddingCorpus load_corpus_checked(const std::string& path, int d) {
    EmbeddingCorpus c = load_corpus(path);
    if (c.dim() != d)
        throw DataError("corpus '" + path + "' has d=" + std::to_string(c.dim()) +
                        ", expected d=" + std::to_string(d));
    return c;
}

}  // namespace

RunConfig RunConfig::from_json(const Json& j) {
    RunConfig cfg;
    cfg.objective = LossConfig::from_preset(Preset::MeatOracle);
    reject_unknown_keys(j, {"objective", "train", "model", "paths"}, "run config");
    if (j.contains("objective")) cfg.objective = loss_config_from_json(j["objective"]);
    if (j.contains("train")) {
        const Json& t = j["train"];
        reject_unknown_keys(t,
                            {"learning_rate", "batch_size", "max_iterations", "patience",
                             "seed", "validation_metric", "eval_every"},
                            "train");
        if (t.contains("learning_rate")) cfg.train.learning_rate = t["learning_rate"].get<double>();
        if (t.contains("batch_size")) cfg.train.batch_size = t["batch_size"].get<Index>();
        if (t.contains("max_iterations"))
            cfg.train.max_iterations = t["max_iterations"].get<std::int64_t>();
        if (t.contains("patience")) cfg.train.patience = t["patience"].get<int>();
        if (t.contains("seed")) cfg.train.seed = t["seed"].get<std::uint64_t>();
        if (t.contains("validation_metric"))
            cfg.train.validation_metric = metric_from_name(t["validation_metric"].get<std::string>());
        if (t.contains("eval_every")) cfg.train.eval_every = t["eval_every"].get<std::int64_t>();
    }
    if (j.contains("model")) {
        const Json& m = j["model"];
        reject_unknown_keys(m, {"d", "hidden_layers", "activation", "L"}, "model");
        if (m.contains("d")) cfg.model.d = m["d"].get<int>();
        if (m.contains("hidden_layers"))
            cfg.model.hidden_layers = m["hidden_layers"].get<std::vector<int>>();
        if (m.contains("activation")) cfg.model.activation = m["activation"].get<std::string>();
        if (m.contains("L")) cfg.model.L = m["L"].get<int>();
    }
    if (j.contains("paths")) {
        const Json& p = j["paths"];
        reject_unknown_keys(p,
                            {"train_corpora", "val_corpus", "test_corpus", "sts_corpus",
                             "checkpoint_out", "report_out"},
                            "paths");
        if (p.contains("train_corpora"))
            cfg.paths.train_corpora = p["train_corpora"].get<std::vector<std::string>>();
        if (p.contains("val_corpus")) cfg.paths.val_corpus = p["val_corpus"].get<std::string>();
        if (p.contains("test_corpus")) cfg.paths.test_corpus = p["test_corpus"].get<std::string>();
        if (p.contains("sts_corpus")) cfg.paths.sts_corpus = p["sts_corpus"].get<std::string>();
        if (p.contains("checkpoint_out"))
            cfg.paths.checkpoint_out = p["checkpoint_out"].get<std::string>();
        if (p.contains("report_out")) cfg.paths.report_out = p["report_out"].get<std::string>();
    }
    return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("config file not found '" + path + "'");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw DataError("config '" + path + "' is not valid JSON: " + e.what());
    }
    return from_json(j);
}

namespace {

struct TrainFlags {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::vector<std::string> train_corpora;
    std::string val_corpus, test_corpus, sts_corpus, checkpoint_out, report_out;
};

int cmd_train(const TrainFlags& f) {
    RunConfig cfg = RunConfig::load(f.config_path);
    if (f.seed_set) cfg.train.seed = f.seed;
    if (!f.train_corpora.empty()) cfg.paths.train_corpora = f.train_corpora;
    if (!f.val_corpus.empty()) cfg.paths.val_corpus = f.val_corpus;
    if (!f.test_corpus.empty()) cfg.paths.test_corpus = f.test_corpus;
    if (!f.sts_corpus.empty()) cfg.paths.sts_corpus = f.sts_corpus;
    if (!f.checkpoint_out.empty()) cfg.paths.checkpoint_out = f.checkpoint_out;
    if (!f.report_out.empty()) cfg.paths.report_out = f.report_out;
    std::uint64_t es;
    if (env_seed(es)) cfg.train.seed = es;

    cfg.objective.validate();
    cfg.train.validate();

    if (cfg.paths.train_corpora.empty()) throw DataError("config: paths.train_corpora is empty");
    for (const auto& p : cfg.paths.train_corpora) require_input_file(p, "train corpus");
    require_input_file(cfg.paths.val_corpus, "validation corpus");
    if (!cfg.paths.test_corpus.empty()) require_input_file(cfg.paths.test_corpus, "test corpus");
    if (!cfg.paths.sts_corpus.empty()) require_input_file(cfg.paths.sts_corpus, "sts corpus");
    require_output_slot(cfg.paths.checkpoint_out, "checkpoint output");
    require_output_slot(cfg.paths.report_out, "report output");

    std::vector<EmbeddingCorpus> train;
    for (const auto& p : cfg.paths.train_corpora)
        train.push_back(load_corpus_checked(p, cfg.model.d));
    EmbeddingCorpus val = load_corpus_checked(cfg.paths.val_corpus, cfg.model.d);

    ModelParams init = init_model(cfg.train.seed, cfg.model.d, cfg.model.hidden_layers,
                                  cfg.model.L, activation_from_name(cfg.model.activation));
    auto [best, report] = fit(train, val, cfg.train, cfg.objective, init);

    save_checkpoint(best, cfg.objective, cfg.paths.checkpoint_out);
    {
        std::ofstream out(cfg.paths.report_out, std::ios::binary);
        if (!out)
            throw DataError("cannot open report output '" + cfg.paths.report_out + "'");
        out << train_report_to_json(report) << '\n';
    }
    std::cout << "trained " << report.iterations_run << " iterations (" << report.stop_reason
              << "); best " << metric_name(cfg.train.validation_metric) << " "
              << report.best_validation_value << " at iteration " << report.best_iteration
              << "\n";
    std::cout << "checkpoint: " << cfg.paths.checkpoint_out << "\n";
    std::cout << "report: " << cfg.paths.report_out << "\n";

    if (!cfg.paths.test_corpus.empty()) {
        EmbeddingCorpus test = load_corpus_checked(cfg.paths.test_corpus, cfg.model.d);
        EmbeddingCorpus sts;
        bool has_sts = false;
        if (!cfg.paths.sts_corpus.empty()) {
            sts = load_corpus_checked(cfg.paths.sts_corpus, cfg.model.d);
            has_sts = true;
        }
        std::cout << format_report_table(evaluate_suite(test, has_sts ? &sts : nullptr, best));
    }
    return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& corpus_path,
             const std::string& sts_path, const std::string& json_out) {
    require_input_file(ckpt, "checkpoint");
    require_input_file(corpus_path, "corpus");
    if (!sts_path.empty()) require_input_file(sts_path, "sts corpus");
    if (!json_out.empty()) require_output_slot(json_out, "json output");

    Checkpoint ck = load_checkpoint(ckpt);
    EmbeddingCorpus corpus = load_corpus_checked(corpus_path, ck.params.d);
    EmbeddingCorpus sts;
    bool has_sts = false;
    if (!sts_path.empty()) {
        sts = load_corpus_checked(sts_path, ck.params.d);
        has_sts = true;
    }
    EvalReport r = evaluate_suite(corpus, has_sts ? &sts : nullptr, ck.params);
    std::cout << format_report_table(r);
    if (!json_out.empty()) {
        std::ofstream out(json_out, std::ios::binary);
        if (!out) throw DataError("cannot open json output '" + json_out + "'");
        out << report_to_json(r) << '\n';
    }
    return 0;
}

int cmd_gen_synth(const SyntheticSpec& spec, const std::string& out_path) {
    require_output_slot(out_path, "corpus output");
    EmbeddingCorpus corpus = generate_synthetic(spec);
    save_corpus(corpus, out_path);
    std::cout << "wrote " << corpus.n() << " pairs (d=" << corpus.dim() << ") to " << out_path
              << "\n";
    return 0;
}

int cmd_codeswitch(const std::string& in_path, const std::string& dict_path,
                   const std::string& out_path, const std::string& report_path, double rate,
                   std::uint64_t seed) {
    require_input_file(in_path, "sentence file");
    require_input_file(dict_path, "dictionary");
    require_output_slot(out_path, "output");
    if (!report_path.empty()) require_output_slot(report_path, "report output");

    BilingualDictionary dict = load_dictionary(dict_path);
    std::ifstream fin(in_path, std::ios::binary);
    if (!fin) throw DataError("cannot open sentence file '" + in_path + "'");
    std::vector<std::vector<std::string>> sentences;
    std::string line;
    while (std::getline(fin, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        sentences.push_back(whitespace_tokenize(line));
    }

    CodeSwitchResult res = build_codeswitch(sentences, dict, rate, seed);

    std::ofstream fout(out_path, std::ios::binary);
    if (!fout) throw DataError("cannot open output '" + out_path + "'");
    for (const auto& rec : res.records) {
        for (std::size_t i = 0; i < rec.switched.size(); ++i) {
            if (i) fout << ' ';
            fout << rec.switched[i];
        }
        fout << '\n';
    }

    Json stats;
    stats["sentences_in"] = sentences.size();
    stats["records_out"] = res.records.size();
    stats["excluded"] = res.excluded;
    stats["total_replacements"] = res.total_replacements;
    stats["dictionary_entries"] = dict.entries.size();
    stats["skipped_dictionary_lines"] = dict.skipped_lines;
    if (!report_path.empty()) {
        std::ofstream rout(report_path, std::ios::binary);
        if (!rout) throw DataError("cannot open report output '" + report_path + "'");
        rout << stats.dump(2) << '\n';
    }
    std::cout << "code-switched " << res.records.size() << " of " << sentences.size()
              << " sentences (" << res.excluded << " excluded, " << res.total_replacements
              << " replacements)\n";
    return 0;
}

int cmd_project(const std::string& ckpt, const std::string& corpus_path,
                const std::string& out_path) {
    require_input_file(ckpt, "checkpoint");
    require_input_file(corpus_path, "corpus");
    require_output_slot(out_path, "projection output");

    Checkpoint ck = load_checkpoint(ckpt);
    EmbeddingCorpus corpus = load_corpus_checked(corpus_path, ck.params.d);
    if (corpus.n() == 0) throw DataError("corpus '" + corpus_path + "' is empty");

    DisentangledBatch b = disentangle_forward(ck.params, corpus.src, corpus.tgt);
    const Index n = corpus.n();
    Matrix stacked(4 * n, corpus.dim());
    stacked.topRows(n) = b.s_m;
    stacked.middleRows(n, n) = b.t_m;
    stacked.middleRows(2 * n, n) = b.s_l;
    stacked.bottomRows(n) = b.t_l;
    std::vector<std::string> groups;
    groups.reserve(static_cast<std::size_t>(4 * n));
    for (const char* tag : {"src_semantic", "tgt_semantic", "src_language", "tgt_language"})
        for (Index i = 0; i < n; ++i) groups.emplace_back(tag);

    ProjectionResult pr = pca_project(stacked, 2, &groups);
    export_projection(pr, out_path);
    std::cout << "projected " << stacked.rows() << " points to " << out_path
              << "; explained variance";
    for (Index i = 0; i < pr.explained_variance.size(); ++i)
        std::cout << ' ' << pr.explained_variance(i);
    if (pr.rank_deficient) std::cout << " (rank-deficient input)";
    std::cout << "\n";
    return 0;
}

struct FdInstance {
    ModelParams params;
    Matrix e_s, e_t;
    std::vector<int> labels;
};

FdInstance make_fd_instance(std::uint64_t seed, int k, const LossConfig& cfg) {
    for (int attempt = 0; attempt < 64; ++attempt) {
        Rng rng(batch_seed(seed, static_cast<std::uint64_t>(k) * 64 + attempt));
        const int d = 4 + static_cast<int>(rng.index(5));
        const Index N = 3 + static_cast<Index>(rng.index(4));
        const int h = 3 + static_cast<int>(rng.index(4));
        FdInstance inst;
        inst.params = init_model(rng.raw(), d, {h}, 2, Activation::Tanh);
        inst.e_s = rng.gauss_matrix(N, d);
        inst.e_t = rng.gauss_matrix(N, d);
        inst.labels.assign(static_cast<std::size_t>(2 * N), 0);
        std::fill(inst.labels.begin() + N, inst.labels.end(), 1);
        // Instances sitting on the separation hinge are non-differentiable;
        // skip them rather than compare garbage.
        if (cfg.enabled(Term::IS) && is_kink_margin(inst.params, inst.e_s, inst.e_t) < 1e-3)
            continue;
        return inst;
    }
    throw NumericError("gradcheck: no kink-free instance after 64 attempts");
}

int cmd_gradcheck(std::uint64_t seed, int instances, double tolerance,
                  const std::string& preset_arg) {
    if (instances < 1) throw DataError("gradcheck: instances must be >= 1");
    std::vector<Preset> presets;
    if (preset_arg == "all") {
        presets = {Preset::Dream, Preset::Meat, Preset::DreamOracle, Preset::MeatOracle,
                   Preset::OracleOnly};
    } else {
        presets = {preset_from_name(preset_arg)};
    }
    double worst = 0.0;
    std::string worst_where;
    for (Preset p : presets) {
        const LossConfig cfg = LossConfig::from_preset(p);
        double mx = 0.0;
        std::string where;
        for (int k = 0; k < instances; ++k) {
            FdInstance inst = make_fd_instance(seed, k, cfg);
            FdCheckResult r = fd_check_objective(inst.params, inst.e_s, inst.e_t, cfg,
                                                 inst.labels, PairingMode::Cyclic);
            if (r.max_rel_error > mx) {
                mx = r.max_rel_error;
                where = r.worst_path;
            }
        }
        std::cout << preset_name(p) << ": max rel err " << mx << " (worst at " << where
                  << ", " << instances << " instances)\n";
        if (mx > worst) {
            worst = mx;
            worst_where = std::string(preset_name(p)) + "/" + where;
        }
    }
    if (worst > tolerance)
        throw NumericError("gradient check failed: rel err " + std::to_string(worst) + " at " +
                           worst_where + " exceeds " + std::to_string(tolerance));
    std::cout << "all gradients within " << tolerance << "\n";
    return 0;
}

}  // namespace

int dispatch(int argc, const char* const* argv) {
    CLI::App app{"disentangles cross-lingual sentence embeddings into semantic and "
                 "language parts"};
    app.require_subcommand(1);

    TrainFlags tf;
    CLI::App* train = app.add_subcommand("train", "fit a model from a run-config document");
    train->add_option("--config", tf.config_path, "run-config JSON")->required();
    CLI::Option* seed_opt = train->add_option("--seed", tf.seed, "override the config seed");
    train->add_option("--train-corpus", tf.train_corpora, "override paths.train_corpora");
    train->add_option("--val-corpus", tf.val_corpus, "override paths.val_corpus");
    train->add_option("--test-corpus", tf.test_corpus, "override paths.test_corpus");
    train->add_option("--sts-corpus", tf.sts_corpus, "override paths.sts_corpus");
    train->add_option("--checkpoint-out", tf.checkpoint_out, "override paths.checkpoint_out");
    train->add_option("--report-out", tf.report_out, "override paths.report_out");

    std::string ev_ckpt, ev_corpus, ev_sts, ev_json;
    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on a corpus");
    eval->add_option("--ckpt", ev_ckpt, "checkpoint JSON")->required();
    eval->add_option("--corpus", ev_corpus, "OEMB corpus")->required();
    eval->add_option("--sts", ev_sts, "OEMB corpus with gold scores");
    eval->add_option("--json", ev_json, "also write the report as JSON here");

    SyntheticSpec spec;
    std::string gs_out;
    int gs_src = 0, gs_tgt = 1;
    CLI::App* gen = app.add_subcommand("gen-synth", "generate a planted-structure corpus");
    gen->add_option("--out", gs_out, "output OEMB path")->required();
    gen->add_option("--n", spec.n_pairs, "number of pairs");
    gen->add_option("--d", spec.d, "embedding dimension");
    gen->add_option("--k", spec.k, "semantic latent dimension");
    gen->add_option("--offset", spec.language_offset_scale, "language offset norm");
    gen->add_option("--sigma", spec.noise_sigma, "noise standard deviation");
    gen->add_option("--seed", spec.seed, "generator seed");
    gen->add_option("--src-lang", gs_src, "source language id");
    gen->add_option("--tgt-lang", gs_tgt, "target language id");

    std::string cs_in, cs_dict, cs_out, cs_report;
    double cs_rate = 1.0;
    std::uint64_t cs_seed = 0;
    CLI::App* cs = app.add_subcommand("codeswitch", "build a code-switched sentence set");
    cs->add_option("--in", cs_in, "input sentences, one per line")->required();
    cs->add_option("--dict", cs_dict, "bilingual dictionary")->required();
    cs->add_option("--out", cs_out, "output sentences")->required();
    cs->add_option("--report", cs_report, "statistics JSON");
    cs->add_option("--rate", cs_rate, "per-token replacement probability");
    cs->add_option("--seed", cs_seed, "replacement seed");

    std::string pj_ckpt, pj_corpus, pj_out;
    CLI::App* pj = app.add_subcommand("project", "2-D projection of the four representation sets");
    pj->add_option("--ckpt", pj_ckpt, "checkpoint JSON")->required();
    pj->add_option("--corpus", pj_corpus, "OEMB corpus")->required();
    pj->add_option("--out", pj_out, "output CSV")->required();

    std::uint64_t gc_seed = 0;
    int gc_instances = 20;
    double gc_tol = 1e-4;
    std::string gc_preset = "all";
    CLI::App* gc = app.add_subcommand("gradcheck", "finite-difference check of every objective");
    gc->add_option("--seed", gc_seed, "instance seed");
    gc->add_option("--instances", gc_instances, "instances per preset");
    gc->add_option("--tolerance", gc_tol, "max allowed relative error");
    gc->add_option("--preset", gc_preset, "one preset name, or 'all'");

    try {
        app.parse(argc, argv);
        std::uint64_t es;
        if (train->parsed()) {
            tf.seed_set = seed_opt->count() > 0;
            return cmd_train(tf);
        }
        if (eval->parsed()) return cmd_eval(ev_ckpt, ev_corpus, ev_sts, ev_json);
        if (gen->parsed()) {
            spec.src_lang = static_cast<std::uint16_t>(gs_src);
            spec.tgt_lang = static_cast<std::uint16_t>(gs_tgt);
            if (env_seed(es)) spec.seed = es;
            return cmd_gen_synth(spec, gs_out);
        }
        if (cs->parsed()) {
            if (env_seed(es)) cs_seed = es;
            return cmd_codeswitch(cs_in, cs_dict, cs_out, cs_report, cs_rate, cs_seed);
        }
        if (pj->parsed()) return cmd_project(pj_ckpt, pj_corpus, pj_out);
        if (gc->parsed()) {
            if (env_seed(es)) gc_seed = es;
            return cmd_gradcheck(gc_seed, gc_instances, gc_tol, gc_preset);
        }
        return 0;
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace oracle
