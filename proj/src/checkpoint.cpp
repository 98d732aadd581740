#include "oracle/checkpoint.hpp"

#include <fstream>

namespace oracle {

namespace {

constexpr int kFormatVersion = 1;

Json mat_to_json(const Matrix& M) {
    Json rows = Json::array();
    for (Index i = 0; i < M.rows(); ++i) {
        Json row = Json::array();
        for (Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Json vec_to_json(const Vector& v) {
    Json out = Json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Matrix mat_from_json(const Json& j, const std::string& what) {
    if (!j.is_array() || j.empty() || !j[0].is_array())
        throw DataError("checkpoint: " + what + " is not a matrix");
    const Index rows = static_cast<Index>(j.size());
    const Index cols = static_cast<Index>(j[0].size());
    Matrix M(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const Json& row = j[static_cast<size_t>(i)];
        if (!row.is_array() || static_cast<Index>(row.size()) != cols)
            throw DataError("checkpoint: ragged matrix in " + what);
        for (Index c = 0; c < cols; ++c) M(i, c) = row[static_cast<size_t>(c)].get<double>();
    }
    return M;
}

Vector vec_from_json(const Json& j, const std::string& what) {
    if (!j.is_array()) throw DataError("checkpoint: " + what + " is not a vector");
    Vector v(static_cast<Index>(j.size()));
    for (Index i = 0; i < v.size(); ++i) v(i) = j[static_cast<size_t>(i)].get<double>();
    return v;
}

Json mlp_to_json(const MlpParams& mlp) {
    Json layers = Json::array();
    for (size_t i = 0; i < mlp.W.size(); ++i) {
        Json layer;
        layer["W"] = mat_to_json(mlp.W[i]);
        layer["b"] = vec_to_json(mlp.b[i]);
        layers.push_back(std::move(layer));
    }
    return layers;
}

MlpParams mlp_from_json(const Json& j, Activation act, const std::string& what) {
    if (!j.is_array() || j.empty()) throw DataError("checkpoint: " + what + " has no layers");
    MlpParams mlp;
    mlp.activation = act;
    for (size_t i = 0; i < j.size(); ++i) {
        const Json& layer = j[i];
        const std::string tag = what + " layer " + std::to_string(i);
        if (!layer.contains("W") || !layer.contains("b"))
            throw DataError("checkpoint: " + tag + " missing W or b");
        Matrix W = mat_from_json(layer["W"], tag + " W");
        Vector b = vec_from_json(layer["b"], tag + " b");
        if (W.cols() != b.size())
            throw DataError("checkpoint: " + tag + " W cols " + std::to_string(W.cols()) +
                            " != b size " + std::to_string(b.size()));
        if (!mlp.W.empty() && mlp.W.back().cols() != W.rows())
            throw DataError("checkpoint: " + tag + " input dim " + std::to_string(W.rows()) +
                            " does not chain from previous layer");
        mlp.W.push_back(std::move(W));
        mlp.b.push_back(std::move(b));
    }
    return mlp;
}

Json head_to_json(const ClassifierHead& head) {
    Json j;
    j["W"] = mat_to_json(head.W);
    j["b"] = vec_to_json(head.b);
    return j;
}

ClassifierHead head_from_json(const Json& j, const std::string& what) {
    if (!j.contains("W") || !j.contains("b"))
        throw DataError("checkpoint: " + what + " missing W or b");
    ClassifierHead head;
    head.W = mat_from_json(j["W"], what + " W");
    head.b = vec_from_json(j["b"], what + " b");
    if (head.W.cols() != head.b.size())
        throw DataError("checkpoint: " + what + " W cols != b size");
    return head;
}

}  // namespace

Json loss_config_to_json(const LossConfig& cfg) {
    Json j;
    j["preset"] = preset_name(cfg.preset);
    Json terms = Json::array();
    for (Term t : all_terms())
        if (cfg.enabled(t)) terms.push_back(term_name(t));
    j["terms"] = std::move(terms);
    Json weights = Json::object();
    for (Term t : all_terms()) {
        auto it = cfg.weights.find(t);
        if (it != cfg.weights.end()) weights[term_name(t)] = it->second;
    }
    j["weights"] = std::move(weights);
    j["adversarial_lambda"] = cfg.adversarial_lambda;
    return j;
}

LossConfig loss_config_from_json(const Json& j) {
    LossConfig cfg;
    if (j.contains("preset")) cfg.preset = preset_from_name(j["preset"].get<std::string>());
    if (j.contains("terms")) {
        cfg.enabled_terms.clear();
        for (const auto& name : j["terms"])
            cfg.enabled_terms.insert(term_from_name(name.get<std::string>()));
    } else {
        cfg.enabled_terms = LossConfig::from_preset(cfg.preset).enabled_terms;
    }
    if (j.contains("weights")) {
        for (const auto& [name, w] : j["weights"].items())
            cfg.weights[term_from_name(name)] = w.get<double>();
    }
    if (j.contains("adversarial_lambda"))
        cfg.adversarial_lambda = j["adversarial_lambda"].get<double>();
    cfg.validate();
    return cfg;
}

Json model_to_json(const ModelParams& params, const LossConfig& cfg) {
    Json j;
    j["format_version"] = kFormatVersion;
    j["d"] = params.d;
    j["L"] = params.L;
    j["activation"] = activation_name(params.mlp_m.activation);
    j["mlp_m"] = mlp_to_json(params.mlp_m);
    j["mlp_l"] = mlp_to_json(params.mlp_l);
    j["lang_head"] = head_to_json(params.lang_head);
    j["adv_head"] = head_to_json(params.adv_head);
    j["objective"] = loss_config_to_json(cfg);
    return j;
}

Checkpoint model_from_json(const Json& j) {
    if (!j.contains("format_version"))
        throw DataError("checkpoint: missing format_version");
    const int ver = j["format_version"].get<int>();
    if (ver != kFormatVersion)
        throw DataError("checkpoint: unsupported format_version " + std::to_string(ver) +
                        " (expected " + std::to_string(kFormatVersion) + ")");
    for (const char* key : {"d", "L", "activation", "mlp_m", "mlp_l", "lang_head", "adv_head"})
        if (!j.contains(key)) throw DataError(std::string("checkpoint: missing field ") + key);

    Checkpoint ck;
    ck.params.d = j["d"].get<int>();
    ck.params.L = j["L"].get<int>();
    const Activation act = activation_from_name(j["activation"].get<std::string>());
    ck.params.mlp_m = mlp_from_json(j["mlp_m"], act, "mlp_m");
    ck.params.mlp_l = mlp_from_json(j["mlp_l"], act, "mlp_l");
    ck.params.lang_head = head_from_json(j["lang_head"], "lang_head");
    ck.params.adv_head = head_from_json(j["adv_head"], "adv_head");

    const Index d = ck.params.d;
    auto check_io = [&](const MlpParams& mlp, const char* what) {
        if (mlp.W.front().rows() != d || mlp.W.back().cols() != d)
            throw DataError(std::string("checkpoint: ") + what + " does not map d=" +
                            std::to_string(d) + " to itself");
    };
    check_io(ck.params.mlp_m, "mlp_m");
    check_io(ck.params.mlp_l, "mlp_l");
    auto check_head = [&](const ClassifierHead& h, const char* what) {
        if (h.W.rows() != d || h.W.cols() != ck.params.L)
            throw DataError(std::string("checkpoint: ") + what + " is not d x L");
    };
    check_head(ck.params.lang_head, "lang_head");
    check_head(ck.params.adv_head, "adv_head");

    ck.objective = j.contains("objective") ? loss_config_from_json(j["objective"])
                                           : LossConfig::from_preset(Preset::MeatOracle);
    return ck;
}

void save_checkpoint(const ModelParams& params, const LossConfig& cfg,
                     const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("save_checkpoint: cannot open '" + path + "' for writing");
    out << model_to_json(params, cfg).dump(2) << '\n';
    if (!out) throw DataError("save_checkpoint: write to '" + path + "' failed");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("load_checkpoint: cannot open '" + path + "'");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw DataError("load_checkpoint: '" + path + "' is not valid JSON: " + e.what());
    }
    return model_from_json(j);
}

}  // namespace oracle
