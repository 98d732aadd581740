#pragma once

#include <string>
#include <vector>

#include "oracle/checkpoint.hpp"
#include "oracle/losses.hpp"
#include "oracle/trainer.hpp"

namespace oracle {

struct RunPaths {
    std::vector<std::string> train_corpora;
    std::string val_corpus;
    std::string test_corpus;   // optional
    std::string sts_corpus;    // optional
    std::string checkpoint_out;
    std::string report_out;
};

struct ModelSpec {
    int d = 16;
    std::vector<int> hidden_layers = {32};
    std::string activation = "tanh";
    int L = 2;
};

// One structured run document; command-line flags override only the seed and
// the paths. ORACLE_DIS_SEED, when set, overrides the seed last.
struct RunConfig {
    LossConfig objective;
    TrainConfig train;
    ModelSpec model;
    RunPaths paths;

    static RunConfig from_json(const Json& j);
    static RunConfig load(const std::string& path);
};

// Subcommand dispatcher. Exit codes: 0 success, 1 usage, 2 data/validation,
// 3 numerical failure.
int dispatch(int argc, const char* const* argv);

}  // namespace oracle
