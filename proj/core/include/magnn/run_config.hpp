#pragma once

#include <string>
#include <utility>
#include <vector>

#include "magnn/dataset.hpp"
#include "magnn/model.hpp"
#include "magnn/trainer.hpp"

namespace magnn {

// Fully resolved settings for one run. Sources, in override order: built-in
// defaults, config file, command-line settings. The resolved copy written to
// the output directory reproduces the run by itself.
struct RunConfig {
    ParseFormat format;
    double rating_threshold = 4.0;
    int min_count = 10;

    int graph_lookahead = 3;
    bool graph_symmetrize = false;

    ModelConfig model;
    TrainConfig train;
    int eval_k = 10;

    // One run seed; copied into the model and trainer streams.
    uint64_t seed = 42;

    // Optional reference counts: when set, `prepare` compares its stats
    // against them and logs any deviation.
    uint64_t expect_users = 0;
    uint64_t expect_items = 0;
    uint64_t expect_interactions = 0;

    void finalize() {
        model.seed = seed;
        train.seed = seed;
        model.validate();
        train.validate();
    }
};

// Applies one `section.key = value` setting; unknown keys are a ConfigError.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

// Line-oriented `key = value` UTF-8 text; '#' starts a comment.
RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(std::istream& in, const std::string& origin);

// Canonical serialization (fixed key order) of every setting.
std::string serialize_run_config(const RunConfig& cfg);

}  // namespace magnn
