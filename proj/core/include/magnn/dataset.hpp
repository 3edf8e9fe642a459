#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <vector>

namespace magnn {

// One raw interaction event as read from the input log.
struct Interaction {
    std::string user_ref;
    std::string item_ref;
    double rating = 0.0;
    int64_t timestamp = 0;
};

// Column layout of the delimited input file. When `binary` is set the data
// carries no preference scores: the rating column may be absent and the
// rating threshold is skipped during filtering.
struct ParseFormat {
    char delimiter = ',';
    std::string user_col = "userId";
    std::string item_col = "movieId";
    std::string rating_col = "rating";
    std::string time_col = "timestamp";
    bool binary = false;
    // Malformed rows tolerated (counted, skipped) before parsing fails.
    uint64_t max_bad_rows = 0;
};

struct ParseResult {
    std::vector<Interaction> interactions;
    uint64_t bad_rows = 0;
};

// Per-user chronological sequences with dense ids, before splitting.
struct FilteredData {
    std::vector<std::string> user_ids;  // dense user index -> external id
    std::vector<std::string> item_ids;  // dense item index -> external id
    std::vector<std::vector<int32_t>> sequences;
};

struct SplitDataset {
    std::vector<std::string> user_ids;
    std::vector<std::string> item_ids;
    std::vector<std::vector<int32_t>> train, val, test;

    int32_t num_users() const { return static_cast<int32_t>(user_ids.size()); }
    int32_t num_items() const { return static_cast<int32_t>(item_ids.size()); }
    // Reserved index for window padding; its embedding row stays zero.
    int32_t padding_index() const { return num_items(); }
};

struct WindowConfig {
    int window_len = 5;   // |L|
    int target_len = 3;   // |T|
    int stride = 1;
    int history_cap = 20;  // most recent history items kept
};

struct TrainingInstance {
    int32_t user = 0;
    std::vector<int32_t> window;       // exactly window_len, may contain pads
    std::vector<int32_t> history;      // pad-free, possibly empty
    std::vector<int32_t> targets;      // exactly target_len
    std::vector<uint8_t> window_mask;  // true where the window entry is real
};

struct DatasetStats {
    uint64_t users = 0;
    uint64_t items = 0;
    uint64_t interactions = 0;
    double density = 0.0;
};

// Reads delimited UTF-8 text with a header row. Rows that do not parse are
// counted and skipped up to fmt.max_bad_rows; the next bad row raises a
// ParseError naming its 1-based line. A header missing a configured column
// raises ConfigError.
ParseResult parse_interactions(std::istream& in, const ParseFormat& fmt);

// Applies the preprocessing rules in order: drop ratings below the threshold,
// drop items with fewer than min_count remaining events, then drop users with
// fewer than min_count remaining events (one pass, no fixpoint). Survivors
// get dense indices in first-appearance order; per-user sequences are sorted
// by (timestamp, input order).
FilteredData filter_and_index(const std::vector<Interaction>& interactions,
                              double rating_threshold = 4.0, int min_count = 10,
                              bool binary = false);

// Per-user prefix split: |train| = floor(0.7 n), |val| = floor(0.8 n) -
// floor(0.7 n), |test| = the rest. Requires every sequence length >= 10.
SplitDataset chronological_split(FilteredData data);

// Sliding windows over each user's training sequence. Sequences shorter than
// window_len + target_len are left-padded with the padding index so every
// user yields at least one instance.
std::vector<TrainingInstance> make_training_instances(const SplitDataset& split,
                                                      const WindowConfig& cfg = {});

DatasetStats dataset_stats(const SplitDataset& split);

}  // namespace magnn
