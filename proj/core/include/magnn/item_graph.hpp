#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

namespace magnn {

// Row-normalized item adjacency built from forward co-occurrence counts in
// the training sequences. Construction is single-threaded; once built the
// graph is immutable and shared read-only.
class ItemGraph {
public:
    struct Edge {
        int32_t item;
        double weight;
    };

    ItemGraph() = default;

    // For every occurrence of item i, count a directed edge to each of the
    // next `lookahead` items in the same sequence (clipped at the end,
    // self-pairs skipped), accumulate counts across users, then divide each
    // row by its row sum. `symmetrize` mirrors counts before normalizing.
    static ItemGraph build(const std::vector<std::vector<int32_t>>& train_sequences,
                           int32_t num_items, int lookahead = 3, bool symmetrize = false);

    // Normalized row of item i; the padding index (num_items) yields an
    // empty row. Out-of-range indices are a contract violation.
    std::span<const Edge> neighbors(int32_t item) const;

    int32_t num_items() const { return num_items_; }

    // Text triples `i<TAB>k<TAB>weight`, sorted by (i, k).
    void export_triples(std::ostream& os) const;

private:
    int32_t num_items_ = 0;
    std::vector<std::vector<Edge>> rows_;
};

}  // namespace magnn
