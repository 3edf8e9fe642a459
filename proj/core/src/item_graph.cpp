#include "magnn/item_graph.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <string>
#include <unordered_map>

#include "magnn/errors.hpp"

namespace magnn {

ItemGraph ItemGraph::build(const std::vector<std::vector<int32_t>>& train_sequences,
                           int32_t num_items, int lookahead, bool symmetrize) {
    if (lookahead < 1) throw ContractError("ItemGraph::build: lookahead must be >= 1");
    std::vector<std::unordered_map<int32_t, int64_t>> counts(num_items);

    for (const auto& seq : train_sequences) {
        const int n = static_cast<int>(seq.size());
        for (int p = 0; p < n; ++p) {
            const int32_t i = seq[p];
            if (i < 0 || i >= num_items)
                throw ContractError("ItemGraph::build: item index out of range");
            const int stop = std::min(n, p + 1 + lookahead);
            for (int q = p + 1; q < stop; ++q) {
                const int32_t k = seq[q];
                if (k == i) continue;  // repeat consumption, no self-loop
                ++counts[i][k];
            }
        }
    }

    if (symmetrize) {
        std::vector<std::unordered_map<int32_t, int64_t>> mirrored = counts;
        for (int32_t i = 0; i < num_items; ++i)
            for (const auto& [k, c] : counts[i]) mirrored[k][i] += c;
        counts = std::move(mirrored);
    }

    ItemGraph g;
    g.num_items_ = num_items;
    g.rows_.resize(num_items);
    for (int32_t i = 0; i < num_items; ++i) {
        auto& row = g.rows_[i];
        row.reserve(counts[i].size());
        int64_t total = 0;
        for (const auto& [k, c] : counts[i]) total += c;
        for (const auto& [k, c] : counts[i])
            row.push_back({k, static_cast<double>(c) / static_cast<double>(total)});
        std::sort(row.begin(), row.end(),
                  [](const Edge& a, const Edge& b) { return a.item < b.item; });
    }
    return g;
}

std::span<const ItemGraph::Edge> ItemGraph::neighbors(int32_t item) const {
    if (item < 0 || item > num_items_)
        throw ContractError("ItemGraph::neighbors: item index " + std::to_string(item) +
                            " out of range [0, " + std::to_string(num_items_) + "]");
    if (item == num_items_) return {};  // padding index
    return rows_[item];
}

void ItemGraph::export_triples(std::ostream& os) const {
    char buf[64];
    for (int32_t i = 0; i < num_items_; ++i)
        for (const Edge& e : rows_[i]) {
            std::snprintf(buf, sizeof(buf), "%" PRId32 "\t%" PRId32 "\t%.17g\n", i, e.item,
                          e.weight);
            os << buf;
        }
}

}  // namespace magnn
