#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "magnn/evaluator.hpp"

namespace magnn {

double recall_at_k(const std::vector<int32_t>& ranked,
                   const std::unordered_set<int32_t>& relevant, int k) {
    if (relevant.empty()) throw ContractError("recall_at_k: empty relevant set");
    const size_t top = std::min(ranked.size(), static_cast<size_t>(k));
    int64_t hits = 0;
    for (size_t r = 0; r < top; ++r)
        if (relevant.count(ranked[r])) ++hits;
    return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

double ndcg_at_k(const std::vector<int32_t>& ranked,
                 const std::unordered_set<int32_t>& relevant, int k) {
    if (relevant.empty()) throw ContractError("ndcg_at_k: empty relevant set");
    const size_t top = std::min(ranked.size(), static_cast<size_t>(k));
    double dcg = 0.0;
    for (size_t r = 0; r < top; ++r)
        if (relevant.count(ranked[r])) dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    const size_t ideal = std::min(static_cast<size_t>(k), relevant.size());
    double idcg = 0.0;
    for (size_t r = 0; r < ideal; ++r) idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    return dcg / idcg;
}

std::string report_json(const EvalReport& report) {
    nlohmann::json j;
    j["k"] = report.k;
    j["split"] = report.split;
    j["variant"] = report.variant;
    if (!report.checkpoint.empty()) j["checkpoint"] = report.checkpoint;
    j["recall"] = report.recall;
    j["ndcg"] = report.ndcg;
    j["evaluated_users"] = report.evaluated_users;
    j["skipped_users"] = report.skipped_users;
    return j.dump(2) + "\n";
}

void write_per_user_csv(const EvalReport& report, std::ostream& os) {
    os << "user,recall,ndcg\n";
    char buf[96];
    for (const UserMetrics& m : report.per_user) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", m.user, m.recall, m.ndcg);
        os << buf;
    }
}

}  // namespace magnn
