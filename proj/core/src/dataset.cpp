#include "magnn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <unordered_map>

#include "magnn/errors.hpp"

namespace magnn {

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        size_t pos = line.find(delim, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

bool parse_double(const std::string& s, double& out) {
    const char* b = s.data();
    const char* e = b + s.size();
    auto [p, ec] = std::from_chars(b, e, out);
    return ec == std::errc() && p == e && !s.empty();
}

bool parse_i64(const std::string& s, int64_t& out) {
    const char* b = s.data();
    const char* e = b + s.size();
    auto [p, ec] = std::from_chars(b, e, out);
    return ec == std::errc() && p == e && !s.empty();
}

}  // namespace

ParseResult parse_interactions(std::istream& in, const ParseFormat& fmt) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty input: missing header row");
    line = strip_cr(line);

    const auto header = split_line(line, fmt.delimiter);
    auto col_of = [&](const std::string& name, bool required) -> int {
        for (size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        if (required) throw ConfigError("input header has no column named '" + name + "'");
        return -1;
    };

    const int uc = col_of(fmt.user_col, true);
    const int ic = col_of(fmt.item_col, true);
    const bool want_rating = !(fmt.binary && fmt.rating_col.empty());
    const int rc = want_rating ? col_of(fmt.rating_col, true) : -1;
    const int tc = col_of(fmt.time_col, true);
    const int need = 1 + std::max({uc, ic, rc, tc});

    ParseResult result;
    uint64_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto fields = split_line(line, fmt.delimiter);

        std::string why;
        Interaction ev;
        if (static_cast<int>(fields.size()) < need) {
            why = "expected at least " + std::to_string(need) + " fields, got " +
                  std::to_string(fields.size());
        } else {
            ev.user_ref = fields[uc];
            ev.item_ref = fields[ic];
            ev.rating = 1.0;
            if (rc >= 0 && !parse_double(fields[rc], ev.rating))
                why = "non-numeric rating '" + fields[rc] + "'";
            else if (!parse_i64(fields[tc], ev.timestamp))
                why = "non-numeric timestamp '" + fields[tc] + "'";
            else if (ev.timestamp < 0)
                why = "negative timestamp";
            else if (!std::isfinite(ev.rating))
                why = "non-finite rating";
        }

        if (!why.empty()) {
            if (result.bad_rows >= fmt.max_bad_rows)
                throw ParseError("line " + std::to_string(lineno) + ": " + why);
            ++result.bad_rows;
            continue;
        }
        result.interactions.push_back(std::move(ev));
    }
    return result;
}

FilteredData filter_and_index(const std::vector<Interaction>& interactions,
                              double rating_threshold, int min_count, bool binary) {
    // Stage 1: rating threshold.
    std::vector<const Interaction*> kept;
    kept.reserve(interactions.size());
    for (const auto& ev : interactions)
        if (binary || ev.rating >= rating_threshold) kept.push_back(&ev);

    // Stage 2: items with enough remaining events.
    std::unordered_map<std::string, int64_t> item_count;
    for (const auto* ev : kept) ++item_count[ev->item_ref];
    std::erase_if(kept, [&](const Interaction* ev) {
        return item_count[ev->item_ref] < min_count;
    });

    // Stage 3: users with enough remaining events.
    std::unordered_map<std::string, int64_t> user_count;
    for (const auto* ev : kept) ++user_count[ev->user_ref];
    std::erase_if(kept, [&](const Interaction* ev) {
        return user_count[ev->user_ref] < min_count;
    });

    if (kept.empty())
        throw NumericError(
            "dataset degenerate: no interactions survive the rating/count filters");

    // Dense ids in first-appearance order over the surviving rows.
    FilteredData out;
    std::unordered_map<std::string, int32_t> user_idx, item_idx;
    struct Row {
        int32_t user, item;
        int64_t ts;
    };
    std::vector<Row> rows;
    rows.reserve(kept.size());
    for (const auto* ev : kept) {
        auto [uit, unew] = user_idx.try_emplace(ev->user_ref, static_cast<int32_t>(user_idx.size()));
        if (unew) out.user_ids.push_back(ev->user_ref);
        auto [iit, inew] = item_idx.try_emplace(ev->item_ref, static_cast<int32_t>(item_idx.size()));
        if (inew) out.item_ids.push_back(ev->item_ref);
        rows.push_back({uit->second, iit->second, ev->timestamp});
    }

    out.sequences.resize(out.user_ids.size());
    std::vector<std::vector<std::pair<int64_t, int32_t>>> per_user(out.user_ids.size());
    for (const Row& r : rows) per_user[r.user].push_back({r.ts, r.item});
    for (size_t u = 0; u < per_user.size(); ++u) {
        auto& evs = per_user[u];
        // Timestamp ties keep input-file order.
        std::stable_sort(evs.begin(), evs.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        out.sequences[u].reserve(evs.size());
        for (const auto& [ts, item] : evs) out.sequences[u].push_back(item);
    }
    return out;
}

SplitDataset chronological_split(FilteredData data) {
    SplitDataset out;
    out.user_ids = std::move(data.user_ids);
    out.item_ids = std::move(data.item_ids);
    const size_t M = out.user_ids.size();
    out.train.resize(M);
    out.val.resize(M);
    out.test.resize(M);
    for (size_t u = 0; u < M; ++u) {
        const auto& s = data.sequences[u];
        const int64_t n = static_cast<int64_t>(s.size());
        if (n < 10)
            throw ContractError("chronological_split: user " + std::to_string(u) +
                                " has sequence length " + std::to_string(n) + " < 10");
        const int64_t a = 7 * n / 10;  // floor(0.7 n), exact in integers
        const int64_t b = 8 * n / 10;  // floor(0.8 n)
        out.train[u].assign(s.begin(), s.begin() + a);
        out.val[u].assign(s.begin() + a, s.begin() + b);
        out.test[u].assign(s.begin() + b, s.end());
    }
    return out;
}

std::vector<TrainingInstance> make_training_instances(const SplitDataset& split,
                                                      const WindowConfig& cfg) {
    if (cfg.window_len < 1 || cfg.target_len < 1 || cfg.stride < 1 || cfg.history_cap < 0)
        throw ContractError("make_training_instances: bad window configuration");
    const int32_t pad = split.padding_index();
    const int span = cfg.window_len + cfg.target_len;

    std::vector<TrainingInstance> out;
    for (int32_t u = 0; u < split.num_users(); ++u) {
        std::vector<int32_t> s = split.train[u];
        if (static_cast<int>(s.size()) < span)
            s.insert(s.begin(), span - s.size(), pad);

        const int n = static_cast<int>(s.size());
        for (int l = 0; l + span <= n; l += cfg.stride) {
            TrainingInstance inst;
            inst.user = u;
            inst.window.assign(s.begin() + l, s.begin() + l + cfg.window_len);
            inst.targets.assign(s.begin() + l + cfg.window_len, s.begin() + l + span);
            inst.window_mask.resize(cfg.window_len);
            for (int i = 0; i < cfg.window_len; ++i)
                inst.window_mask[i] = inst.window[i] != pad ? 1 : 0;
            const int h_begin = std::max(0, l - cfg.history_cap);
            for (int p = h_begin; p < l; ++p)
                if (s[p] != pad) inst.history.push_back(s[p]);
            out.push_back(std::move(inst));
        }
    }
    return out;
}

DatasetStats dataset_stats(const SplitDataset& split) {
    DatasetStats st;
    st.users = split.user_ids.size();
    st.items = split.item_ids.size();
    for (int32_t u = 0; u < split.num_users(); ++u)
        st.interactions +=
            split.train[u].size() + split.val[u].size() + split.test[u].size();
    st.density = st.users && st.items
                     ? static_cast<double>(st.interactions) /
                           (static_cast<double>(st.users) * static_cast<double>(st.items))
                     : 0.0;
    return st;
}

}  // namespace magnn
