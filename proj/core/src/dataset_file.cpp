#include "magnn/dataset_file.hpp"

#include <fstream>

#include <json.hpp>

#include "magnn/bytesio.hpp"
#include "magnn/errors.hpp"

namespace magnn {

namespace {

void write_index_list(std::ostream& os, const std::vector<int32_t>& xs) {
    write_u32(os, static_cast<uint32_t>(xs.size()));
    for (int32_t x : xs) write_u32(os, static_cast<uint32_t>(x));
}

std::vector<int32_t> read_index_list(std::istream& is, int32_t num_items, const char* what) {
    const uint32_t n = read_u32(is, what);
    std::vector<int32_t> xs(n);
    for (auto& x : xs) {
        x = static_cast<int32_t>(read_u32(is, what));
        if (x < 0 || x >= num_items)
            throw ParseError(std::string("dataset file: item index out of range in ") + what);
    }
    return xs;
}

}  // namespace

void save_dataset(const SplitDataset& split, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot open dataset file for writing: " + path);
    os.write(kDatasetMagic, 8);
    write_u64(os, split.user_ids.size());
    write_u64(os, split.item_ids.size());
    for (const auto& id : split.user_ids) write_str(os, id);
    for (const auto& id : split.item_ids) write_str(os, id);
    for (int32_t u = 0; u < split.num_users(); ++u) {
        write_index_list(os, split.train[u]);
        write_index_list(os, split.val[u]);
        write_index_list(os, split.test[u]);
    }
    if (!os) throw ConfigError("write failed for dataset file: " + path);
}

SplitDataset load_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open dataset file: " + path);
    char magic[8];
    if (!is.read(magic, 8) || std::string(magic, 8) != kDatasetMagic)
        throw ParseError("bad dataset magic (expected MAGNNDS1): " + path);

    SplitDataset split;
    const uint64_t users = read_u64(is, "user count");
    const uint64_t items = read_u64(is, "item count");
    split.user_ids.reserve(users);
    split.item_ids.reserve(items);
    for (uint64_t u = 0; u < users; ++u) split.user_ids.push_back(read_str(is, "user id"));
    for (uint64_t i = 0; i < items; ++i) split.item_ids.push_back(read_str(is, "item id"));
    split.train.resize(users);
    split.val.resize(users);
    split.test.resize(users);
    const int32_t n = split.num_items();
    for (uint64_t u = 0; u < users; ++u) {
        split.train[u] = read_index_list(is, n, "train split");
        split.val[u] = read_index_list(is, n, "val split");
        split.test[u] = read_index_list(is, n, "test split");
    }
    return split;
}

std::string stats_json(const DatasetStats& stats) {
    nlohmann::json j;
    j["users"] = stats.users;
    j["items"] = stats.items;
    j["interactions"] = stats.interactions;
    j["density"] = stats.density;
    return j.dump(2) + "\n";
}

}  // namespace magnn
