#include "magnn/trainer.hpp"

#include <json.hpp>

namespace magnn {

std::string epoch_json_line(const EpochStats& stats) {
    nlohmann::json j;
    j["epoch"] = stats.epoch;
    j["train_loss"] = stats.train_loss;
    j["val_recall10"] = stats.val_recall10;
    j["val_ndcg10"] = stats.val_ndcg10;
    j["seconds"] = stats.seconds;
    return j.dump() + "\n";
}

}  // namespace magnn
