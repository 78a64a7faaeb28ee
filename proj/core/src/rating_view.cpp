#include "coupledrec/rating_view.hpp"

#include <algorithm>

namespace coupledrec {

RatingMatrixView RatingMatrixView::build(const RatingTable& table) {
    if (table.entries.empty()) throw EmptyInputError("empty rating table");
    RatingMatrixView v;
    v.scale_min_ = table.scale_min;
    v.scale_max_ = table.scale_max;
    v.n_ratings_ = table.entries.size();
    for (const auto& e : table.entries) {
        if (v.user_index_.emplace(e.user_id, static_cast<int>(v.user_ids_.size())).second)
            v.user_ids_.push_back(e.user_id);
        if (v.item_index_.emplace(e.item_id, static_cast<int>(v.item_ids_.size())).second)
            v.item_ids_.push_back(e.item_id);
    }
    v.by_user_.resize(v.user_ids_.size());
    v.by_item_.resize(v.item_ids_.size());
    double total = 0.0;
    for (const auto& e : table.entries) {
        int u = v.user_index_.at(e.user_id);
        int i = v.item_index_.at(e.item_id);
        v.by_user_[u].emplace_back(i, e.rating);
        v.by_item_[i].emplace_back(u, e.rating);
        total += e.rating;
    }
    v.global_mean_ = total / static_cast<double>(table.entries.size());
    for (auto& list : v.by_user_) std::sort(list.begin(), list.end());
    for (auto& list : v.by_item_) std::sort(list.begin(), list.end());
    auto means = [&](const std::vector<std::vector<std::pair<int, double>>>& lists,
                     std::vector<double>& out) {
        out.resize(lists.size());
        for (std::size_t i = 0; i < lists.size(); ++i) {
            if (lists[i].empty()) {
                out[i] = v.global_mean_;
                continue;
            }
            double s = 0.0;
            for (const auto& [_, r] : lists[i]) s += r;
            out[i] = s / lists[i].size();
        }
    };
    means(v.by_user_, v.user_mean_);
    means(v.by_item_, v.item_mean_);
    return v;
}

int RatingMatrixView::user_index(const std::string& id) const {
    auto it = user_index_.find(id);
    return it == user_index_.end() ? -1 : it->second;
}

int RatingMatrixView::item_index(const std::string& id) const {
    auto it = item_index_.find(id);
    return it == item_index_.end() ? -1 : it->second;
}

bool RatingMatrixView::rating(int u, int i, double& out) const {
    const auto& list = by_user_[u];
    auto it = std::lower_bound(list.begin(), list.end(), std::make_pair(i, -1e300));
    if (it != list.end() && it->first == i) {
        out = it->second;
        return true;
    }
    return false;
}

}  // namespace coupledrec
