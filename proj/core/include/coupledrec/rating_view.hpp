#ifndef COUPLEDREC_RATING_VIEW_HPP
#define COUPLEDREC_RATING_VIEW_HPP

#include <string>
#include <unordered_map>
#include <vector>

#include "coupledrec/dataset.hpp"

namespace coupledrec {

/// Indexed view over a RatingTable: per-user and per-item rating lists,
/// means, and the global mean. Users or items without ratings take the
/// global mean as their mean.
class RatingMatrixView {
public:
    static RatingMatrixView build(const RatingTable& table);

    std::size_t user_count() const { return user_ids_.size(); }
    std::size_t item_count() const { return item_ids_.size(); }
    std::size_t rating_count() const { return n_ratings_; }

    const std::vector<std::string>& user_ids() const { return user_ids_; }
    const std::vector<std::string>& item_ids() const { return item_ids_; }

    int user_index(const std::string& id) const;  // -1 if unknown
    int item_index(const std::string& id) const;

    /// (item index, rating) pairs sorted by item index.
    const std::vector<std::pair<int, double>>& user_ratings(int u) const {
        return by_user_[u];
    }
    const std::vector<std::pair<int, double>>& item_ratings(int i) const {
        return by_item_[i];
    }

    double user_mean(int u) const { return user_mean_[u]; }
    double item_mean(int i) const { return item_mean_[i]; }
    double global_mean() const { return global_mean_; }
    double scale_min() const { return scale_min_; }
    double scale_max() const { return scale_max_; }

    double clamp(double r) const {
        return r < scale_min_ ? scale_min_ : (r > scale_max_ ? scale_max_ : r);
    }

    /// Rating of (u,i) if present.
    bool rating(int u, int i, double& out) const;

private:
    std::vector<std::string> user_ids_, item_ids_;
    std::unordered_map<std::string, int> user_index_, item_index_;
    std::vector<std::vector<std::pair<int, double>>> by_user_, by_item_;
    std::vector<double> user_mean_, item_mean_;
    double global_mean_ = 0.0;
    double scale_min_ = 1.0, scale_max_ = 5.0;
    std::size_t n_ratings_ = 0;
};

}  // namespace coupledrec

#endif
