#ifndef COUPLEDREC_NEIGHBORHOOD_HPP
#define COUPLEDREC_NEIGHBORHOOD_HPP

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "coupledrec/rating_view.hpp"
#include "coupledrec/similarity.hpp"

namespace coupledrec {

struct NeighborhoodConfig {
    int n_neighbors = 50;
    int min_overlap = 3;
    bool positive_only = false;  // ablation flag; negative weights kept by default
};

/// Sparse symmetric cache of Pearson weights between users or between items.
/// Pairs below min_overlap co-ratings, or with zero variance on the co-rated
/// subset, are absent.
class PearsonCache {
public:
    struct Entry {
        double weight;
        int overlap;
    };

    Side side = Side::User;
    int min_overlap = 3;
    /// weights_[a] maps neighbor index b to its entry; symmetric.
    std::vector<std::unordered_map<int, Entry>> weights_;

    static PearsonCache build(const RatingMatrixView& view, Side side, int min_overlap);

    std::optional<double> weight(int a, int b) const;

    void save_triplets(const std::string& path) const;
    static PearsonCache load_triplets(const std::string& path);
};

/// Pearson correlation over the co-rated subset, each vector centered by its
/// own mean on that subset. Direct (uncached) computation by object id.
std::optional<double> pearson_weight(const RatingMatrixView& view, Side side,
                                     const std::string& a, const std::string& b,
                                     int min_overlap);

/// Mean-centered weighted neighborhood prediction over the n highest-|w|
/// users who rated j; falls back to the user mean when no neighbor
/// contributes. Result clamped to the rating scale.
double predict_ubcf(const RatingMatrixView& view, const PearsonCache& cache,
                    const std::string& user, const std::string& item,
                    const NeighborhoodConfig& cfg, bool* fell_back = nullptr);

/// Item-based mirror: item means and item neighbors rated by the user.
double predict_ibcf(const RatingMatrixView& view, const PearsonCache& cache,
                    const std::string& user, const std::string& item,
                    const NeighborhoodConfig& cfg, bool* fell_back = nullptr);

}  // namespace coupledrec

#endif
