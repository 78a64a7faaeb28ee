#ifndef COUPLEDREC_KMODES_HPP
#define COUPLEDREC_KMODES_HPP

#include <string>
#include <vector>

#include "coupledrec/rating_view.hpp"
#include "coupledrec/similarity.hpp"

namespace coupledrec {

/// Categorical clustering where each cluster is represented by a synthetic
/// mode row and items are assigned by coupled similarity (maximized, not
/// Hamming distance). A frequency-based mode update is only accepted when it
/// does not lower the cluster's total member similarity, which keeps the
/// objective non-decreasing.
struct KModesClustering {
    int g = 0;
    std::vector<std::vector<std::string>> modes;  // one synthetic row per cluster
    std::vector<int> assignment;                  // item index -> cluster
    std::vector<double> objective_trace;          // after each assignment pass

    int cluster_of(const AttributeTable& items, const std::string& item_id) const;
};

KModesClustering kmodes_fit(const AttributeTable& items, const SimilarityIndices& idx,
                            int g, std::uint64_t seed, int max_iter = 50);

/// Mean of the user's training ratings on items sharing the target's cluster;
/// falls back to the user mean, then to the global mean. Clamped.
double kmodes_predict(const KModesClustering& clustering, const AttributeTable& items,
                      const RatingMatrixView& view, const std::string& user,
                      const std::string& item, bool* fell_back = nullptr);

}  // namespace coupledrec

#endif
