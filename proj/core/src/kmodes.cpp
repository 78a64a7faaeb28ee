#include "coupledrec/kmodes.hpp"

#include <algorithm>
#include <map>
#include <random>

namespace coupledrec {

namespace {

double cluster_similarity(const SimilarityIndices& idx, const AttributeTable& items,
                          const std::vector<int>& members,
                          const std::vector<std::string>& mode) {
    double s = 0.0;
    for (int m : members) s += coupled_row_sim(idx, items.cells[m], mode);
    return s;
}

}  // namespace

KModesClustering kmodes_fit(const AttributeTable& items, const SimilarityIndices& idx,
                            int g, std::uint64_t seed, int max_iter) {
    int n = static_cast<int>(items.object_count());
    if (g < 1 || g > n)
        throw ConfigError("cluster count " + std::to_string(g) + " out of range [1," +
                          std::to_string(n) + "]");
    KModesClustering km;
    km.g = g;

    // seed modes from g distinct item rows
    std::mt19937_64 rng(seed);
    std::vector<int> pool(n);
    for (int i = 0; i < n; ++i) pool[i] = i;
    std::shuffle(pool.begin(), pool.end(), rng);
    for (int c = 0; c < g; ++c) km.modes.push_back(items.cells[pool[c]]);

    km.assignment.assign(n, -1);
    for (int iter = 0; iter < max_iter; ++iter) {
        // assignment: each item to the most similar mode, ties to the lower cluster
        bool changed = false;
        double objective = 0.0;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double best_sim = coupled_row_sim(idx, items.cells[i], km.modes[0]);
            for (int c = 1; c < g; ++c) {
                double s = coupled_row_sim(idx, items.cells[i], km.modes[c]);
                if (s > best_sim) {
                    best_sim = s;
                    best = c;
                }
            }
            if (km.assignment[i] != best) {
                km.assignment[i] = best;
                changed = true;
            }
            objective += best_sim;
        }
        km.objective_trace.push_back(objective);
        if (!changed && iter > 0) break;

        // mode update: per attribute most frequent member value (ties to the
        // lexicographically smallest), kept only if it does not hurt
        std::vector<std::vector<int>> members(g);
        for (int i = 0; i < n; ++i) members[km.assignment[i]].push_back(i);
        for (int c = 0; c < g; ++c) {
            if (members[c].empty()) {
                // reseed with the item least similar to its own mode
                int worst = -1;
                double worst_sim = 2.0;
                for (int i = 0; i < n; ++i) {
                    double s =
                        coupled_row_sim(idx, items.cells[i], km.modes[km.assignment[i]]);
                    if (s < worst_sim) {
                        worst_sim = s;
                        worst = i;
                    }
                }
                if (worst >= 0) km.modes[c] = items.cells[worst];
                continue;
            }
            std::vector<std::string> candidate(items.attribute_count());
            for (std::size_t a = 0; a < items.attribute_count(); ++a) {
                std::map<std::string, int> freq;  // ordered: ties resolve lexicographically
                for (int m : members[c]) {
                    const auto& v = items.cells[m][a];
                    if (!is_missing(v)) ++freq[v];
                }
                int best_count = 0;
                for (const auto& [v, cnt] : freq) {
                    if (cnt > best_count) {
                        best_count = cnt;
                        candidate[a] = v;
                    }
                }
            }
            double before = cluster_similarity(idx, items, members[c], km.modes[c]);
            double after = cluster_similarity(idx, items, members[c], candidate);
            if (after >= before) km.modes[c] = candidate;
        }
    }
    return km;
}

int KModesClustering::cluster_of(const AttributeTable& items,
                                 const std::string& item_id) const {
    int i = items.object_index(item_id);
    if (i < 0) throw NotFoundError("unknown item: " + item_id);
    return assignment[i];
}

double kmodes_predict(const KModesClustering& clustering, const AttributeTable& items,
                      const RatingMatrixView& view, const std::string& user,
                      const std::string& item, bool* fell_back) {
    if (fell_back) *fell_back = false;
    int cluster = clustering.cluster_of(items, item);
    int u = view.user_index(user);
    if (u < 0) {
        if (fell_back) *fell_back = true;
        return view.clamp(view.global_mean());
    }
    const auto& rated = view.user_ratings(u);
    if (rated.empty()) {
        if (fell_back) *fell_back = true;
        return view.clamp(view.global_mean());
    }
    double sum = 0.0;
    int n = 0;
    for (const auto& [i, r] : rated) {
        int idx = items.object_index(view.item_ids()[i]);
        if (idx < 0) continue;
        if (clustering.assignment[idx] != cluster) continue;
        sum += r;
        ++n;
    }
    if (n == 0) {
        if (fell_back) *fell_back = true;
        return view.clamp(view.user_mean(u));
    }
    return view.clamp(sum / n);
}

}  // namespace coupledrec
