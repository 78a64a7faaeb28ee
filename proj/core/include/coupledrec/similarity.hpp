#ifndef COUPLEDREC_SIMILARITY_HPP
#define COUPLEDREC_SIMILARITY_HPP

#include <string>
#include <unordered_map>
#include <vector>

#include "coupledrec/dataset.hpp"

namespace coupledrec {

/// Per-attribute value occurrence counts over a categorical table.
/// MISSING cells are excluded everywhere.
struct ValueFrequencyIndex {
    std::vector<std::unordered_map<std::string, int>> counts;  // [attribute][value]
    int object_count = 0;

    int frequency(int attr, const std::string& value) const {
        auto it = counts[attr].find(value);
        return it == counts[attr].end() ? 0 : it->second;
    }
};

/// Joint value counts for every ordered attribute pair (j,k), j != k, over
/// objects where neither cell is MISSING.
struct CooccurrenceIndex {
    // joint[j][k][vj][vk]; totals[j][k][vj] = sum over vk
    std::vector<std::vector<std::unordered_map<
        std::string, std::unordered_map<std::string, int>>>> joint;
    std::vector<std::vector<std::unordered_map<std::string, int>>> totals;
};

struct SimilarityIndices {
    ValueFrequencyIndex freq;
    CooccurrenceIndex cooc;
    std::vector<Attribute> attributes;
};

enum class Side { User, Item };

/// Dense symmetric coupled object similarity over one side's objects.
struct ObjectSimMatrix {
    Side side = Side::User;
    std::vector<std::string> ids;
    std::vector<double> values;  // row-major, n*n

    std::size_t size() const { return ids.size(); }
    double at(std::size_t a, std::size_t b) const { return values[a * ids.size() + b]; }
    double& at(std::size_t a, std::size_t b) { return values[a * ids.size() + b]; }
    int index_of(const std::string& id) const;

    void save_binary(const std::string& path) const;
    static ObjectSimMatrix load_binary(const std::string& path);
    void save_text(const std::string& path) const;

    /// FNV-1a over the serialized content; identifies the matrix in model artifacts.
    std::string digest() const;
};

/// Requires every attribute categorical; throws PreconditionError otherwise.
SimilarityIndices build_indices(const AttributeTable& table);

/// Frequency-driven similarity of two values of one attribute:
///   f(x)f(y) / (f(x) + f(y) + f(x)f(y)),  always in (0,1).
double intra_value_sim(const ValueFrequencyIndex& freq, int attr,
                       const std::string& x, const std::string& y);

/// Co-occurrence-driven similarity: averaged over the other attributes, the
/// overlap of the conditional value distributions given x and given y.
/// Defined as 1 for x == y and identically 1 when the table has one attribute.
double inter_value_sim(const SimilarityIndices& idx, int attr,
                       const std::string& x, const std::string& y);

/// Product of the intra and inter channels; either can veto similarity.
double coupled_value_sim(const SimilarityIndices& idx, int attr,
                         const std::string& x, const std::string& y);

/// Attribute-wise mean of coupled value similarities over attributes where
/// both rows are non-MISSING; 0 when no attribute qualifies.
double coupled_row_sim(const SimilarityIndices& idx,
                       const std::vector<std::string>& row_a,
                       const std::vector<std::string>& row_b);

double coupled_object_sim(const AttributeTable& table, const SimilarityIndices& idx,
                          const std::string& a, const std::string& b);

ObjectSimMatrix build_object_sim_matrix(const AttributeTable& table, Side side);

/// Descending by score; ties broken by position in the matrix id list; the
/// query object is excluded.
std::vector<std::pair<std::string, double>> top_k_neighbors(
    const ObjectSimMatrix& sim, const std::string& id, int k);

}  // namespace coupledrec

#endif
