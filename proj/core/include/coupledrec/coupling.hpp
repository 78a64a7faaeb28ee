#ifndef COUPLEDREC_COUPLING_HPP
#define COUPLEDREC_COUPLING_HPP

#include <map>
#include <string>
#include <vector>

#include "coupledrec/dataset.hpp"
#include "coupledrec/factorization.hpp"

namespace coupledrec {

/// Table D: for every (user attribute, item attribute) pair, a value x value
/// matrix of shrunken mean rating residuals with support counts. A cell with
/// no support is exactly zero.
class CellCouplingTensor {
public:
    struct Cell {
        double value = 0.0;
        int support = 0;
    };

    std::vector<std::string> user_attrs, item_attrs;
    /// cells[p][q] maps (user value, item value) to its cell.
    std::vector<std::vector<std::map<std::pair<std::string, std::string>, Cell>>> cells;
    double tau = 0.0;
    double global_mean = 0.0;

    Cell at(int p, int q, const std::string& x, const std::string& w) const;

    void save_text(const std::string& path) const;
    static CellCouplingTensor load_text(const std::string& path);
};

/// Builds Table D from the dataset's (training) ratings:
///   cell = n/(n+tau) * mean(rating - global mean) over matching ratings.
/// MISSING attribute values contribute to no cell.
CellCouplingTensor build_cell_couplings(const Dataset& ds, double tau);

enum class CouplingAggregation { PerUserAttr, PerItemAttr };

/// Mean absolute supported-cell entry per attribute, averaged across the
/// other side's attributes; a coupling-strength summary for reporting.
std::map<std::string, double> aggregate_cell_couplings(const CellCouplingTensor& tensor,
                                                       CouplingAggregation mode);

/// Mean of the tensor cells addressed by the pair's attribute values, skipping
/// MISSING cells and renormalizing by the count actually summed.
double predict_coupling_bias(const CellCouplingTensor& tensor, const Dataset& ds,
                             const std::string& user, const std::string& item);

struct EnsembleConfig {
    double gamma_mf = 1.0;  // weight of the coupled factorization prediction
    double gamma_d = 0.0;   // weight of the coupling-bias prediction
    std::map<std::string, std::string> provenance;
};

/// gamma_mf * cmf + gamma_d * (global mean + coupling bias), clamped.
double predict_ensemble(const CmfModel& model, const CellCouplingTensor& tensor,
                        const EnsembleConfig& cfg, const Dataset& ds,
                        const std::string& user, const std::string& item);

}  // namespace coupledrec

#endif
