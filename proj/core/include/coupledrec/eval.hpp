#ifndef COUPLEDREC_EVAL_HPP
#define COUPLEDREC_EVAL_HPP

#include <map>
#include <string>
#include <vector>

#include "coupledrec/coupling.hpp"
#include "coupledrec/dataset.hpp"

namespace coupledrec {

enum class Stratification { None, PerUser };

struct SplitSpec {
    double train_fraction = 0.8;
    /// carved out of the train portion, as a fraction of it
    double validation_fraction = 0.1;
    std::uint64_t seed = 42;
    Stratification stratification = Stratification::PerUser;
};

struct SplitResult {
    RatingTable train, validation, test;
};

/// Deterministic disjoint split whose union is the input. PER_USER keeps at
/// least one training rating per user when possible.
SplitResult split_ratings(const RatingTable& table, const SplitSpec& spec);

/// pairs of (truth, prediction)
double mae(const std::vector<std::pair<double, double>>& pairs);
double rmse(const std::vector<std::pair<double, double>>& pairs);

/// Improvement of `model` over `baseline`, as a percentage of the baseline.
double improvement_pct_of_baseline(double baseline, double model);
/// Same difference expressed as a percentage of the model's own error.
double improvement_pct_of_model(double baseline, double model);

/// One recommender plus its hyperparameter grid. Known kinds: ubcf, ibcf,
/// mf, cmf, kmodes, ensemble. Grid axes are expanded as a cartesian product
/// in deterministic (name-sorted) order; the best point by validation MAE is
/// retrained and scored on the test slice.
struct ModelSpec {
    std::string kind;
    std::string name;  // report label; defaults to kind
    std::map<std::string, std::vector<double>> grid;
};

struct ModelReport {
    std::string name;
    bool failed = false;
    std::string error;
    double mae = 0.0, rmse = 0.0;
    std::size_t prediction_count = 0, fallback_count = 0;
    double validation_mae = -1.0;  // -1 when no validation slice
    std::map<std::string, double> hyperparameters;
    double wall_seconds = 0.0;  // never serialized into the metrics file
};

struct EvalReport {
    std::vector<ModelReport> models;
    std::string dataset_digest;
    SplitSpec split;
    std::map<std::string, std::string> provenance;

    /// Deterministic machine-readable form; excludes wall-clock so that
    /// identical runs serialize byte-identically.
    std::string to_json() const;
    static EvalReport from_json(const std::string& text);

    /// Aligned comparison table. The lowest-MAE model is the reference; every
    /// other row shows both improvement conventions relative to it.
    std::string to_table(bool include_timing = true) const;
};

EvalReport run_experiment(const Dataset& ds, const std::vector<ModelSpec>& specs,
                          const SplitSpec& split_spec);

}  // namespace coupledrec

#endif
