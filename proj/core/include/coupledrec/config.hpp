#ifndef COUPLEDREC_CONFIG_HPP
#define COUPLEDREC_CONFIG_HPP

#include <string>
#include <vector>

#include "coupledrec/eval.hpp"

namespace coupledrec {

/// Flat, comment-friendly key-value experiment description.
///
///   [dataset]
///   path = data/ml100k-canonical
///   [split]
///   seed = 42
///   train_fraction = 0.8
///   validation_fraction = 0.1
///   stratification = per_user
///   [discretize.age]        # user or item attribute, resolved by name
///   strategy = equal-width  # equal-width | equal-frequency | explicit
///   bins = 7
///   [model.mf]
///   kind = mf
///   k = 10,20               # comma lists become grid axes
///   [output]
///   dir = runs/exp1
struct ExperimentConfig {
    std::string dataset_path;
    SplitSpec split;
    std::vector<DiscretizationSpec> discretizations;
    std::vector<ModelSpec> models;
    std::string output_dir;

    static ExperimentConfig parse_file(const std::string& path);
    static ExperimentConfig parse_text(const std::string& text);

    /// Fully explicit form (defaults expanded); reparses to an equal config.
    std::string to_text() const;
};

}  // namespace coupledrec

#endif
