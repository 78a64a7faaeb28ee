#ifndef COUPLEDREC_FACTORIZATION_HPP
#define COUPLEDREC_FACTORIZATION_HPP

#include <string>
#include <vector>

#include "coupledrec/rating_view.hpp"
#include "coupledrec/similarity.hpp"

namespace coupledrec {

struct MfConfig {
    int k = 20;
    double learning_rate = 0.005;
    double lambda = 0.02;
    int epochs = 30;
    std::uint64_t seed = 42;
};

/// Plain latent-factor model: rating estimated as the dot product of a user
/// row of P and an item row of Q, clamped to the rating scale.
struct LatentFactorModel {
    int k = 0;
    std::vector<std::string> user_ids, item_ids;
    std::vector<double> p;  // user_count * k, row-major
    std::vector<double> q;  // item_count * k, row-major
    double global_mean = 0.0;
    double scale_min = 1.0, scale_max = 5.0;
    MfConfig config;
    std::vector<double> loss_trace;  // full objective after each epoch

    double predict_idx(int u, int i) const;
    double predict(const std::string& user, const std::string& item) const;
    int user_index(const std::string& id) const;
    int item_index(const std::string& id) const;

    void save_binary(const std::string& path) const;
    static LatentFactorModel load_binary(const std::string& path);
};

struct CmfConfig {
    MfConfig base;
    double alpha = 0.0;  // user-side coupling strength
    double beta = 0.0;   // item-side coupling strength
    int top_m = 20;      // similarity entries per object entering the regularizer
};

/// MF whose objective carries graph-style similarity regularizers pulling the
/// factors of strongly coupled users (items) together. With alpha = beta = 0
/// this is exactly the plain model, bit for bit.
struct CmfModel {
    LatentFactorModel core;
    double alpha = 0.0, beta = 0.0;
    int top_m = 20;
    std::string user_sim_digest, item_sim_digest;

    double predict(const std::string& user, const std::string& item) const {
        return core.predict(user, item);
    }

    void save_binary(const std::string& path) const;
    static CmfModel load_binary(const std::string& path);
};

LatentFactorModel train_mf(const RatingMatrixView& view, const MfConfig& cfg);

/// sim_user / sim_item must cover every id in the view; either may be null
/// when the corresponding strength is zero.
CmfModel train_cmf(const RatingMatrixView& view, const ObjectSimMatrix* sim_user,
                   const ObjectSimMatrix* sim_item, const CmfConfig& cfg);

double predict_mf(const LatentFactorModel& model, const std::string& user,
                  const std::string& item);
double predict_cmf(const CmfModel& model, const std::string& user,
                   const std::string& item);

// --- objective and analytic gradient, exposed for verification ---

/// Weighted edge u -> v with similarity s; contributes (strength/2)*s*|p_u-p_v|^2.
struct SimEdge {
    int from, to;
    double s;
};

/// Top-m neighbor edges per object, in deterministic order.
std::vector<SimEdge> top_m_edges(const ObjectSimMatrix& sim, int top_m);

double cmf_objective(const RatingMatrixView& view, const std::vector<double>& p,
                     const std::vector<double>& q, int k, double lambda, double alpha,
                     double beta, const std::vector<SimEdge>& user_edges,
                     const std::vector<SimEdge>& item_edges);

void cmf_gradient(const RatingMatrixView& view, const std::vector<double>& p,
                  const std::vector<double>& q, int k, double lambda, double alpha,
                  double beta, const std::vector<SimEdge>& user_edges,
                  const std::vector<SimEdge>& item_edges, std::vector<double>& grad_p,
                  std::vector<double>& grad_q);

}  // namespace coupledrec

#endif
