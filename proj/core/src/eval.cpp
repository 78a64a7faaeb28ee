#include "coupledrec/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>

#include "coupledrec/kmodes.hpp"
#include "coupledrec/neighborhood.hpp"

#include <json.hpp>

namespace coupledrec {

SplitResult split_ratings(const RatingTable& table, const SplitSpec& spec) {
    if (table.entries.empty()) throw EmptyInputError("cannot split an empty rating table");
    if (spec.train_fraction <= 0.0 || spec.train_fraction >= 1.0)
        throw ConfigError("train_fraction must be in (0,1)");
    if (spec.validation_fraction < 0.0 || spec.validation_fraction >= 1.0)
        throw ConfigError("validation_fraction must be in [0,1)");

    std::size_t n = table.entries.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(spec.seed);
    std::shuffle(order.begin(), order.end(), rng);

    std::size_t n_test = static_cast<std::size_t>(
        std::llround((1.0 - spec.train_fraction) * static_cast<double>(n)));
    std::size_t n_val = static_cast<std::size_t>(std::llround(
        spec.validation_fraction * spec.train_fraction * static_cast<double>(n)));
    if (n_test + n_val >= n) {
        n_test = std::min(n_test, n - 1);
        n_val = std::min(n_val, n - 1 - n_test);
    }

    enum class Slot : unsigned char { Train, Val, Test };
    std::vector<Slot> slot(n, Slot::Train);
    for (std::size_t i = 0; i < n_test; ++i) slot[order[i]] = Slot::Test;
    for (std::size_t i = n_test; i < n_test + n_val; ++i) slot[order[i]] = Slot::Val;

    if (spec.stratification == Stratification::PerUser) {
        // pull the earliest non-train rating of any train-less user back
        std::unordered_map<std::string, bool> has_train;
        std::unordered_map<std::string, std::size_t> first_entry;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& uid = table.entries[i].user_id;
            if (slot[i] == Slot::Train) has_train[uid] = true;
            if (!first_entry.count(uid)) first_entry[uid] = i;
        }
        for (std::size_t i = 0; i < n; ++i) {
            const auto& uid = table.entries[i].user_id;
            if (has_train.count(uid)) continue;
            slot[first_entry[uid]] = Slot::Train;
            has_train[uid] = true;
        }
    }

    SplitResult out;
    for (RatingTable* t : {&out.train, &out.validation, &out.test}) {
        t->scale_min = table.scale_min;
        t->scale_max = table.scale_max;
    }
    for (std::size_t i = 0; i < n; ++i) {
        switch (slot[i]) {
            case Slot::Train: out.train.entries.push_back(table.entries[i]); break;
            case Slot::Val: out.validation.entries.push_back(table.entries[i]); break;
            case Slot::Test: out.test.entries.push_back(table.entries[i]); break;
        }
    }
    return out;
}

double mae(const std::vector<std::pair<double, double>>& pairs) {
    if (pairs.empty()) throw EmptyInputError("mae of an empty pair list");
    double s = 0.0;
    for (const auto& [truth, pred] : pairs) s += std::abs(truth - pred);
    return s / pairs.size();
}

double rmse(const std::vector<std::pair<double, double>>& pairs) {
    if (pairs.empty()) throw EmptyInputError("rmse of an empty pair list");
    double s = 0.0;
    for (const auto& [truth, pred] : pairs) s += (truth - pred) * (truth - pred);
    return std::sqrt(s / pairs.size());
}

double improvement_pct_of_baseline(double baseline, double model) {
    return (baseline - model) / baseline * 100.0;
}

double improvement_pct_of_model(double baseline, double model) {
    return (baseline - model) / model * 100.0;
}

// --- experiment runner ---

namespace {

using Params = std::map<std::string, double>;

double param(const Params& p, const std::string& name, double dflt) {
    auto it = p.find(name);
    return it == p.end() ? dflt : it->second;
}

std::vector<Params> expand_grid(const std::map<std::string, std::vector<double>>& grid) {
    std::vector<Params> points{{}};
    for (const auto& [name, values] : grid) {
        if (values.empty()) throw ConfigError("empty grid axis: " + name);
        std::vector<Params> next;
        next.reserve(points.size() * values.size());
        for (const auto& base : points)
            for (double v : values) {
                Params p = base;
                p[name] = v;
                next.push_back(std::move(p));
            }
        points = std::move(next);
    }
    return points;
}

/// predict(user, item, fell_back) for one trained grid point
using PredictFn = std::function<double(const std::string&, const std::string&, bool*)>;

/// Shared lazily built per-experiment state.
struct ExperimentState {
    const Dataset& ds;
    const RatingMatrixView& view;
    std::uint64_t seed;

    std::map<int, PearsonCache> user_caches, item_caches;  // by min_overlap
    std::unique_ptr<ObjectSimMatrix> user_sim, item_sim;
    std::unique_ptr<SimilarityIndices> item_indices;
    std::map<double, CellCouplingTensor> tensors;  // by tau

    const PearsonCache& user_cache(int min_overlap) {
        auto it = user_caches.find(min_overlap);
        if (it == user_caches.end())
            it = user_caches.emplace(min_overlap,
                                     PearsonCache::build(view, Side::User, min_overlap))
                     .first;
        return it->second;
    }
    const PearsonCache& item_cache(int min_overlap) {
        auto it = item_caches.find(min_overlap);
        if (it == item_caches.end())
            it = item_caches.emplace(min_overlap,
                                     PearsonCache::build(view, Side::Item, min_overlap))
                     .first;
        return it->second;
    }
    const ObjectSimMatrix& user_similarity() {
        if (!user_sim)
            user_sim = std::make_unique<ObjectSimMatrix>(
                build_object_sim_matrix(ds.users, Side::User));
        return *user_sim;
    }
    const ObjectSimMatrix& item_similarity() {
        if (!item_sim)
            item_sim = std::make_unique<ObjectSimMatrix>(
                build_object_sim_matrix(ds.items, Side::Item));
        return *item_sim;
    }
    const SimilarityIndices& item_idx() {
        if (!item_indices)
            item_indices = std::make_unique<SimilarityIndices>(build_indices(ds.items));
        return *item_indices;
    }
    const CellCouplingTensor& tensor(double tau) {
        auto it = tensors.find(tau);
        if (it == tensors.end()) {
            Dataset train_ds{ds.ratings, ds.users, ds.items, ds.environment};
            it = tensors.emplace(tau, build_cell_couplings(train_ds, tau)).first;
        }
        return it->second;
    }
};

/// Wraps a raw model predictor with the unknown-id fallback chain:
/// unknown item -> user mean; unknown user -> global mean. Both flagged.
PredictFn with_fallback(const RatingMatrixView& view, PredictFn inner) {
    return [&view, inner = std::move(inner)](const std::string& user,
                                             const std::string& item, bool* fb) {
        int u = view.user_index(user);
        int i = view.item_index(item);
        if (u < 0) {
            if (fb) *fb = true;
            return view.clamp(view.global_mean());
        }
        if (i < 0) {
            if (fb) *fb = true;
            return view.clamp(view.user_mean(u));
        }
        return inner(user, item, fb);
    };
}

MfConfig mf_config_from(const Params& p, std::uint64_t default_seed) {
    MfConfig c;
    c.k = static_cast<int>(param(p, "k", 20));
    c.learning_rate = param(p, "learning_rate", 0.005);
    c.lambda = param(p, "lambda", 0.02);
    c.epochs = static_cast<int>(param(p, "epochs", 30));
    c.seed = static_cast<std::uint64_t>(param(p, "seed", static_cast<double>(default_seed)));
    return c;
}

CmfConfig cmf_config_from(const Params& p, std::uint64_t default_seed) {
    CmfConfig c;
    c.base = mf_config_from(p, default_seed);
    c.alpha = param(p, "alpha", 0.1);
    c.beta = param(p, "beta", 0.1);
    c.top_m = static_cast<int>(param(p, "top_m", 20));
    return c;
}

Params effective_params(const std::string& kind, const Params& point,
                        std::uint64_t seed) {
    Params p = point;
    auto set_default = [&p](const std::string& name, double v) {
        if (!p.count(name)) p[name] = v;
    };
    if (kind == "ubcf" || kind == "ibcf") {
        set_default("n_neighbors", 50);
        set_default("min_overlap", 3);
        set_default("positive_only", 0);
    } else if (kind == "mf" || kind == "cmf" || kind == "ensemble") {
        set_default("k", 20);
        set_default("learning_rate", 0.005);
        set_default("lambda", 0.02);
        set_default("epochs", 30);
        set_default("seed", static_cast<double>(seed));
        if (kind != "mf") {
            set_default("alpha", 0.1);
            set_default("beta", 0.1);
            set_default("top_m", 20);
        }
        if (kind == "ensemble") {
            set_default("tau", 20);
            set_default("gamma_d", 0.1);
        }
    } else if (kind == "kmodes") {
        set_default("g", 20);
        set_default("max_iter", 50);
        set_default("seed", static_cast<double>(seed));
    }
    return p;
}

PredictFn train_point(ExperimentState& st, const std::string& kind, const Params& p) {
    const RatingMatrixView& view = st.view;
    if (kind == "ubcf" || kind == "ibcf") {
        NeighborhoodConfig cfg;
        cfg.n_neighbors = static_cast<int>(param(p, "n_neighbors", 50));
        cfg.min_overlap = static_cast<int>(param(p, "min_overlap", 3));
        cfg.positive_only = param(p, "positive_only", 0) != 0;
        bool user_based = kind == "ubcf";
        const PearsonCache& cache =
            user_based ? st.user_cache(cfg.min_overlap) : st.item_cache(cfg.min_overlap);
        return with_fallback(view, [&view, &cache, cfg, user_based](
                                       const std::string& u, const std::string& i, bool* fb) {
            return user_based ? predict_ubcf(view, cache, u, i, cfg, fb)
                              : predict_ibcf(view, cache, u, i, cfg, fb);
        });
    }
    if (kind == "mf") {
        auto model = std::make_shared<LatentFactorModel>(
            train_mf(view, mf_config_from(p, st.seed)));
        return with_fallback(view, [&view, model](const std::string& u,
                                                  const std::string& i, bool*) {
            return model->predict_idx(view.user_index(u), view.item_index(i));
        });
    }
    if (kind == "cmf") {
        CmfConfig cfg = cmf_config_from(p, st.seed);
        const ObjectSimMatrix* su = cfg.alpha > 0 ? &st.user_similarity() : nullptr;
        const ObjectSimMatrix* si = cfg.beta > 0 ? &st.item_similarity() : nullptr;
        auto model = std::make_shared<CmfModel>(train_cmf(view, su, si, cfg));
        return with_fallback(view, [&view, model](const std::string& u,
                                                  const std::string& i, bool*) {
            return model->core.predict_idx(view.user_index(u), view.item_index(i));
        });
    }
    if (kind == "kmodes") {
        int g = static_cast<int>(param(p, "g", 20));
        int max_iter = static_cast<int>(param(p, "max_iter", 50));
        auto seed = static_cast<std::uint64_t>(
            param(p, "seed", static_cast<double>(st.seed)));
        auto clustering = std::make_shared<KModesClustering>(
            kmodes_fit(st.ds.items, st.item_idx(), g, seed, max_iter));
        const Dataset& ds = st.ds;
        return with_fallback(view, [&view, &ds, clustering](const std::string& u,
                                                            const std::string& i, bool* fb) {
            return kmodes_predict(*clustering, ds.items, view, u, i, fb);
        });
    }
    if (kind == "ensemble") {
        CmfConfig cfg = cmf_config_from(p, st.seed);
        const ObjectSimMatrix* su = cfg.alpha > 0 ? &st.user_similarity() : nullptr;
        const ObjectSimMatrix* si = cfg.beta > 0 ? &st.item_similarity() : nullptr;
        auto model = std::make_shared<CmfModel>(train_cmf(view, su, si, cfg));
        const CellCouplingTensor& tensor = st.tensor(param(p, "tau", 20));
        EnsembleConfig ecfg;
        ecfg.gamma_d = param(p, "gamma_d", 0.1);
        // unless pinned explicitly, keep the combination convex
        ecfg.gamma_mf = param(p, "gamma_mf", 1.0 - ecfg.gamma_d);
        const Dataset& ds = st.ds;
        return with_fallback(view, [&ds, model, &tensor, ecfg](const std::string& u,
                                                               const std::string& i, bool*) {
            return predict_ensemble(*model, tensor, ecfg, ds, u, i);
        });
    }
    throw ConfigError("unknown model kind: " + kind +
                      " (valid: ubcf, ibcf, mf, cmf, kmodes, ensemble)");
}

struct Scored {
    double mae_v = 0.0, rmse_v = 0.0;
    std::size_t fallbacks = 0;
    std::size_t count = 0;
};

Scored score(const PredictFn& fn, const std::vector<RatingEntry>& entries) {
    std::vector<std::pair<double, double>> pairs;
    pairs.reserve(entries.size());
    Scored s;
    for (const auto& e : entries) {
        bool fb = false;
        double pred = fn(e.user_id, e.item_id, &fb);
        if (fb) ++s.fallbacks;
        pairs.emplace_back(e.rating, pred);
    }
    s.count = pairs.size();
    s.mae_v = mae(pairs);
    s.rmse_v = rmse(pairs);
    return s;
}

}  // namespace

EvalReport run_experiment(const Dataset& ds, const std::vector<ModelSpec>& specs,
                          const SplitSpec& split_spec) {
    if (specs.empty()) throw ConfigError("at least one model spec required");
    SplitResult split = split_ratings(ds.ratings, split_spec);
    RatingMatrixView view = RatingMatrixView::build(split.train);

    Dataset train_ds = ds;
    train_ds.ratings = split.train;
    ExperimentState st{train_ds, view, split_spec.seed, {}, {}, {}, {}, {}, {}};

    EvalReport report;
    report.dataset_digest = dataset_digest(ds);
    report.split = split_spec;
    report.provenance["train_size"] = std::to_string(split.train.entries.size());
    report.provenance["validation_size"] = std::to_string(split.validation.entries.size());
    report.provenance["test_size"] = std::to_string(split.test.entries.size());

    for (const auto& spec : specs) {
        ModelReport mr;
        mr.name = spec.name.empty() ? spec.kind : spec.name;
        auto started = std::chrono::steady_clock::now();
        try {
            std::vector<Params> points = expand_grid(spec.grid);
            std::size_t best = 0;
            double best_val = -1.0;
            if (points.size() > 1 && !split.validation.entries.empty()) {
                for (std::size_t i = 0; i < points.size(); ++i) {
                    PredictFn fn = train_point(st, spec.kind, points[i]);
                    Scored s = score(fn, split.validation.entries);
                    if (i == 0 || s.mae_v < best_val) {
                        best_val = s.mae_v;
                        best = i;
                    }
                }
            } else if (!split.validation.entries.empty()) {
                PredictFn fn = train_point(st, spec.kind, points[0]);
                best_val = score(fn, split.validation.entries).mae_v;
            }
            PredictFn fn = train_point(st, spec.kind, points[best]);
            if (split.test.entries.empty())
                throw EmptyInputError("empty test slice; adjust the split");
            Scored s = score(fn, split.test.entries);
            mr.mae = s.mae_v;
            mr.rmse = s.rmse_v;
            mr.prediction_count = s.count;
            mr.fallback_count = s.fallbacks;
            mr.validation_mae = best_val;
            mr.hyperparameters = effective_params(spec.kind, points[best], split_spec.seed);
        } catch (const std::exception& e) {
            mr.failed = true;
            mr.error = e.what();
        }
        mr.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
                .count();
        report.models.push_back(std::move(mr));
    }
    return report;
}

// --- report serialization ---

std::string EvalReport::to_json() const {
    nlohmann::ordered_json j;
    j["dataset_digest"] = dataset_digest;
    j["split"] = {{"train_fraction", split.train_fraction},
                  {"validation_fraction", split.validation_fraction},
                  {"seed", split.seed},
                  {"stratification",
                   split.stratification == Stratification::PerUser ? "per_user" : "none"}};
    j["provenance"] = provenance;
    j["models"] = nlohmann::ordered_json::array();
    for (const auto& m : models) {
        nlohmann::ordered_json jm;
        jm["name"] = m.name;
        jm["failed"] = m.failed;
        if (m.failed) {
            jm["error"] = m.error;
        } else {
            jm["mae"] = m.mae;
            jm["rmse"] = m.rmse;
            jm["prediction_count"] = m.prediction_count;
            jm["fallback_count"] = m.fallback_count;
            jm["validation_mae"] = m.validation_mae;
            jm["hyperparameters"] = m.hyperparameters;
        }
        j["models"].push_back(std::move(jm));
    }
    return j.dump(2) + "\n";
}

EvalReport EvalReport::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    EvalReport r;
    r.dataset_digest = j.value("dataset_digest", "");
    if (j.contains("split")) {
        const auto& s = j["split"];
        r.split.train_fraction = s.value("train_fraction", 0.8);
        r.split.validation_fraction = s.value("validation_fraction", 0.1);
        r.split.seed = s.value("seed", std::uint64_t(42));
        r.split.stratification = s.value("stratification", "per_user") == std::string("none")
                                     ? Stratification::None
                                     : Stratification::PerUser;
    }
    if (j.contains("provenance"))
        for (const auto& [k, v] : j["provenance"].items())
            r.provenance[k] = v.get<std::string>();
    for (const auto& jm : j.value("models", nlohmann::json::array())) {
        ModelReport m;
        m.name = jm.value("name", "");
        m.failed = jm.value("failed", false);
        if (m.failed) {
            m.error = jm.value("error", "");
        } else {
            m.mae = jm.value("mae", 0.0);
            m.rmse = jm.value("rmse", 0.0);
            m.prediction_count = jm.value("prediction_count", std::size_t(0));
            m.fallback_count = jm.value("fallback_count", std::size_t(0));
            m.validation_mae = jm.value("validation_mae", -1.0);
            if (jm.contains("hyperparameters"))
                for (const auto& [k, v] : jm["hyperparameters"].items())
                    m.hyperparameters[k] = v.get<double>();
        }
        r.models.push_back(std::move(m));
    }
    return r;
}

std::string EvalReport::to_table(bool include_timing) const {
    const ModelReport* best = nullptr;
    for (const auto& m : models)
        if (!m.failed && (!best || m.mae < best->mae)) best = &m;
    std::ostringstream os;
    char buf[128];
    os << "model         MAE      RMSE     preds  fallbk  impr/base  impr/model";
    if (include_timing) os << "  seconds";
    os << '\n';
    for (const auto& m : models) {
        if (m.failed) {
            std::snprintf(buf, sizeof(buf), "%-12s  FAILED: %s\n", m.name.c_str(),
                          m.error.c_str());
            os << buf;
            continue;
        }
        std::string ib = "-", im = "-";
        if (best && &m != best && m.mae > 0.0) {
            std::snprintf(buf, sizeof(buf), "%.2f%%", improvement_pct_of_baseline(m.mae, best->mae));
            ib = buf;
            std::snprintf(buf, sizeof(buf), "%.2f%%", improvement_pct_of_model(m.mae, best->mae));
            im = buf;
        }
        std::snprintf(buf, sizeof(buf), "%-12s  %-7.4f  %-7.4f  %-5zu  %-6zu  %-9s  %-10s",
                      m.name.c_str(), m.mae, m.rmse, m.prediction_count, m.fallback_count,
                      ib.c_str(), im.c_str());
        os << buf;
        if (include_timing) {
            std::snprintf(buf, sizeof(buf), "  %.2f", m.wall_seconds);
            os << buf;
        }
        os << '\n';
    }
    if (best) os << "reference (lowest MAE): " << best->name << '\n';
    return os.str();
}

}  // namespace coupledrec
