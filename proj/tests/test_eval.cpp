#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "coupledrec/eval.hpp"
#include "support.hpp"

using namespace coupledrec;

namespace {

RatingTable numbered_ratings(int n) {
    RatingTable t;
    for (int i = 0; i < n; ++i)
        t.entries.push_back({"u" + std::to_string(i % 7), "i" + std::to_string(i % 11),
                             1.0 + i % 5, i});
    return t;
}

std::multiset<std::string> entry_keys(const RatingTable& t) {
    std::multiset<std::string> keys;
    for (const auto& e : t.entries)
        keys.insert(e.user_id + "|" + e.item_id + "|" + std::to_string(e.rating));
    return keys;
}

/// Small but workable dataset: attribute-complete users and items plus a
/// deterministic rating pattern with an attribute-driven signal.
Dataset experiment_ds() {
    Dataset ds;
    ds.users.attributes = {{"gender", AttrKind::Categorical},
                           {"age_group", AttrKind::Categorical}};
    ds.items.attributes = {{"genre", AttrKind::Categorical},
                           {"era", AttrKind::Categorical}};
    for (int u = 0; u < 8; ++u)
        ds.users.add_object("u" + std::to_string(u),
                            {u % 2 ? "F" : "M", u % 3 ? "young" : "old"});
    for (int i = 0; i < 6; ++i)
        ds.items.add_object("i" + std::to_string(i),
                            {i % 2 ? "comedy" : "drama", i % 3 ? "new" : "old"});
    std::mt19937_64 rng(12);
    for (int u = 0; u < 8; ++u)
        for (int i = 0; i < 6; ++i) {
            if (rng() % 10 == 0) continue;  // a few unobserved pairs
            double base = (u % 2 == i % 2) ? 4.0 : 2.0;
            double noise = static_cast<double>(rng() % 3) - 1.0;
            double r = std::clamp(base + noise, 1.0, 5.0);
            ds.ratings.entries.push_back({"u" + std::to_string(u), "i" + std::to_string(i),
                                          r, 0});
        }
    return ds;
}

}  // namespace

TEST_CASE("split sizes follow the rounded fractions") {
    SplitSpec spec;
    spec.validation_fraction = 0.0;
    spec.stratification = Stratification::None;
    auto s = split_ratings(numbered_ratings(10), spec);
    CHECK(s.train.entries.size() == 8);
    CHECK(s.validation.entries.size() == 0);
    CHECK(s.test.entries.size() == 2);

    spec.validation_fraction = 0.1;
    auto s2 = split_ratings(numbered_ratings(100), spec);
    CHECK(s2.test.entries.size() == 20);      // round(0.2 * 100)
    CHECK(s2.validation.entries.size() == 8);  // round(0.1 * 0.8 * 100)
    CHECK(s2.train.entries.size() == 72);
}

TEST_CASE("split is a deterministic partition of the input") {
    auto table = numbered_ratings(57);
    SplitSpec spec;
    auto a = split_ratings(table, spec);
    auto b = split_ratings(table, spec);
    CHECK(a.train == b.train);
    CHECK(a.validation == b.validation);
    CHECK(a.test == b.test);

    // union is the input, as a multiset
    auto all = entry_keys(a.train);
    for (const auto& k : entry_keys(a.validation)) all.insert(k);
    for (const auto& k : entry_keys(a.test)) all.insert(k);
    CHECK(all == entry_keys(table));
    CHECK(a.train.entries.size() + a.validation.entries.size() + a.test.entries.size() ==
          table.entries.size());
    CHECK(a.train.scale_min == table.scale_min);
    CHECK(a.test.scale_max == table.scale_max);

    spec.seed = 7;
    auto c = split_ratings(table, spec);
    CHECK(entry_keys(c.test) != entry_keys(a.test));
}

TEST_CASE("per-user stratification keeps every user in training") {
    RatingTable t;
    t.entries.push_back({"solo", "i0", 5, 0});
    for (int i = 0; i < 9; ++i)
        t.entries.push_back({"bulk", "i" + std::to_string(i), 3, 0});
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        SplitSpec spec;
        spec.train_fraction = 0.5;
        spec.validation_fraction = 0.2;
        spec.seed = seed;
        auto s = split_ratings(t, spec);
        bool solo_trains = false;
        for (const auto& e : s.train.entries)
            if (e.user_id == "solo") solo_trains = true;
        CHECK(solo_trains);
    }
}

TEST_CASE("split argument validation") {
    RatingTable empty;
    CHECK_THROWS_AS(split_ratings(empty, SplitSpec{}), EmptyInputError);
    SplitSpec bad;
    bad.train_fraction = 1.0;
    CHECK_THROWS_AS(split_ratings(numbered_ratings(5), bad), ConfigError);
    bad.train_fraction = 0.0;
    CHECK_THROWS_AS(split_ratings(numbered_ratings(5), bad), ConfigError);
    bad = {};
    bad.validation_fraction = 1.0;
    CHECK_THROWS_AS(split_ratings(numbered_ratings(5), bad), ConfigError);
}

TEST_CASE("tiny tables always keep one training rating") {
    SplitSpec spec;
    spec.train_fraction = 0.05;  // rounds to an all-test split before the guard
    spec.stratification = Stratification::None;
    auto s = split_ratings(numbered_ratings(3), spec);
    CHECK(s.train.entries.size() >= 1);
}

TEST_CASE("error metrics on worked examples") {
    std::vector<std::pair<double, double>> pairs = {{3, 4}, {5, 3}};
    CHECK(mae(pairs) == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(rmse(pairs) == doctest::Approx(std::sqrt(2.5)).epsilon(1e-12));  // 1.5811
    CHECK_THROWS_AS(mae({}), EmptyInputError);
    CHECK_THROWS_AS(rmse({}), EmptyInputError);

    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> r(1.0, 5.0);
    for (int round = 0; round < 50; ++round) {
        std::vector<std::pair<double, double>> ps;
        for (int i = 0; i < 20; ++i) ps.emplace_back(r(rng), r(rng));
        CHECK(mae(ps) <= rmse(ps) + 1e-12);
    }
}

TEST_CASE("both improvement conventions") {
    // the two ways of quoting the same 0.0049 error gap
    CHECK(improvement_pct_of_baseline(0.9027, 0.8978) ==
          doctest::Approx(100.0 * 0.0049 / 0.9027).epsilon(1e-9));
    CHECK(improvement_pct_of_model(0.9027, 0.8978) ==
          doctest::Approx(100.0 * 0.0049 / 0.8978).epsilon(1e-9));
    CHECK(improvement_pct_of_model(0.9027, 0.8978) ==
          doctest::Approx(0.5458).epsilon(1e-3));
    CHECK(improvement_pct_of_baseline(2.0, 1.0) == doctest::Approx(50.0));
    CHECK(improvement_pct_of_model(2.0, 1.0) == doctest::Approx(100.0));
}

TEST_CASE("experiment runs every model kind") {
    auto ds = experiment_ds();
    std::vector<ModelSpec> specs = {
        {"ubcf", "", {{"min_overlap", {2}}}},
        {"ibcf", "", {{"min_overlap", {2}}}},
        {"mf", "", {{"k", {2}}, {"epochs", {5}}}},
        {"cmf", "", {{"k", {2}}, {"epochs", {5}}, {"alpha", {0.1}}, {"beta", {0.1}}}},
        {"kmodes", "", {{"g", {2}}}},
        {"ensemble", "", {{"k", {2}}, {"epochs", {5}}, {"alpha", {0}}, {"beta", {0}},
                          {"tau", {5}}, {"gamma_d", {0.3}}}},
    };
    auto report = run_experiment(ds, specs, SplitSpec{});
    REQUIRE(report.models.size() == 6);
    std::size_t test_size = std::stoul(report.provenance.at("test_size"));
    for (const auto& m : report.models) {
        INFO(m.name, ": ", m.error);
        CHECK_FALSE(m.failed);
        CHECK(m.mae > 0.0);
        CHECK(m.mae <= m.rmse + 1e-12);
        CHECK(m.prediction_count == test_size);
        CHECK(!m.hyperparameters.empty());
    }
    CHECK(report.dataset_digest == dataset_digest(ds));
}

TEST_CASE("cmf with zero strengths reproduces the mf row") {
    auto ds = experiment_ds();
    std::vector<ModelSpec> specs = {
        {"mf", "", {{"k", {2}}, {"epochs", {8}}}},
        {"cmf", "", {{"k", {2}}, {"epochs", {8}}, {"alpha", {0}}, {"beta", {0}}}},
    };
    auto report = run_experiment(ds, specs, SplitSpec{});
    REQUIRE(report.models.size() == 2);
    CHECK(report.models[0].mae == report.models[1].mae);
    CHECK(report.models[0].rmse == report.models[1].rmse);
}

TEST_CASE("grid search picks the best validation point and records it") {
    auto ds = experiment_ds();
    std::vector<ModelSpec> specs = {
        {"ubcf", "tuned", {{"n_neighbors", {1, 50}}, {"min_overlap", {2}}}}};
    auto report = run_experiment(ds, specs, SplitSpec{});
    const auto& m = report.models[0];
    REQUIRE_FALSE(m.failed);
    CHECK(m.name == "tuned");
    CHECK(m.validation_mae >= 0.0);
    CHECK((m.hyperparameters.at("n_neighbors") == 1 ||
           m.hyperparameters.at("n_neighbors") == 50));
    // defaults are merged into the recorded point
    CHECK(m.hyperparameters.at("min_overlap") == 2);
    CHECK(m.hyperparameters.count("positive_only") == 1);
}

TEST_CASE("a failing model is recorded without sinking the run") {
    auto ds = experiment_ds();
    std::vector<ModelSpec> specs = {
        {"bogus", "", {}},
        {"kmodes", "", {{"g", {999}}}},  // more clusters than items
        {"ubcf", "", {{"min_overlap", {2}}}},
    };
    auto report = run_experiment(ds, specs, SplitSpec{});
    REQUIRE(report.models.size() == 3);
    CHECK(report.models[0].failed);
    CHECK(report.models[0].error.find("unknown model kind") != std::string::npos);
    CHECK(report.models[1].failed);
    CHECK_FALSE(report.models[2].failed);
    CHECK_THROWS_AS(run_experiment(ds, {}, SplitSpec{}), ConfigError);
}

TEST_CASE("report json round trips and is byte-deterministic") {
    auto ds = experiment_ds();
    std::vector<ModelSpec> specs = {
        {"ubcf", "", {{"min_overlap", {2}}}},
        {"mf", "", {{"k", {2}}, {"epochs", {5}}}},
        {"bogus", "", {}},
    };
    auto r1 = run_experiment(ds, specs, SplitSpec{});
    auto r2 = run_experiment(ds, specs, SplitSpec{});
    CHECK(r1.to_json() == r2.to_json());  // wall-clock never leaks into the file

    auto back = EvalReport::from_json(r1.to_json());
    CHECK(back.dataset_digest == r1.dataset_digest);
    CHECK(back.split.seed == r1.split.seed);
    CHECK(back.split.train_fraction == r1.split.train_fraction);
    CHECK(back.provenance == r1.provenance);
    REQUIRE(back.models.size() == r1.models.size());
    for (std::size_t i = 0; i < back.models.size(); ++i) {
        CHECK(back.models[i].name == r1.models[i].name);
        CHECK(back.models[i].failed == r1.models[i].failed);
        CHECK(back.models[i].mae == r1.models[i].mae);
        CHECK(back.models[i].rmse == r1.models[i].rmse);
        CHECK(back.models[i].hyperparameters == r1.models[i].hyperparameters);
    }
    CHECK(back.to_json() == r1.to_json());
}

TEST_CASE("table output names the reference and shows both conventions") {
    auto ds = experiment_ds();
    std::vector<ModelSpec> specs = {
        {"ubcf", "", {{"min_overlap", {2}}}},
        {"mf", "", {{"k", {2}}, {"epochs", {5}}}},
        {"bogus", "", {}},
    };
    auto report = run_experiment(ds, specs, SplitSpec{});
    auto table = report.to_table(false);
    CHECK(table.find("ubcf") != std::string::npos);
    CHECK(table.find("mf") != std::string::npos);
    CHECK(table.find("FAILED") != std::string::npos);
    CHECK(table.find("reference (lowest MAE):") != std::string::npos);
    CHECK(table.find("impr/base") != std::string::npos);
    CHECK(table.find("impr/model") != std::string::npos);
    CHECK(table.find("seconds") == std::string::npos);
    CHECK(report.to_table(true).find("seconds") != std::string::npos);
}
