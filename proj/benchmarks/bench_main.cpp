#include <benchmark/benchmark.h>

#include <random>

#include "coupledrec/factorization.hpp"
#include "coupledrec/neighborhood.hpp"
#include "coupledrec/similarity.hpp"

using namespace coupledrec;

namespace {

AttributeTable synthetic_table(int objects, int attrs, int values, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    AttributeTable t;
    for (int a = 0; a < attrs; ++a)
        t.attributes.push_back({"a" + std::to_string(a), AttrKind::Categorical});
    for (int o = 0; o < objects; ++o) {
        std::vector<std::string> row;
        for (int a = 0; a < attrs; ++a)
            row.push_back("v" + std::to_string(rng() % values));
        t.add_object("o" + std::to_string(o), std::move(row));
    }
    return t;
}

RatingTable synthetic_ratings(int users, int items, int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    RatingTable t;
    std::set<std::pair<int, int>> used;
    while (static_cast<int>(t.entries.size()) < n) {
        int u = static_cast<int>(rng() % users), i = static_cast<int>(rng() % items);
        if (!used.emplace(u, i).second) continue;
        t.entries.push_back({"u" + std::to_string(u), "i" + std::to_string(i),
                             1.0 + static_cast<double>(rng() % 5), 0});
    }
    return t;
}

void BM_ObjectSimMatrix(benchmark::State& state) {
    auto table = synthetic_table(static_cast<int>(state.range(0)), 4, 10, 1);
    for (auto _ : state) {
        auto m = build_object_sim_matrix(table, Side::User);
        benchmark::DoNotOptimize(m.values.data());
    }
}
BENCHMARK(BM_ObjectSimMatrix)->Arg(100)->Arg(400);

void BM_PearsonCache(benchmark::State& state) {
    auto view = RatingMatrixView::build(
        synthetic_ratings(200, 400, static_cast<int>(state.range(0)), 2));
    for (auto _ : state) {
        auto cache = PearsonCache::build(view, Side::User, 3);
        benchmark::DoNotOptimize(&cache);
    }
}
BENCHMARK(BM_PearsonCache)->Arg(5000)->Arg(20000);

void BM_MfTraining(benchmark::State& state) {
    auto view = RatingMatrixView::build(synthetic_ratings(200, 400, 10000, 3));
    MfConfig cfg;
    cfg.k = static_cast<int>(state.range(0));
    cfg.epochs = 5;
    for (auto _ : state) {
        auto model = train_mf(view, cfg);
        benchmark::DoNotOptimize(model.p.data());
    }
}
BENCHMARK(BM_MfTraining)->Arg(8)->Arg(20);

}  // namespace

BENCHMARK_MAIN();
