#include "coupledrec/neighborhood.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>

namespace coupledrec {

namespace {

struct PairAccum {
    int n = 0;
    double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
};

std::optional<double> pearson_from_sums(const PairAccum& acc, int min_overlap) {
    if (acc.n < min_overlap) return std::nullopt;
    double n = acc.n;
    double va = acc.saa - acc.sa * acc.sa / n;
    double vb = acc.sbb - acc.sb * acc.sb / n;
    if (va <= 0.0 || vb <= 0.0) return std::nullopt;
    return (acc.sab - acc.sa * acc.sb / n) / std::sqrt(va * vb);
}

}  // namespace

std::optional<double> pearson_weight(const RatingMatrixView& view, Side side,
                                     const std::string& a, const std::string& b,
                                     int min_overlap) {
    int ia = side == Side::User ? view.user_index(a) : view.item_index(a);
    int ib = side == Side::User ? view.user_index(b) : view.item_index(b);
    if (ia < 0) throw NotFoundError("unknown id: " + a);
    if (ib < 0) throw NotFoundError("unknown id: " + b);
    const auto& la = side == Side::User ? view.user_ratings(ia) : view.item_ratings(ia);
    const auto& lb = side == Side::User ? view.user_ratings(ib) : view.item_ratings(ib);
    PairAccum acc;
    auto x = la.begin();
    auto y = lb.begin();
    while (x != la.end() && y != lb.end()) {
        if (x->first < y->first) {
            ++x;
        } else if (y->first < x->first) {
            ++y;
        } else {
            ++acc.n;
            acc.sa += x->second;
            acc.sb += y->second;
            acc.saa += x->second * x->second;
            acc.sbb += y->second * y->second;
            acc.sab += x->second * y->second;
            ++x;
            ++y;
        }
    }
    return pearson_from_sums(acc, min_overlap);
}

PearsonCache PearsonCache::build(const RatingMatrixView& view, Side side,
                                 int min_overlap) {
    PearsonCache cache;
    cache.side = side;
    cache.min_overlap = min_overlap;
    std::size_t n_objects = side == Side::User ? view.user_count() : view.item_count();
    cache.weights_.resize(n_objects);

    // Co-rating sums accumulate through the opposite side's rating lists.
    std::unordered_map<std::uint64_t, PairAccum> accum;
    accum.reserve(1 << 20);
    std::size_t n_opposite = side == Side::User ? view.item_count() : view.user_count();
    for (std::size_t o = 0; o < n_opposite; ++o) {
        const auto& list = side == Side::User ? view.item_ratings(static_cast<int>(o))
                                              : view.user_ratings(static_cast<int>(o));
        for (std::size_t x = 0; x < list.size(); ++x) {
            for (std::size_t y = x + 1; y < list.size(); ++y) {
                int a = list[x].first, b = list[y].first;
                double ra = list[x].second, rb = list[y].second;
                if (a > b) {
                    std::swap(a, b);
                    std::swap(ra, rb);
                }
                auto& acc = accum[(static_cast<std::uint64_t>(a) << 32) |
                                  static_cast<std::uint32_t>(b)];
                ++acc.n;
                acc.sa += ra;
                acc.sb += rb;
                acc.saa += ra * ra;
                acc.sbb += rb * rb;
                acc.sab += ra * rb;
            }
        }
    }
    for (const auto& [key, acc] : accum) {
        auto w = pearson_from_sums(acc, min_overlap);
        if (!w) continue;
        int a = static_cast<int>(key >> 32);
        int b = static_cast<int>(key & 0xffffffffu);
        cache.weights_[a][b] = {*w, acc.n};
        cache.weights_[b][a] = {*w, acc.n};
    }
    return cache;
}

std::optional<double> PearsonCache::weight(int a, int b) const {
    if (a < 0 || static_cast<std::size_t>(a) >= weights_.size()) return std::nullopt;
    auto it = weights_[a].find(b);
    if (it == weights_[a].end()) return std::nullopt;
    return it->second.weight;
}

namespace {

/// Shared mean-centered neighborhood formula. Each neighbor contributes
/// w * (rating - neighbor mean); the normalizer 1/sum|w| makes the output
/// invariant under positive rescaling of all weights.
struct Contribution {
    int idx;
    double weight;
    double deviation;
};

double combine(std::vector<Contribution>& contribs, int n_neighbors, double base,
               double fallback, const RatingMatrixView& view, bool* fell_back) {
    std::stable_sort(contribs.begin(), contribs.end(), [](const auto& l, const auto& r) {
        return std::abs(l.weight) > std::abs(r.weight);
    });
    if (static_cast<int>(contribs.size()) > n_neighbors) contribs.resize(n_neighbors);
    double num = 0.0, den = 0.0;
    for (const auto& c : contribs) {
        num += c.weight * c.deviation;
        den += std::abs(c.weight);
    }
    if (den == 0.0) {
        if (fell_back) *fell_back = true;
        return view.clamp(fallback);
    }
    return view.clamp(base + num / den);
}

}  // namespace

double predict_ubcf(const RatingMatrixView& view, const PearsonCache& cache,
                    const std::string& user, const std::string& item,
                    const NeighborhoodConfig& cfg, bool* fell_back) {
    if (fell_back) *fell_back = false;
    int u = view.user_index(user);
    if (u < 0) throw NotFoundError("unknown user: " + user);
    int j = view.item_index(item);
    if (j < 0) throw NotFoundError("unknown item: " + item);
    std::vector<Contribution> contribs;
    for (const auto& [i, r] : view.item_ratings(j)) {
        if (i == u) continue;
        auto w = cache.weight(u, i);
        if (!w) continue;
        if (cfg.positive_only && *w <= 0.0) continue;
        contribs.push_back({i, *w, r - view.user_mean(i)});
    }
    return combine(contribs, cfg.n_neighbors, view.user_mean(u), view.user_mean(u), view,
                   fell_back);
}

double predict_ibcf(const RatingMatrixView& view, const PearsonCache& cache,
                    const std::string& user, const std::string& item,
                    const NeighborhoodConfig& cfg, bool* fell_back) {
    if (fell_back) *fell_back = false;
    int u = view.user_index(user);
    if (u < 0) throw NotFoundError("unknown user: " + user);
    int j = view.item_index(item);
    if (j < 0) throw NotFoundError("unknown item: " + item);
    std::vector<Contribution> contribs;
    for (const auto& [i, r] : view.user_ratings(u)) {
        if (i == j) continue;
        auto w = cache.weight(j, i);
        if (!w) continue;
        if (cfg.positive_only && *w <= 0.0) continue;
        contribs.push_back({i, *w, r - view.item_mean(i)});
    }
    return combine(contribs, cfg.n_neighbors, view.item_mean(j), view.user_mean(u), view,
                   fell_back);
}

void PearsonCache::save_triplets(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << (side == Side::User ? "USER" : "ITEM") << ' ' << min_overlap << ' '
        << weights_.size() << '\n';
    char buf[32];
    for (std::size_t a = 0; a < weights_.size(); ++a) {
        std::vector<std::pair<int, Entry>> row(weights_[a].begin(), weights_[a].end());
        std::sort(row.begin(), row.end(),
                  [](const auto& l, const auto& r) { return l.first < r.first; });
        for (const auto& [b, e] : row) {
            if (static_cast<int>(a) >= b) continue;  // store upper triangle once
            std::snprintf(buf, sizeof(buf), "%.17g", e.weight);
            out << a << ' ' << b << ' ' << buf << ' ' << e.overlap << '\n';
        }
    }
}

PearsonCache PearsonCache::load_triplets(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    PearsonCache cache;
    std::string tag;
    std::size_t n;
    if (!(in >> tag >> cache.min_overlap >> n))
        throw ParseError("bad pearson cache header in " + path);
    cache.side = tag == "ITEM" ? Side::Item : Side::User;
    cache.weights_.resize(n);
    int a, b, overlap;
    double w;
    while (in >> a >> b >> w >> overlap) {
        cache.weights_[a][b] = {w, overlap};
        cache.weights_[b][a] = {w, overlap};
    }
    return cache;
}

}  // namespace coupledrec
