#include "coupledrec/similarity.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace coupledrec {

namespace {

void require_indexed(const ValueFrequencyIndex& freq, int attr, const std::string& v) {
    if (freq.frequency(attr, v) < 1)
        throw NotFoundError("value '" + v + "' not indexed for attribute " +
                            std::to_string(attr));
}

}  // namespace

SimilarityIndices build_indices(const AttributeTable& table) {
    for (const auto& a : table.attributes)
        if (a.kind != AttrKind::Categorical)
            throw PreconditionError("attribute '" + a.name +
                                    "' is numeric; discretize before building indices");
    SimilarityIndices idx;
    idx.attributes = table.attributes;
    std::size_t r = table.attribute_count();
    idx.freq.counts.resize(r);
    idx.freq.object_count = static_cast<int>(table.object_count());
    idx.cooc.joint.assign(r, std::vector<std::unordered_map<
                                 std::string, std::unordered_map<std::string, int>>>(r));
    idx.cooc.totals.assign(r, std::vector<std::unordered_map<std::string, int>>(r));
    for (const auto& row : table.cells) {
        for (std::size_t j = 0; j < r; ++j) {
            if (is_missing(row[j])) continue;
            ++idx.freq.counts[j][row[j]];
            for (std::size_t k = 0; k < r; ++k) {
                if (k == j || is_missing(row[k])) continue;
                ++idx.cooc.joint[j][k][row[j]][row[k]];
                ++idx.cooc.totals[j][k][row[j]];
            }
        }
    }
    return idx;
}

double intra_value_sim(const ValueFrequencyIndex& freq, int attr,
                       const std::string& x, const std::string& y) {
    require_indexed(freq, attr, x);
    require_indexed(freq, attr, y);
    double fx = freq.frequency(attr, x);
    double fy = freq.frequency(attr, y);
    return fx * fy / (fx + fy + fx * fy);
}

double inter_value_sim(const SimilarityIndices& idx, int attr,
                       const std::string& x, const std::string& y) {
    require_indexed(idx.freq, attr, x);
    require_indexed(idx.freq, attr, y);
    std::size_t r = idx.attributes.size();
    if (r <= 1) return 1.0;
    if (x == y) return 1.0;
    // canonical argument order keeps the summation order, and therefore the
    // result, exactly symmetric
    if (y < x) return inter_value_sim(idx, attr, y, x);
    double sum = 0.0;
    for (std::size_t k = 0; k < r; ++k) {
        if (k == static_cast<std::size_t>(attr)) continue;
        auto tx = idx.cooc.totals[attr][k].find(x);
        auto ty = idx.cooc.totals[attr][k].find(y);
        if (tx == idx.cooc.totals[attr][k].end() || ty == idx.cooc.totals[attr][k].end())
            continue;  // no co-occurring rows for this attribute pair
        const auto& jx = idx.cooc.joint[attr][k].at(x);
        const auto& jy = idx.cooc.joint[attr][k].at(y);
        double nx = tx->second, ny = ty->second;
        for (const auto& [w, cx] : jx) {
            auto it = jy.find(w);
            if (it == jy.end()) continue;
            sum += std::min(cx / nx, it->second / ny);
        }
    }
    return sum / static_cast<double>(r - 1);
}

double coupled_value_sim(const SimilarityIndices& idx, int attr,
                         const std::string& x, const std::string& y) {
    return intra_value_sim(idx.freq, attr, x, y) * inter_value_sim(idx, attr, x, y);
}

double coupled_row_sim(const SimilarityIndices& idx,
                       const std::vector<std::string>& row_a,
                       const std::vector<std::string>& row_b) {
    double sum = 0.0;
    int n = 0;
    for (std::size_t j = 0; j < idx.attributes.size(); ++j) {
        if (is_missing(row_a[j]) || is_missing(row_b[j])) continue;
        sum += coupled_value_sim(idx, static_cast<int>(j), row_a[j], row_b[j]);
        ++n;
    }
    return n == 0 ? 0.0 : sum / n;
}

double coupled_object_sim(const AttributeTable& table, const SimilarityIndices& idx,
                          const std::string& a, const std::string& b) {
    int ia = table.object_index(a);
    int ib = table.object_index(b);
    if (ia < 0) throw NotFoundError("unknown object id: " + a);
    if (ib < 0) throw NotFoundError("unknown object id: " + b);
    return coupled_row_sim(idx, table.cells[ia], table.cells[ib]);
}

ObjectSimMatrix build_object_sim_matrix(const AttributeTable& table, Side side) {
    if (table.object_count() == 0) throw EmptyInputError("empty attribute table");
    SimilarityIndices idx = build_indices(table);
    ObjectSimMatrix m;
    m.side = side;
    m.ids = table.object_ids;
    std::size_t n = m.ids.size();
    m.values.assign(n * n, 0.0);

    // Categorical domains are small; tabulate coupled value similarities per
    // attribute once and encode rows as value indices.
    std::size_t r = table.attribute_count();
    std::vector<std::vector<std::string>> domains(r);
    std::vector<std::unordered_map<std::string, int>> value_index(r);
    std::vector<std::vector<double>> delta(r);  // [attr][xi * dom + yi]
    for (std::size_t j = 0; j < r; ++j) {
        for (const auto& [v, cnt] : idx.freq.counts[j]) domains[j].push_back(v);
        std::sort(domains[j].begin(), domains[j].end());
        for (std::size_t i = 0; i < domains[j].size(); ++i) value_index[j][domains[j][i]] = i;
        std::size_t d = domains[j].size();
        delta[j].assign(d * d, 0.0);
        for (std::size_t x = 0; x < d; ++x)
            for (std::size_t y = x; y < d; ++y) {
                double s = coupled_value_sim(idx, static_cast<int>(j), domains[j][x],
                                             domains[j][y]);
                delta[j][x * d + y] = s;
                delta[j][y * d + x] = s;
            }
    }
    std::vector<std::vector<int>> encoded(n, std::vector<int>(r, -1));
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t j = 0; j < r; ++j)
            if (!is_missing(table.cells[a][j]))
                encoded[a][j] = value_index[j][table.cells[a][j]];
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a; b < n; ++b) {
            double sum = 0.0;
            int cnt = 0;
            for (std::size_t j = 0; j < r; ++j) {
                int xa = encoded[a][j], xb = encoded[b][j];
                if (xa < 0 || xb < 0) continue;
                sum += delta[j][static_cast<std::size_t>(xa) * domains[j].size() + xb];
                ++cnt;
            }
            double s = cnt == 0 ? 0.0 : sum / cnt;
            m.at(a, b) = s;
            m.at(b, a) = s;
        }
    }
    return m;
}

std::vector<std::pair<std::string, double>> top_k_neighbors(
    const ObjectSimMatrix& sim, const std::string& id, int k) {
    if (k < 1) throw ConfigError("k must be >= 1");
    int a = sim.index_of(id);
    if (a < 0) throw NotFoundError("unknown object id: " + id);
    std::vector<int> order;
    order.reserve(sim.size() - 1);
    for (std::size_t b = 0; b < sim.size(); ++b)
        if (static_cast<int>(b) != a) order.push_back(static_cast<int>(b));
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
        return sim.at(a, x) > sim.at(a, y);
    });
    if (static_cast<std::size_t>(k) < order.size()) order.resize(k);
    std::vector<std::pair<std::string, double>> out;
    out.reserve(order.size());
    for (int b : order) out.emplace_back(sim.ids[b], sim.at(a, b));
    return out;
}

int ObjectSimMatrix::index_of(const std::string& id) const {
    for (std::size_t i = 0; i < ids.size(); ++i)
        if (ids[i] == id) return static_cast<int>(i);
    return -1;
}

namespace {
constexpr char kSimMagic[4] = {'C', 'R', 'S', 'M'};

template <class T>
void write_raw(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
void read_raw(std::ifstream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
}
}  // namespace

void ObjectSimMatrix::save_binary(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out.write(kSimMagic, 4);
    std::uint8_t s = side == Side::User ? 0 : 1;
    write_raw(out, s);
    std::uint64_t n = ids.size();
    write_raw(out, n);
    for (const auto& id : ids) {
        std::uint32_t len = static_cast<std::uint32_t>(id.size());
        write_raw(out, len);
        out.write(id.data(), len);
    }
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
}

ObjectSimMatrix ObjectSimMatrix::load_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kSimMagic, 4) != 0)
        throw ParseError("not a similarity matrix file: " + path);
    ObjectSimMatrix m;
    std::uint8_t s;
    read_raw(in, s);
    m.side = s == 0 ? Side::User : Side::Item;
    std::uint64_t n;
    read_raw(in, n);
    m.ids.resize(n);
    for (auto& id : m.ids) {
        std::uint32_t len;
        read_raw(in, len);
        id.resize(len);
        in.read(id.data(), len);
    }
    m.values.resize(n * n);
    in.read(reinterpret_cast<char*>(m.values.data()),
            static_cast<std::streamsize>(m.values.size() * sizeof(double)));
    if (!in) throw ParseError("truncated similarity matrix file: " + path);
    return m;
}

void ObjectSimMatrix::save_text(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << (side == Side::User ? "USER" : "ITEM") << ' ' << ids.size() << '\n';
    for (const auto& id : ids) out << id << '\n';
    char buf[32];
    for (std::size_t a = 0; a < size(); ++a) {
        for (std::size_t b = 0; b < size(); ++b) {
            std::snprintf(buf, sizeof(buf), "%.12g", at(a, b));
            out << (b ? " " : "") << buf;
        }
        out << '\n';
    }
}

std::string ObjectSimMatrix::digest() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix_bytes = [&h](const void* p, std::size_t n) {
        const unsigned char* c = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= c[i];
            h *= 1099511628211ULL;
        }
    };
    std::uint8_t s = side == Side::User ? 0 : 1;
    mix_bytes(&s, 1);
    for (const auto& id : ids) mix_bytes(id.data(), id.size());
    mix_bytes(values.data(), values.size() * sizeof(double));
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace coupledrec
