#include "coupledrec/coupling.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace coupledrec {

CellCouplingTensor::Cell CellCouplingTensor::at(int p, int q, const std::string& x,
                                                const std::string& w) const {
    const auto& m = cells[p][q];
    auto it = m.find({x, w});
    return it == m.end() ? Cell{} : it->second;
}

CellCouplingTensor build_cell_couplings(const Dataset& ds, double tau) {
    if (tau < 0.0) throw ConfigError("tau must be >= 0");
    if (ds.ratings.entries.empty()) throw EmptyInputError("no ratings to build couplings from");
    CellCouplingTensor t;
    t.tau = tau;
    for (const auto& a : ds.users.attributes) t.user_attrs.push_back(a.name);
    for (const auto& a : ds.items.attributes) t.item_attrs.push_back(a.name);
    std::size_t np = t.user_attrs.size(), nq = t.item_attrs.size();

    double total = 0.0;
    for (const auto& e : ds.ratings.entries) total += e.rating;
    t.global_mean = total / ds.ratings.entries.size();

    struct Accum {
        double sum = 0.0;
        int n = 0;
    };
    std::vector<std::vector<std::map<std::pair<std::string, std::string>, Accum>>> accum(
        np, std::vector<std::map<std::pair<std::string, std::string>, Accum>>(nq));
    for (const auto& e : ds.ratings.entries) {
        int u = ds.users.object_index(e.user_id);
        int i = ds.items.object_index(e.item_id);
        if (u < 0 || i < 0) continue;  // dangling ids carry no attribute signal
        double residual = e.rating - t.global_mean;
        for (std::size_t p = 0; p < np; ++p) {
            const auto& x = ds.users.cells[u][p];
            if (is_missing(x)) continue;
            for (std::size_t q = 0; q < nq; ++q) {
                const auto& w = ds.items.cells[i][q];
                if (is_missing(w)) continue;
                auto& a = accum[p][q][{x, w}];
                a.sum += residual;
                ++a.n;
            }
        }
    }
    t.cells.assign(np, std::vector<std::map<std::pair<std::string, std::string>,
                                            CellCouplingTensor::Cell>>(nq));
    for (std::size_t p = 0; p < np; ++p)
        for (std::size_t q = 0; q < nq; ++q)
            for (const auto& [key, a] : accum[p][q]) {
                double shrink = a.n / (a.n + tau);
                t.cells[p][q][key] = {shrink * (a.sum / a.n), a.n};
            }
    return t;
}

std::map<std::string, double> aggregate_cell_couplings(const CellCouplingTensor& tensor,
                                                       CouplingAggregation mode) {
    std::size_t np = tensor.user_attrs.size(), nq = tensor.item_attrs.size();
    // per-pair mean absolute entry over supported cells
    std::vector<std::vector<double>> pair_strength(np, std::vector<double>(nq, 0.0));
    for (std::size_t p = 0; p < np; ++p)
        for (std::size_t q = 0; q < nq; ++q) {
            double sum = 0.0;
            int n = 0;
            for (const auto& [key, cell] : tensor.cells[p][q]) {
                if (cell.support == 0) continue;
                sum += std::abs(cell.value);
                ++n;
            }
            pair_strength[p][q] = n == 0 ? 0.0 : sum / n;
        }
    std::map<std::string, double> out;
    if (mode == CouplingAggregation::PerUserAttr) {
        for (std::size_t p = 0; p < np; ++p) {
            double s = 0.0;
            for (std::size_t q = 0; q < nq; ++q) s += pair_strength[p][q];
            out[tensor.user_attrs[p]] = nq == 0 ? 0.0 : s / nq;
        }
    } else {
        for (std::size_t q = 0; q < nq; ++q) {
            double s = 0.0;
            for (std::size_t p = 0; p < np; ++p) s += pair_strength[p][q];
            out[tensor.item_attrs[q]] = np == 0 ? 0.0 : s / np;
        }
    }
    return out;
}

double predict_coupling_bias(const CellCouplingTensor& tensor, const Dataset& ds,
                             const std::string& user, const std::string& item) {
    int u = ds.users.object_index(user);
    if (u < 0) throw NotFoundError("unknown user: " + user);
    int i = ds.items.object_index(item);
    if (i < 0) throw NotFoundError("unknown item: " + item);
    double sum = 0.0;
    int n = 0;
    for (std::size_t p = 0; p < tensor.user_attrs.size(); ++p) {
        const auto& x = ds.users.cells[u][p];
        if (is_missing(x)) continue;
        for (std::size_t q = 0; q < tensor.item_attrs.size(); ++q) {
            const auto& w = ds.items.cells[i][q];
            if (is_missing(w)) continue;
            sum += tensor.at(static_cast<int>(p), static_cast<int>(q), x, w).value;
            ++n;
        }
    }
    return n == 0 ? 0.0 : sum / n;
}

double predict_ensemble(const CmfModel& model, const CellCouplingTensor& tensor,
                        const EnsembleConfig& cfg, const Dataset& ds,
                        const std::string& user, const std::string& item) {
    double r = 0.0;
    if (cfg.gamma_mf != 0.0) r += cfg.gamma_mf * predict_cmf(model, user, item);
    if (cfg.gamma_d != 0.0)
        r += cfg.gamma_d * (tensor.global_mean + predict_coupling_bias(tensor, ds, user, item));
    double lo = model.core.scale_min, hi = model.core.scale_max;
    return r < lo ? lo : (r > hi ? hi : r);
}

void CellCouplingTensor::save_text(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", tau);
    out << "tau " << buf << '\n';
    std::snprintf(buf, sizeof(buf), "%.17g", global_mean);
    out << "global_mean " << buf << '\n';
    for (std::size_t p = 0; p < user_attrs.size(); ++p)
        for (std::size_t q = 0; q < item_attrs.size(); ++q) {
            out << "pair " << user_attrs[p] << ' ' << item_attrs[q] << ' '
                << cells[p][q].size() << '\n';
            for (const auto& [key, cell] : cells[p][q]) {
                std::snprintf(buf, sizeof(buf), "%.17g", cell.value);
                out << key.first << '\t' << key.second << '\t' << buf << '\t' << cell.support
                    << '\n';
            }
        }
}

CellCouplingTensor CellCouplingTensor::load_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    CellCouplingTensor t;
    std::string word;
    if (!(in >> word >> t.tau) || word != "tau")
        throw ParseError("bad coupling tensor header in " + path);
    if (!(in >> word >> t.global_mean) || word != "global_mean")
        throw ParseError("bad coupling tensor header in " + path);
    std::string line;
    std::getline(in, line);
    std::map<std::string, int> up, iq;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream hs(line);
        std::string tag, pname, qname;
        std::size_t count;
        if (!(hs >> tag >> pname >> qname >> count) || tag != "pair")
            throw ParseError("bad pair header: " + line);
        if (!up.count(pname)) {
            up[pname] = static_cast<int>(t.user_attrs.size());
            t.user_attrs.push_back(pname);
        }
        if (!iq.count(qname)) {
            iq[qname] = static_cast<int>(t.item_attrs.size());
            t.item_attrs.push_back(qname);
        }
        int p = up[pname], q = iq[qname];
        if (t.cells.size() < up.size()) t.cells.resize(up.size());
        for (auto& row : t.cells)
            if (row.size() < iq.size()) row.resize(iq.size());
        for (std::size_t c = 0; c < count; ++c) {
            if (!std::getline(in, line)) throw ParseError("truncated tensor file: " + path);
            std::istringstream cs(line);
            std::string x, w;
            double v;
            int n;
            if (!std::getline(cs, x, '\t') || !std::getline(cs, w, '\t') || !(cs >> v >> n))
                throw ParseError("bad tensor cell: " + line);
            t.cells[p][q][{x, w}] = {v, n};
        }
    }
    return t;
}

}  // namespace coupledrec
