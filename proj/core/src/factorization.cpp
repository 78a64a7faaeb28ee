#include "coupledrec/factorization.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

namespace coupledrec {

namespace {

double dot(const double* a, const double* b, int k) {
    double s = 0.0;
    for (int i = 0; i < k; ++i) s += a[i] * b[i];
    return s;
}

/// Translates sim-matrix ids into view indices; throws when the similarity
/// matrix does not cover every id the view contains.
std::vector<SimEdge> edges_for_view(const ObjectSimMatrix& sim,
                                    const std::vector<std::string>& view_ids, int top_m,
                                    const char* side_name) {
    std::unordered_map<std::string, int> view_index;
    for (std::size_t i = 0; i < view_ids.size(); ++i)
        view_index.emplace(view_ids[i], static_cast<int>(i));
    std::unordered_map<std::string, int> sim_index;
    for (std::size_t i = 0; i < sim.ids.size(); ++i)
        sim_index.emplace(sim.ids[i], static_cast<int>(i));
    for (const auto& id : view_ids)
        if (!sim_index.count(id))
            throw CoverageError(std::string(side_name) + " similarity matrix does not cover id " +
                                id);
    std::vector<SimEdge> raw = top_m_edges(sim, top_m);
    std::vector<SimEdge> out;
    out.reserve(raw.size());
    for (const auto& e : raw) {
        auto f = view_index.find(sim.ids[e.from]);
        auto t = view_index.find(sim.ids[e.to]);
        if (f == view_index.end() || t == view_index.end()) continue;
        out.push_back({f->second, t->second, e.s});
    }
    return out;
}

}  // namespace

std::vector<SimEdge> top_m_edges(const ObjectSimMatrix& sim, int top_m) {
    std::vector<SimEdge> edges;
    std::size_t n = sim.size();
    std::vector<int> order(n);
    for (std::size_t a = 0; a < n; ++a) {
        order.clear();
        for (std::size_t b = 0; b < n; ++b)
            if (b != a) order.push_back(static_cast<int>(b));
        std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
            return sim.at(a, x) > sim.at(a, y);
        });
        int take = std::min<int>(top_m, static_cast<int>(order.size()));
        for (int i = 0; i < take; ++i)
            edges.push_back({static_cast<int>(a), order[i], sim.at(a, order[i])});
    }
    return edges;
}

double cmf_objective(const RatingMatrixView& view, const std::vector<double>& p,
                     const std::vector<double>& q, int k, double lambda, double alpha,
                     double beta, const std::vector<SimEdge>& user_edges,
                     const std::vector<SimEdge>& item_edges) {
    double loss = 0.0;
    for (std::size_t u = 0; u < view.user_count(); ++u) {
        for (const auto& [i, r] : view.user_ratings(static_cast<int>(u))) {
            double e = r - dot(&p[u * k], &q[static_cast<std::size_t>(i) * k], k);
            loss += e * e;
        }
    }
    double norm = 0.0;
    for (double v : p) norm += v * v;
    for (double v : q) norm += v * v;
    loss += lambda * norm;
    auto reg = [&](const std::vector<SimEdge>& edges, const std::vector<double>& f,
                   double strength) {
        if (strength == 0.0) return 0.0;
        double s = 0.0;
        for (const auto& e : edges) {
            double d2 = 0.0;
            for (int c = 0; c < k; ++c) {
                double d = f[static_cast<std::size_t>(e.from) * k + c] -
                           f[static_cast<std::size_t>(e.to) * k + c];
                d2 += d * d;
            }
            s += e.s * d2;
        }
        return 0.5 * strength * s;
    };
    loss += reg(user_edges, p, alpha);
    loss += reg(item_edges, q, beta);
    return loss;
}

void cmf_gradient(const RatingMatrixView& view, const std::vector<double>& p,
                  const std::vector<double>& q, int k, double lambda, double alpha,
                  double beta, const std::vector<SimEdge>& user_edges,
                  const std::vector<SimEdge>& item_edges, std::vector<double>& grad_p,
                  std::vector<double>& grad_q) {
    grad_p.assign(p.size(), 0.0);
    grad_q.assign(q.size(), 0.0);
    for (std::size_t u = 0; u < view.user_count(); ++u) {
        for (const auto& [i, r] : view.user_ratings(static_cast<int>(u))) {
            const double* pu = &p[u * k];
            const double* qi = &q[static_cast<std::size_t>(i) * k];
            double e = r - dot(pu, qi, k);
            for (int c = 0; c < k; ++c) {
                grad_p[u * k + c] += -2.0 * e * qi[c];
                grad_q[static_cast<std::size_t>(i) * k + c] += -2.0 * e * pu[c];
            }
        }
    }
    for (std::size_t i = 0; i < p.size(); ++i) grad_p[i] += 2.0 * lambda * p[i];
    for (std::size_t i = 0; i < q.size(); ++i) grad_q[i] += 2.0 * lambda * q[i];
    auto reg = [&](const std::vector<SimEdge>& edges, const std::vector<double>& f,
                   std::vector<double>& g, double strength) {
        if (strength == 0.0) return;
        for (const auto& e : edges) {
            for (int c = 0; c < k; ++c) {
                double d = f[static_cast<std::size_t>(e.from) * k + c] -
                           f[static_cast<std::size_t>(e.to) * k + c];
                g[static_cast<std::size_t>(e.from) * k + c] += strength * e.s * d;
                g[static_cast<std::size_t>(e.to) * k + c] -= strength * e.s * d;
            }
        }
    };
    reg(user_edges, p, grad_p, alpha);
    reg(item_edges, q, grad_q, beta);
}

CmfModel train_cmf(const RatingMatrixView& view, const ObjectSimMatrix* sim_user,
                   const ObjectSimMatrix* sim_item, const CmfConfig& cfg) {
    const MfConfig& mc = cfg.base;
    if (mc.k < 1) throw ConfigError("latent dimension must be >= 1");
    if (mc.learning_rate <= 0.0) throw ConfigError("learning rate must be > 0");
    if (mc.lambda < 0.0) throw ConfigError("lambda must be >= 0");
    if (cfg.alpha < 0.0 || cfg.beta < 0.0) throw ConfigError("coupling strengths must be >= 0");
    if (view.rating_count() == 0) throw EmptyInputError("empty rating view");

    CmfModel model;
    model.alpha = cfg.alpha;
    model.beta = cfg.beta;
    model.top_m = cfg.top_m;

    std::vector<SimEdge> user_edges, item_edges;
    if (cfg.alpha > 0.0) {
        if (!sim_user) throw CoverageError("user similarity matrix required when alpha > 0");
        user_edges = edges_for_view(*sim_user, view.user_ids(), cfg.top_m, "user");
        model.user_sim_digest = sim_user->digest();
    }
    if (cfg.beta > 0.0) {
        if (!sim_item) throw CoverageError("item similarity matrix required when beta > 0");
        item_edges = edges_for_view(*sim_item, view.item_ids(), cfg.top_m, "item");
        model.item_sim_digest = sim_item->digest();
    }

    LatentFactorModel& m = model.core;
    m.k = mc.k;
    m.config = mc;
    m.user_ids = view.user_ids();
    m.item_ids = view.item_ids();
    m.global_mean = view.global_mean();
    m.scale_min = view.scale_min();
    m.scale_max = view.scale_max();

    const int k = mc.k;
    std::mt19937_64 rng(mc.seed);
    std::normal_distribution<double> init(0.0, 0.1);
    m.p.resize(view.user_count() * static_cast<std::size_t>(k));
    m.q.resize(view.item_count() * static_cast<std::size_t>(k));
    for (auto& v : m.p) v = init(rng);
    for (auto& v : m.q) v = init(rng);

    struct Sample {
        int u, i;
        double r;
    };
    std::vector<Sample> samples;
    samples.reserve(view.rating_count());
    for (std::size_t u = 0; u < view.user_count(); ++u)
        for (const auto& [i, r] : view.user_ratings(static_cast<int>(u)))
            samples.push_back({static_cast<int>(u), i, r});
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);

    const double eta = mc.learning_rate;
    const double lambda = mc.lambda;
    std::vector<double> buf(k);
    std::vector<double> reg_grad;
    for (int epoch = 0; epoch < mc.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t idx : order) {
            const Sample& s = samples[idx];
            double* pu = &m.p[static_cast<std::size_t>(s.u) * k];
            double* qi = &m.q[static_cast<std::size_t>(s.i) * k];
            double e = s.r - dot(pu, qi, k);
            for (int c = 0; c < k; ++c) buf[c] = pu[c];
            for (int c = 0; c < k; ++c) pu[c] += eta * (e * qi[c] - lambda * pu[c]);
            for (int c = 0; c < k; ++c) qi[c] += eta * (e * buf[c] - lambda * qi[c]);
        }
        // one deterministic full step on each similarity regularizer per epoch
        auto reg_step = [&](const std::vector<SimEdge>& edges, std::vector<double>& f,
                            double strength) {
            if (strength == 0.0 || edges.empty()) return;
            reg_grad.assign(f.size(), 0.0);
            for (const auto& e : edges) {
                for (int c = 0; c < k; ++c) {
                    double d = f[static_cast<std::size_t>(e.from) * k + c] -
                               f[static_cast<std::size_t>(e.to) * k + c];
                    reg_grad[static_cast<std::size_t>(e.from) * k + c] += strength * e.s * d;
                    reg_grad[static_cast<std::size_t>(e.to) * k + c] -= strength * e.s * d;
                }
            }
            for (std::size_t i = 0; i < f.size(); ++i) f[i] -= eta * reg_grad[i];
        };
        reg_step(user_edges, m.p, cfg.alpha);
        reg_step(item_edges, m.q, cfg.beta);

        double obj = cmf_objective(view, m.p, m.q, k, lambda, cfg.alpha, cfg.beta,
                                   user_edges, item_edges);
        if (!std::isfinite(obj))
            throw TrainingError("training diverged at epoch " + std::to_string(epoch),
                                epoch - 1);
        m.loss_trace.push_back(obj);
    }
    return model;
}

LatentFactorModel train_mf(const RatingMatrixView& view, const MfConfig& cfg) {
    CmfConfig c;
    c.base = cfg;
    return train_cmf(view, nullptr, nullptr, c).core;
}

double LatentFactorModel::predict_idx(int u, int i) const {
    double r = dot(&p[static_cast<std::size_t>(u) * k],
                   &q[static_cast<std::size_t>(i) * k], k);
    return r < scale_min ? scale_min : (r > scale_max ? scale_max : r);
}

int LatentFactorModel::user_index(const std::string& id) const {
    for (std::size_t i = 0; i < user_ids.size(); ++i)
        if (user_ids[i] == id) return static_cast<int>(i);
    return -1;
}

int LatentFactorModel::item_index(const std::string& id) const {
    for (std::size_t i = 0; i < item_ids.size(); ++i)
        if (item_ids[i] == id) return static_cast<int>(i);
    return -1;
}

double LatentFactorModel::predict(const std::string& user, const std::string& item) const {
    int u = user_index(user);
    if (u < 0) throw NotFoundError("unknown user: " + user);
    int i = item_index(item);
    if (i < 0) throw NotFoundError("unknown item: " + item);
    return predict_idx(u, i);
}

double predict_mf(const LatentFactorModel& model, const std::string& user,
                  const std::string& item) {
    return model.predict(user, item);
}

double predict_cmf(const CmfModel& model, const std::string& user,
                   const std::string& item) {
    return model.core.predict(user, item);
}

// --- serialization ---

namespace {

constexpr char kMfMagic[4] = {'C', 'R', 'M', 'F'};
constexpr char kCmfMagic[4] = {'C', 'R', 'C', 'M'};

template <class T>
void write_raw(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
void read_raw(std::ifstream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
}

void write_str(std::ofstream& out, const std::string& s) {
    std::uint32_t len = static_cast<std::uint32_t>(s.size());
    write_raw(out, len);
    out.write(s.data(), len);
}

std::string read_str(std::ifstream& in) {
    std::uint32_t len;
    read_raw(in, len);
    std::string s(len, '\0');
    in.read(s.data(), len);
    return s;
}

void write_core(std::ofstream& out, const LatentFactorModel& m) {
    write_raw(out, std::int32_t(m.k));
    write_raw(out, std::uint64_t(m.user_ids.size()));
    write_raw(out, std::uint64_t(m.item_ids.size()));
    write_raw(out, m.config.learning_rate);
    write_raw(out, m.config.lambda);
    write_raw(out, std::int32_t(m.config.epochs));
    write_raw(out, m.config.seed);
    write_raw(out, m.global_mean);
    write_raw(out, m.scale_min);
    write_raw(out, m.scale_max);
    for (const auto& id : m.user_ids) write_str(out, id);
    for (const auto& id : m.item_ids) write_str(out, id);
    out.write(reinterpret_cast<const char*>(m.p.data()),
              static_cast<std::streamsize>(m.p.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(m.q.data()),
              static_cast<std::streamsize>(m.q.size() * sizeof(double)));
}

LatentFactorModel read_core(std::ifstream& in) {
    LatentFactorModel m;
    std::int32_t k, epochs;
    std::uint64_t nu, ni;
    read_raw(in, k);
    read_raw(in, nu);
    read_raw(in, ni);
    read_raw(in, m.config.learning_rate);
    read_raw(in, m.config.lambda);
    read_raw(in, epochs);
    read_raw(in, m.config.seed);
    read_raw(in, m.global_mean);
    read_raw(in, m.scale_min);
    read_raw(in, m.scale_max);
    m.k = k;
    m.config.k = k;
    m.config.epochs = epochs;
    m.user_ids.resize(nu);
    m.item_ids.resize(ni);
    for (auto& id : m.user_ids) id = read_str(in);
    for (auto& id : m.item_ids) id = read_str(in);
    m.p.resize(nu * static_cast<std::size_t>(k));
    m.q.resize(ni * static_cast<std::size_t>(k));
    in.read(reinterpret_cast<char*>(m.p.data()),
            static_cast<std::streamsize>(m.p.size() * sizeof(double)));
    in.read(reinterpret_cast<char*>(m.q.data()),
            static_cast<std::streamsize>(m.q.size() * sizeof(double)));
    if (!in) throw ParseError("truncated model file");
    return m;
}

}  // namespace

void LatentFactorModel::save_binary(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out.write(kMfMagic, 4);
    write_core(out, *this);
}

LatentFactorModel LatentFactorModel::load_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMfMagic, 4) != 0)
        throw ParseError("not a latent factor model file: " + path);
    return read_core(in);
}

void CmfModel::save_binary(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out.write(kCmfMagic, 4);
    write_raw(out, alpha);
    write_raw(out, beta);
    write_raw(out, std::int32_t(top_m));
    write_str(out, user_sim_digest);
    write_str(out, item_sim_digest);
    write_core(out, core);
}

CmfModel CmfModel::load_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kCmfMagic, 4) != 0)
        throw ParseError("not a coupled model file: " + path);
    CmfModel m;
    std::int32_t tm;
    read_raw(in, m.alpha);
    read_raw(in, m.beta);
    read_raw(in, tm);
    m.top_m = tm;
    m.user_sim_digest = read_str(in);
    m.item_sim_digest = read_str(in);
    m.core = read_core(in);
    return m;
}

}  // namespace coupledrec
