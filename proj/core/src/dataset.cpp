#include "coupledrec/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace coupledrec {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, sep)) out.push_back(field);
    if (!line.empty() && line.back() == sep) out.push_back("");
    return out;
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

/// Shortest decimal text that round-trips the double exactly.
std::string fmt_double(double v) {
    if (v == static_cast<double>(static_cast<long long>(v)) && std::abs(v) < 1e15)
        return std::to_string(static_cast<long long>(v));
    for (int prec = 1; prec <= 17; ++prec) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) return buf;
    }
    return "0";
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
}

bool parse_ll(const std::string& s, long long& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtoll(s.c_str(), &end, 10);
    return end == s.c_str() + s.size();
}

const char* kGenreNames[19] = {
    "unknown",     "Action",  "Adventure", "Animation", "Children's",
    "Comedy",      "Crime",   "Documentary", "Drama",   "Fantasy",
    "Film-Noir",   "Horror",  "Musical",   "Mystery",  "Romance",
    "Sci-Fi",      "Thriller", "War",      "Western"};

}  // namespace

int AttributeTable::object_index(const std::string& id) const {
    auto it = id_index_.find(id);
    return it == id_index_.end() ? -1 : it->second;
}

int AttributeTable::attribute_index(const std::string& name) const {
    for (std::size_t i = 0; i < attributes.size(); ++i)
        if (attributes[i].name == name) return static_cast<int>(i);
    return -1;
}

const std::string& AttributeTable::cell(const std::string& object_id,
                                        const std::string& attr) const {
    int oi = object_index(object_id);
    if (oi < 0) throw NotFoundError("unknown object id: " + object_id);
    int ai = attribute_index(attr);
    if (ai < 0) throw NotFoundError("unknown attribute: " + attr);
    return cells[oi][ai];
}

void AttributeTable::add_object(const std::string& id, std::vector<std::string> row) {
    if (row.size() != attributes.size())
        throw ParseError("row for object " + id + " has " + std::to_string(row.size()) +
                         " cells, expected " + std::to_string(attributes.size()));
    if (id_index_.count(id)) throw DuplicateError("duplicate object id: " + id);
    id_index_.emplace(id, static_cast<int>(object_ids.size()));
    object_ids.push_back(id);
    cells.push_back(std::move(row));
}

void AttributeTable::rebuild_index() {
    id_index_.clear();
    for (std::size_t i = 0; i < object_ids.size(); ++i)
        id_index_.emplace(object_ids[i], static_cast<int>(i));
}

RatingTable parse_movielens_ratings(const std::string& path,
                                    double scale_min, double scale_max) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open ratings file: " + path);
    RatingTable table;
    table.scale_min = scale_min;
    table.scale_max = scale_max;
    std::set<std::pair<std::string, std::string>> seen;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty()) continue;
        auto f = split(line, '\t');
        if (f.size() != 3 && f.size() != 4)
            throw ParseError("ratings line " + std::to_string(lineno) +
                             ": expected 3 or 4 tab-separated fields");
        RatingEntry e;
        e.user_id = f[0];
        e.item_id = f[1];
        if (!parse_double(f[2], e.rating))
            throw ParseError("ratings line " + std::to_string(lineno) + ": bad rating '" +
                             f[2] + "'");
        if (e.rating < scale_min || e.rating > scale_max)
            throw RangeError("ratings line " + std::to_string(lineno) + ": rating " + f[2] +
                             " outside scale [" + fmt_double(scale_min) + "," +
                             fmt_double(scale_max) + "]");
        if (f.size() == 4 && !parse_ll(f[3], e.timestamp))
            throw ParseError("ratings line " + std::to_string(lineno) + ": bad timestamp");
        if (!seen.emplace(e.user_id, e.item_id).second)
            throw DuplicateError("ratings line " + std::to_string(lineno) +
                                 ": duplicate pair (" + e.user_id + "," + e.item_id + ")");
        table.entries.push_back(std::move(e));
    }
    if (table.entries.empty()) throw EmptyInputError("empty ratings");
    return table;
}

AttributeTable parse_movielens_users(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open users file: " + path);
    AttributeTable t;
    t.attributes = {{"age", AttrKind::Numeric},
                    {"gender", AttrKind::Categorical},
                    {"occupation", AttrKind::Categorical},
                    {"zip_prefix", AttrKind::Categorical}};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty()) continue;
        auto f = split(line, '|');
        if (f.size() != 5)
            throw ParseError("users line " + std::to_string(lineno) +
                             ": expected 5 pipe-separated fields");
        long long age;
        if (!parse_ll(f[1], age))
            throw ParseError("users line " + std::to_string(lineno) + ": bad age '" + f[1] +
                             "'");
        std::string zip_prefix = f[4].empty() ? kMissing : f[4].substr(0, 1);
        t.add_object(f[0], {f[1], f[2], f[3], zip_prefix});
    }
    if (t.object_ids.empty()) throw EmptyInputError("empty users table");
    return t;
}

AttributeTable parse_movielens_items(const std::string& path, bool raw_genre_flags) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open items file: " + path);
    AttributeTable t;
    if (raw_genre_flags) {
        t.attributes.push_back({"release_decade", AttrKind::Categorical});
        for (const char* g : kGenreNames)
            t.attributes.push_back({std::string("genre_") + g, AttrKind::Categorical});
    } else {
        t.attributes = {{"release_decade", AttrKind::Categorical},
                        {"genre_primary", AttrKind::Categorical},
                        {"genre_count", AttrKind::Categorical}};
    }
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty()) continue;
        auto f = split(line, '|');
        if (f.size() != 24)
            throw ParseError("items line " + std::to_string(lineno) + ": expected 24 fields, got " +
                             std::to_string(f.size()));
        // release_date like "01-Jan-1995"; unparseable year becomes MISSING.
        std::string decade = kMissing;
        const std::string& date = f[2];
        auto dash = date.rfind('-');
        if (dash != std::string::npos) {
            long long year;
            if (parse_ll(date.substr(dash + 1), year) && year >= 1000 && year <= 9999)
                decade = std::to_string((year / 10) * 10) + "s";
        }
        int flags[19];
        int set_count = 0;
        int first_set = -1;
        for (int g = 0; g < 19; ++g) {
            const std::string& cell = f[5 + g];
            if (cell != "0" && cell != "1")
                throw ParseError("items line " + std::to_string(lineno) + ": bad genre flag '" +
                                 cell + "'");
            flags[g] = cell == "1" ? 1 : 0;
            if (flags[g]) {
                ++set_count;
                if (first_set < 0) first_set = g;
            }
        }
        if (raw_genre_flags) {
            std::vector<std::string> row;
            row.push_back(decade);
            for (int g = 0; g < 19; ++g) row.push_back(flags[g] ? "1" : "0");
            t.add_object(f[0], std::move(row));
        } else {
            std::string primary = first_set < 0 ? "unknown" : kGenreNames[first_set];
            std::string count_bucket;
            if (set_count == 0)
                count_bucket = "unknown";
            else if (set_count == 1)
                count_bucket = "1";
            else if (set_count == 2)
                count_bucket = "2";
            else
                count_bucket = "3+";
            t.add_object(f[0], {decade, primary, count_bucket});
        }
    }
    if (t.object_ids.empty()) throw EmptyInputError("empty items table");
    return t;
}

AttributeTable parse_generic_csv(const std::string& path,
                                 const std::vector<Attribute>& schema) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open csv file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw EmptyInputError("empty csv: " + path);
    auto header = split(strip_cr(line), ',');
    if (header.size() != schema.size() + 1)
        throw SchemaError("csv header has " + std::to_string(header.size()) +
                          " columns, schema expects " + std::to_string(schema.size() + 1));
    for (std::size_t i = 0; i < schema.size(); ++i)
        if (header[i + 1] != schema[i].name)
            throw SchemaError("csv header column '" + header[i + 1] +
                              "' does not match schema attribute '" + schema[i].name + "'");
    AttributeTable t;
    t.attributes = schema;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty()) continue;
        auto f = split(line, ',');
        if (f.size() != header.size())
            throw ParseError("csv line " + std::to_string(lineno) + ": expected " +
                             std::to_string(header.size()) + " fields");
        t.add_object(f[0], std::vector<std::string>(f.begin() + 1, f.end()));
    }
    return t;
}

Dataset load_movielens_dataset(const std::string& dir, bool strict) {
    Dataset ds;
    ds.ratings = parse_movielens_ratings(dir + "/u.data", 1.0, 5.0);
    ds.users = parse_movielens_users(dir + "/u.user");
    ds.items = parse_movielens_items(dir + "/u.item");
    auto report = validate_dataset(ds);
    if (!report.dangling_users.empty() || !report.dangling_items.empty()) {
        if (strict)
            throw ValidationError("dangling ids in ratings: " +
                                  std::to_string(report.dangling_users.size()) + " users, " +
                                  std::to_string(report.dangling_items.size()) + " items");
        for (const auto& id : report.dangling_users)
            ds.users.add_object(id, std::vector<std::string>(ds.users.attribute_count()));
        for (const auto& id : report.dangling_items)
            ds.items.add_object(id, std::vector<std::string>(ds.items.attribute_count()));
    }
    return ds;
}

int discretize(AttributeTable& table, const DiscretizationSpec& spec) {
    int ai = table.attribute_index(spec.attribute_name);
    if (ai < 0) throw NotFoundError("unknown attribute: " + spec.attribute_name);
    if (table.attributes[ai].kind != AttrKind::Numeric)
        throw PreconditionError("attribute '" + spec.attribute_name +
                                "' is already categorical");

    std::vector<double> values;
    for (const auto& row : table.cells) {
        if (is_missing(row[ai])) continue;
        double v;
        if (!parse_double(row[ai], v))
            throw ParseError("non-numeric cell '" + row[ai] + "' in attribute " +
                             spec.attribute_name);
        values.push_back(v);
    }

    // Ascending interior cut points; value v lands in the first bin whose
    // upper cut exceeds it.
    std::vector<double> cuts;
    std::vector<std::string> labels;
    switch (spec.strategy) {
        case BinStrategy::ExplicitCuts: {
            if (spec.cut_points.empty()) throw ConfigError("explicit cut points required");
            if (!std::is_sorted(spec.cut_points.begin(), spec.cut_points.end()))
                throw ConfigError("cut points must be ascending");
            cuts = spec.cut_points;
            labels.push_back("<" + fmt_double(cuts.front()));
            for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
                labels.push_back("[" + fmt_double(cuts[i]) + "," + fmt_double(cuts[i + 1]) + ")");
            labels.push_back(">=" + fmt_double(cuts.back()));
            break;
        }
        case BinStrategy::EqualWidth: {
            if (spec.bin_count < 2) throw ConfigError("bin_count must be >= 2");
            if (!values.empty()) {
                double lo = *std::min_element(values.begin(), values.end());
                double hi = *std::max_element(values.begin(), values.end());
                for (int i = 1; i < spec.bin_count; ++i)
                    cuts.push_back(lo + (hi - lo) * i / spec.bin_count);
            }
            for (int i = 0; i < spec.bin_count; ++i) labels.push_back("b" + std::to_string(i));
            break;
        }
        case BinStrategy::EqualFrequency: {
            if (spec.bin_count < 2) throw ConfigError("bin_count must be >= 2");
            std::vector<double> sorted = values;
            std::sort(sorted.begin(), sorted.end());
            for (int i = 1; i < spec.bin_count && !sorted.empty(); ++i) {
                double c = sorted[sorted.size() * i / spec.bin_count];
                if (cuts.empty() || c > cuts.back()) cuts.push_back(c);
            }
            for (std::size_t i = 0; i <= cuts.size(); ++i)
                labels.push_back("b" + std::to_string(i));
            break;
        }
    }

    std::set<std::string> used;
    for (auto& row : table.cells) {
        if (is_missing(row[ai])) continue;
        double v = std::strtod(row[ai].c_str(), nullptr);
        // bin = number of cuts <= v, so intervals are [cut, next_cut)
        std::size_t bin = std::upper_bound(cuts.begin(), cuts.end(), v) - cuts.begin();
        row[ai] = labels[bin];
        used.insert(row[ai]);
    }
    table.attributes[ai].kind = AttrKind::Categorical;
    return static_cast<int>(used.size());
}

ValidationReport validate_dataset(const Dataset& ds) {
    ValidationReport r;
    std::set<std::string> seen_users, seen_items;
    for (const auto& e : ds.ratings.entries) {
        if (ds.users.object_index(e.user_id) < 0 && seen_users.insert(e.user_id).second)
            r.dangling_users.push_back(e.user_id);
        if (ds.items.object_index(e.item_id) < 0 && seen_items.insert(e.item_id).second)
            r.dangling_items.push_back(e.item_id);
        if (e.rating < ds.ratings.scale_min || e.rating > ds.ratings.scale_max)
            ++r.scale_violations;
    }
    auto missing_rates = [](const AttributeTable& t, std::map<std::string, double>& out) {
        if (t.object_count() == 0) return;
        for (std::size_t a = 0; a < t.attribute_count(); ++a) {
            int miss = 0;
            for (const auto& row : t.cells)
                if (is_missing(row[a])) ++miss;
            out[t.attributes[a].name] = static_cast<double>(miss) / t.object_count();
        }
    };
    missing_rates(ds.users, r.user_missing_rates);
    missing_rates(ds.items, r.item_missing_rates);
    return r;
}

std::string ValidationReport::to_text() const {
    std::ostringstream os;
    os << "dangling_users: " << dangling_users.size() << "\n";
    os << "dangling_items: " << dangling_items.size() << "\n";
    os << "scale_violations: " << scale_violations << "\n";
    for (const auto& [name, rate] : user_missing_rates)
        os << "user_missing." << name << ": " << fmt_double(rate) << "\n";
    for (const auto& [name, rate] : item_missing_rates)
        os << "item_missing." << name << ": " << fmt_double(rate) << "\n";
    os << (clean() ? "status: clean\n" : "status: violations\n");
    return os.str();
}

namespace {

std::string kind_name(AttrKind k) {
    return k == AttrKind::Numeric ? "numeric" : "categorical";
}

AttrKind kind_from_name(const std::string& s) {
    if (s == "numeric") return AttrKind::Numeric;
    if (s == "categorical") return AttrKind::Categorical;
    throw ParseError("unknown attribute kind: " + s);
}

void save_attr_table(const AttributeTable& t, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    for (std::size_t i = 0; i < t.object_ids.size(); ++i) {
        out << t.object_ids[i];
        for (const auto& cell : t.cells[i]) out << '\t' << cell;
        out << '\n';
    }
}

AttributeTable load_attr_table(const std::string& path, std::vector<Attribute> attrs) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    AttributeTable t;
    t.attributes = std::move(attrs);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto f = split(line, '\t');
        if (f.size() != t.attributes.size() + 1)
            throw ParseError("bad row in " + path);
        t.add_object(f[0], std::vector<std::string>(f.begin() + 1, f.end()));
    }
    return t;
}

std::string attrs_manifest(const std::vector<Attribute>& attrs) {
    std::string s;
    for (const auto& a : attrs) {
        if (!s.empty()) s += ',';
        s += a.name + ":" + kind_name(a.kind);
    }
    return s;
}

std::vector<Attribute> attrs_from_manifest(const std::string& s) {
    std::vector<Attribute> attrs;
    if (s.empty()) return attrs;
    for (const auto& part : split(s, ',')) {
        auto colon = part.rfind(':');
        if (colon == std::string::npos) throw ParseError("bad attribute spec: " + part);
        attrs.push_back({part.substr(0, colon), kind_from_name(part.substr(colon + 1))});
    }
    return attrs;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::string& dir) {
    fs::create_directories(dir);
    {
        std::ofstream out(dir + "/manifest.txt");
        if (!out) throw IoError("cannot write manifest in " + dir);
        out << "format=coupledrec-canonical-v1\n";
        out << "scale_min=" << fmt_double(ds.ratings.scale_min) << "\n";
        out << "scale_max=" << fmt_double(ds.ratings.scale_max) << "\n";
        out << "user_attrs=" << attrs_manifest(ds.users.attributes) << "\n";
        out << "item_attrs=" << attrs_manifest(ds.items.attributes) << "\n";
        for (const auto& [k, v] : ds.environment) out << "env." << k << "=" << v << "\n";
    }
    {
        std::ofstream out(dir + "/ratings.tsv");
        if (!out) throw IoError("cannot write ratings in " + dir);
        for (const auto& e : ds.ratings.entries)
            out << e.user_id << '\t' << e.item_id << '\t' << fmt_double(e.rating) << '\t'
                << e.timestamp << '\n';
    }
    save_attr_table(ds.users, dir + "/users.tsv");
    save_attr_table(ds.items, dir + "/items.tsv");
}

Dataset load_dataset(const std::string& dir) {
    std::ifstream in(dir + "/manifest.txt");
    if (!in) throw IoError("cannot read manifest in " + dir);
    Dataset ds;
    std::vector<Attribute> user_attrs, item_attrs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("bad manifest line: " + line);
        std::string key = line.substr(0, eq), val = line.substr(eq + 1);
        if (key == "format") {
            if (val != "coupledrec-canonical-v1")
                throw ParseError("unsupported canonical format: " + val);
        } else if (key == "scale_min") {
            ds.ratings.scale_min = std::strtod(val.c_str(), nullptr);
        } else if (key == "scale_max") {
            ds.ratings.scale_max = std::strtod(val.c_str(), nullptr);
        } else if (key == "user_attrs") {
            user_attrs = attrs_from_manifest(val);
        } else if (key == "item_attrs") {
            item_attrs = attrs_from_manifest(val);
        } else if (key.rfind("env.", 0) == 0) {
            ds.environment[key.substr(4)] = val;
        }
    }
    {
        std::ifstream rin(dir + "/ratings.tsv");
        if (!rin) throw IoError("cannot read ratings in " + dir);
        while (std::getline(rin, line)) {
            if (line.empty()) continue;
            auto f = split(line, '\t');
            if (f.size() != 4) throw ParseError("bad ratings row: " + line);
            RatingEntry e;
            e.user_id = f[0];
            e.item_id = f[1];
            if (!parse_double(f[2], e.rating) || !parse_ll(f[3], e.timestamp))
                throw ParseError("bad ratings row: " + line);
            ds.ratings.entries.push_back(std::move(e));
        }
    }
    ds.users = load_attr_table(dir + "/users.tsv", std::move(user_attrs));
    ds.items = load_attr_table(dir + "/items.tsv", std::move(item_attrs));
    return ds;
}

std::string dataset_digest(const Dataset& ds) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        h ^= 0xff;
        h *= 1099511628211ULL;
    };
    mix(fmt_double(ds.ratings.scale_min));
    mix(fmt_double(ds.ratings.scale_max));
    for (const auto& e : ds.ratings.entries) {
        mix(e.user_id);
        mix(e.item_id);
        mix(fmt_double(e.rating));
        mix(std::to_string(e.timestamp));
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace coupledrec
