#include "coupledrec/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace coupledrec {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<double> parse_number_list(const std::string& s, const std::string& key) {
    std::vector<double> out;
    std::istringstream ss(s);
    std::string part;
    while (std::getline(ss, part, ',')) {
        part = trim(part);
        if (part.empty()) continue;
        char* end = nullptr;
        double v = std::strtod(part.c_str(), &end);
        if (end != part.c_str() + part.size())
            throw ConfigError("non-numeric value '" + part + "' for key " + key);
        out.push_back(v);
    }
    if (out.empty()) throw ConfigError("empty value list for key " + key);
    return out;
}

std::string fmt_num(double v) {
    if (v == static_cast<double>(static_cast<long long>(v)) && std::abs(v) < 1e15)
        return std::to_string(static_cast<long long>(v));
    for (int prec = 1; prec <= 17; ++prec) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) return buf;
    }
    return "0";
}

}  // namespace

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str());
}

ExperimentConfig ExperimentConfig::parse_text(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    DiscretizationSpec* disc = nullptr;
    ModelSpec* model = nullptr;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        auto hash = line.find('#');
        if (hash != std::string::npos) line = trim(line.substr(0, hash));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("bad section header at line " + std::to_string(lineno));
            section = line.substr(1, line.size() - 2);
            disc = nullptr;
            model = nullptr;
            if (section.rfind("discretize.", 0) == 0) {
                cfg.discretizations.emplace_back();
                disc = &cfg.discretizations.back();
                disc->attribute_name = section.substr(11);
            } else if (section.rfind("model.", 0) == 0) {
                cfg.models.emplace_back();
                model = &cfg.models.back();
                model->name = section.substr(6);
                model->kind = model->name;  // overridable via kind=
            } else if (section != "dataset" && section != "split" && section != "output") {
                throw ConfigError("unknown section [" + section + "]");
            }
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected key = value at line " + std::to_string(lineno));
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (section == "dataset") {
            if (key == "path")
                cfg.dataset_path = val;
            else
                throw ConfigError("unknown dataset key: " + key);
        } else if (section == "split") {
            if (key == "train_fraction")
                cfg.split.train_fraction = std::strtod(val.c_str(), nullptr);
            else if (key == "validation_fraction")
                cfg.split.validation_fraction = std::strtod(val.c_str(), nullptr);
            else if (key == "seed")
                cfg.split.seed = std::strtoull(val.c_str(), nullptr, 10);
            else if (key == "stratification") {
                if (val == "per_user")
                    cfg.split.stratification = Stratification::PerUser;
                else if (val == "none")
                    cfg.split.stratification = Stratification::None;
                else
                    throw ConfigError("unknown stratification: " + val);
            } else {
                throw ConfigError("unknown split key: " + key);
            }
        } else if (section == "output") {
            if (key == "dir")
                cfg.output_dir = val;
            else
                throw ConfigError("unknown output key: " + key);
        } else if (disc) {
            if (key == "strategy") {
                if (val == "equal-width")
                    disc->strategy = BinStrategy::EqualWidth;
                else if (val == "equal-frequency")
                    disc->strategy = BinStrategy::EqualFrequency;
                else if (val == "explicit")
                    disc->strategy = BinStrategy::ExplicitCuts;
                else
                    throw ConfigError("unknown discretization strategy: " + val);
            } else if (key == "bins") {
                disc->bin_count = static_cast<int>(std::strtol(val.c_str(), nullptr, 10));
            } else if (key == "cuts") {
                disc->cut_points = parse_number_list(val, key);
            } else {
                throw ConfigError("unknown discretize key: " + key);
            }
        } else if (model) {
            if (key == "kind")
                model->kind = val;
            else
                model->grid[key] = parse_number_list(val, key);
        } else {
            throw ConfigError("key outside any section at line " + std::to_string(lineno));
        }
    }
    if (cfg.dataset_path.empty()) throw ConfigError("missing [dataset] path");
    if (cfg.models.empty()) throw ConfigError("no [model.*] sections");
    if (cfg.output_dir.empty()) throw ConfigError("missing [output] dir");
    return cfg;
}

std::string ExperimentConfig::to_text() const {
    std::ostringstream os;
    os << "[dataset]\npath = " << dataset_path << "\n\n";
    os << "[split]\n";
    os << "train_fraction = " << fmt_num(split.train_fraction) << "\n";
    os << "validation_fraction = " << fmt_num(split.validation_fraction) << "\n";
    os << "seed = " << split.seed << "\n";
    os << "stratification = "
       << (split.stratification == Stratification::PerUser ? "per_user" : "none") << "\n\n";
    for (const auto& d : discretizations) {
        os << "[discretize." << d.attribute_name << "]\n";
        os << "strategy = "
           << (d.strategy == BinStrategy::EqualWidth
                   ? "equal-width"
                   : d.strategy == BinStrategy::EqualFrequency ? "equal-frequency"
                                                               : "explicit")
           << "\n";
        if (d.strategy == BinStrategy::ExplicitCuts) {
            os << "cuts = ";
            for (std::size_t i = 0; i < d.cut_points.size(); ++i)
                os << (i ? "," : "") << fmt_num(d.cut_points[i]);
            os << "\n";
        } else {
            os << "bins = " << d.bin_count << "\n";
        }
        os << "\n";
    }
    for (const auto& m : models) {
        os << "[model." << (m.name.empty() ? m.kind : m.name) << "]\n";
        os << "kind = " << m.kind << "\n";
        for (const auto& [key, values] : m.grid) {
            os << key << " = ";
            for (std::size_t i = 0; i < values.size(); ++i)
                os << (i ? "," : "") << fmt_num(values[i]);
            os << "\n";
        }
        os << "\n";
    }
    os << "[output]\ndir = " << output_dir << "\n";
    return os.str();
}

}  // namespace coupledrec
