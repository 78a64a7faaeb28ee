// Command-line front end: ingest datasets into the canonical layout, run
// reproducible experiments from a config file, and render comparison tables.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "coupledrec/config.hpp"
#include "coupledrec/coupling.hpp"
#include "coupledrec/dataset.hpp"
#include "coupledrec/eval.hpp"
#include "coupledrec/factorization.hpp"
#include "coupledrec/similarity.hpp"

namespace fs = std::filesystem;
using namespace coupledrec;

namespace {

// exit codes: 0 ok, 2 I/O, 3 validation, 4 config, 5 partial model failure
constexpr int kExitIo = 2;
constexpr int kExitValidation = 3;
constexpr int kExitConfig = 4;
constexpr int kExitPartial = 5;

std::vector<Attribute> parse_schema(const std::string& text) {
    std::vector<Attribute> schema;
    std::istringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        auto colon = part.rfind(':');
        if (colon == std::string::npos)
            throw ConfigError("schema entry '" + part + "' must be name:kind");
        std::string kind = part.substr(colon + 1);
        if (kind != "categorical" && kind != "numeric")
            throw ConfigError("schema kind must be categorical or numeric, got " + kind);
        schema.push_back({part.substr(0, colon),
                          kind == "numeric" ? AttrKind::Numeric : AttrKind::Categorical});
    }
    if (schema.empty()) throw ConfigError("empty schema");
    return schema;
}

int run_ingest(const std::string& format, const std::string& in_path,
               const std::string& out_dir, bool strict, double scale_min, double scale_max,
               const std::string& users_schema, const std::string& items_schema) {
    Dataset ds;
    if (format == "movielens100k") {
        ds = load_movielens_dataset(in_path, strict);
    } else if (format == "csv") {
        ds.ratings = parse_movielens_ratings(in_path + "/ratings.tsv", scale_min, scale_max);
        ds.users = parse_generic_csv(in_path + "/users.csv", parse_schema(users_schema));
        ds.items = parse_generic_csv(in_path + "/items.csv", parse_schema(items_schema));
        auto report = validate_dataset(ds);
        if (!report.dangling_users.empty() || !report.dangling_items.empty()) {
            if (strict)
                throw ValidationError("dangling ids: " +
                                      std::to_string(report.dangling_users.size()) +
                                      " users, " +
                                      std::to_string(report.dangling_items.size()) + " items");
            for (const auto& id : report.dangling_users)
                ds.users.add_object(id, std::vector<std::string>(ds.users.attribute_count()));
            for (const auto& id : report.dangling_items)
                ds.items.add_object(id, std::vector<std::string>(ds.items.attribute_count()));
        }
    } else {
        throw ConfigError("unknown format '" + format + "' (movielens100k or csv)");
    }
    save_dataset(ds, out_dir);
    {
        std::ofstream out(out_dir + "/validation_report.txt");
        out << validate_dataset(ds).to_text();
    }
    std::cout << "ingested " << ds.users.object_count() << " users, "
              << ds.items.object_count() << " items, " << ds.ratings.entries.size()
              << " ratings -> " << out_dir << "\n";
    return 0;
}

int run_experiment_cmd(const std::string& config_path) {
    ExperimentConfig cfg = ExperimentConfig::parse_file(config_path);
    if (const char* env = std::getenv("COUPLEDREC_OUTPUT_DIR")) cfg.output_dir = env;

    Dataset ds = load_dataset(cfg.dataset_path);
    for (const auto& spec : cfg.discretizations) {
        AttributeTable& table =
            ds.users.attribute_index(spec.attribute_name) >= 0 ? ds.users : ds.items;
        discretize(table, spec);
    }

    EvalReport report = run_experiment(ds, cfg.models, cfg.split);
    report.provenance["config"] = config_path;
    for (const auto& a : ds.users.attributes)
        report.provenance["user_attr." + a.name] =
            a.kind == AttrKind::Numeric ? "numeric" : "categorical";
    for (const auto& a : ds.items.attributes)
        report.provenance["item_attr." + a.name] =
            a.kind == AttrKind::Numeric ? "numeric" : "categorical";

    fs::create_directories(cfg.output_dir);
    {
        std::ofstream out(cfg.output_dir + "/expanded.config");
        out << cfg.to_text();
    }
    {
        std::ofstream out(cfg.output_dir + "/metrics.json");
        out << report.to_json();
    }
    {
        std::ofstream out(cfg.output_dir + "/report.txt");
        out << report.to_table();
    }

    // retrain and persist the factor-model artifacts at their chosen points
    for (const auto& mr : report.models) {
        if (mr.failed) continue;
        const ModelSpec* spec = nullptr;
        for (const auto& s : cfg.models)
            if ((s.name.empty() ? s.kind : s.name) == mr.name) spec = &s;
        if (!spec || (spec->kind != "mf" && spec->kind != "cmf")) continue;
        auto split = split_ratings(ds.ratings, cfg.split);
        auto view = RatingMatrixView::build(split.train);
        auto get = [&](const std::string& k, double d) {
            auto it = mr.hyperparameters.find(k);
            return it == mr.hyperparameters.end() ? d : it->second;
        };
        CmfConfig mc;
        mc.base.k = static_cast<int>(get("k", 20));
        mc.base.learning_rate = get("learning_rate", 0.005);
        mc.base.lambda = get("lambda", 0.02);
        mc.base.epochs = static_cast<int>(get("epochs", 30));
        mc.base.seed = static_cast<std::uint64_t>(get("seed", double(cfg.split.seed)));
        if (spec->kind == "mf") {
            train_mf(view, mc.base).save_binary(cfg.output_dir + "/" + mr.name + ".model");
        } else {
            mc.alpha = get("alpha", 0.1);
            mc.beta = get("beta", 0.1);
            mc.top_m = static_cast<int>(get("top_m", 20));
            ObjectSimMatrix su = build_object_sim_matrix(ds.users, Side::User);
            ObjectSimMatrix si = build_object_sim_matrix(ds.items, Side::Item);
            train_cmf(view, &su, &si, mc).save_binary(cfg.output_dir + "/" + mr.name +
                                                      ".model");
        }
    }

    std::cout << report.to_table();
    for (const auto& mr : report.models)
        if (mr.failed) {
            std::cerr << "model " << mr.name << " failed: " << mr.error << "\n";
            return kExitPartial;
        }
    return 0;
}

int run_report(const std::vector<std::string>& inputs, const std::string& csv_out) {
    if (inputs.empty()) throw ConfigError("at least one metrics file required");
    EvalReport merged;
    for (const auto& path : inputs) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open metrics file: " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        EvalReport r = EvalReport::from_json(ss.str());
        if (merged.models.empty()) {
            merged = r;
        } else {
            for (auto& m : r.models) merged.models.push_back(std::move(m));
        }
    }
    std::stable_sort(merged.models.begin(), merged.models.end(),
                     [](const ModelReport& a, const ModelReport& b) {
                         if (a.failed != b.failed) return !a.failed;
                         return a.mae < b.mae;
                     });
    std::cout << merged.to_table(false);
    if (!csv_out.empty()) {
        std::ofstream out(csv_out);
        if (!out) throw IoError("cannot write " + csv_out);
        out << "model,mae,rmse,prediction_count,fallback_count\n";
        for (const auto& m : merged.models) {
            if (m.failed) continue;
            out << m.name << ',' << m.mae << ',' << m.rmse << ',' << m.prediction_count
                << ',' << m.fallback_count << "\n";
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"coupledrec: non-IID recommendation toolkit"};
    app.require_subcommand(1);

    auto* ingest = app.add_subcommand("ingest", "parse a dataset into the canonical layout");
    std::string format = "movielens100k", in_path, out_dir;
    bool strict = false;
    double scale_min = 1.0, scale_max = 5.0;
    std::string users_schema, items_schema;
    ingest->add_option("--format", format, "movielens100k or csv");
    ingest->add_option("--in", in_path, "input directory")->required();
    ingest->add_option("--out", out_dir, "output canonical directory")->required();
    ingest->add_flag("--strict", strict, "treat dangling ids as an error");
    ingest->add_option("--scale-min", scale_min);
    ingest->add_option("--scale-max", scale_max);
    ingest->add_option("--users-schema", users_schema, "csv: name:kind,... for users.csv");
    ingest->add_option("--items-schema", items_schema, "csv: name:kind,... for items.csv");

    auto* run = app.add_subcommand("run", "run an experiment from a config file");
    std::string config_path;
    run->add_option("--config", config_path, "experiment config file")->required();

    auto* report = app.add_subcommand("report", "render a comparison table from metrics files");
    std::vector<std::string> report_inputs;
    std::string csv_out;
    report->add_option("files", report_inputs, "metrics.json files");
    report->add_option("--csv", csv_out, "also write a csv export");

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest->parsed())
            return run_ingest(format, in_path, out_dir, strict, scale_min, scale_max,
                              users_schema, items_schema);
        if (run->parsed()) return run_experiment_cmd(config_path);
        if (report->parsed()) return run_report(report_inputs, csv_out);
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kExitIo;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return 0;
}
