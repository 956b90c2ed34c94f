#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "pairfuse/checkpoint.hpp"
#include "pairfuse/runner.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pairfuse;

namespace {

// Dot-path overrides: --set train.epochs=30 rewrites the config tree before
// it is parsed. Values parse as JSON when possible, else as strings.
void apply_override(json& root, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw CLI::ValidationError("--set expects key=value, got: " + assignment);
    const std::string path = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);

    json* node = &root;
    std::size_t begin = 0;
    while (true) {
        const auto dot = path.find('.', begin);
        const std::string key = path.substr(begin, dot == std::string::npos ? dot : dot - begin);
        if (dot == std::string::npos) {
            json value;
            try {
                value = json::parse(raw);
            } catch (const json::parse_error&) {
                value = raw;
            }
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        begin = dot + 1;
    }
}

json load_config(const std::string& path, const std::vector<std::string>& overrides) {
    json j = json::object();
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw CLI::ValidationError("cannot open config: " + path);
        j = json::parse(in);
    }
    for (const auto& o : overrides) apply_override(j, o);
    return j;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    out << text;
}

int cmd_synth(const json& cfg, const std::string& out_dir) {
    const SynthConfig sc = synth_config_from_json(cfg.dump());
    SynthResult result = generate_synthetic(sc, out_dir);
    write_text(out_dir + "/synth_config.json", synth_config_to_json(sc) + "\n");
    std::cout << "manifest: " << result.manifest_path << "\n"
              << "objects:  " << result.num_objects << "\n"
              << "images:   " << result.num_images << "\n";
    return 0;
}

int cmd_pair(const std::string& manifest, const std::string& use_case_id, std::uint64_t seed,
             const std::string& out_path) {
    auto records = load_manifest(manifest);
    std::vector<std::string> classes;
    if (!use_case_id.empty()) {
        classes = use_case(use_case_id).classes;
    } else {
        classes = class_vocabulary(records);
    }
    ImageStore store(fs::path(manifest).parent_path().string());
    SampleSet set = build_samples(records, store, classes, seed);

    auto count_per_class = [&](const std::vector<Sample>& samples) {
        std::vector<int> counts(classes.size(), 0);
        for (const auto& s : samples) ++counts[s.label_index];
        return counts;
    };
    auto print_split = [&](const std::string& name, const std::vector<Sample>& samples) {
        std::cout << name << ": " << samples.size() << " samples (";
        const auto counts = count_per_class(samples);
        for (std::size_t i = 0; i < classes.size(); ++i)
            std::cout << (i ? ", " : "") << classes[i] << "=" << counts[i];
        std::cout << ")\n";
    };
    print_split("train", set.train);
    print_split("val", set.val);
    print_split("test", set.test);
    std::cout << "train missing pool: " << set.train_missing_pool.size() << " samples\n";
    std::cout << "val missing pool:   " << set.val_missing_pool.size() << " samples\n";

    if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::trunc);
        auto dump = [&](const std::string& split, const std::vector<Sample>& samples) {
            for (const auto& s : samples) {
                json j;
                j["split"] = split;
                j["object_id"] = s.object_id;
                j["class"] = classes[s.label_index];
                j["facade"] = s.facade_ref;
                j["interior"] = s.interior_ref;
                j["facade_present"] = s.facade_present;
                j["interior_present"] = s.interior_present;
                out << j.dump() << "\n";
            }
        };
        dump("train", set.train);
        dump("val", set.val);
        dump("test", set.test);
        dump("train_missing_pool", set.train_missing_pool);
        dump("val_missing_pool", set.val_missing_pool);
        std::cout << "pairs written to " << out_path << "\n";
    }
    return 0;
}

int cmd_train(const json& cfg) {
    const std::string manifest = cfg.at("manifest").get<std::string>();
    const std::string out_dir = cfg.value("out_dir", std::string("run"));
    const auto mc = modality_config_from_string(cfg.value("modality_config", std::string("complete")));
    const auto arch = architecture_from_string(cfg.value("architecture", std::string("late")));
    const auto backbone_kind =
        backbone_kind_from_string(cfg.value("backbone", std::string("desknet")));
    const std::uint64_t seed = cfg.value("seed", std::uint64_t{0});

    auto records = load_manifest(manifest);
    std::vector<std::string> classes = cfg.contains("use_case")
                                           ? use_case(cfg.at("use_case").get<std::string>()).classes
                                           : cfg.contains("classes")
                                                 ? cfg.at("classes").get<std::vector<std::string>>()
                                                 : class_vocabulary(records);
    ImageStore store(fs::path(manifest).parent_path().string());
    SampleSet set = build_samples(records, store, classes, hash_combine(seed, "pairing"));

    TrainConfig tc;
    if (cfg.contains("train")) tc = train_config_from_json(cfg.at("train").dump());
    tc.seed = seed;

    FusionModel model = build_model(arch, backbone_kind == BackboneKind::desknet
                                              ? desknet_config()
                                              : fullscale_b0_config(),
                                    static_cast<int>(classes.size()), seed, classes);

    auto train_samples = apply_modality_config(
        set.train, mc, mc == ModalityConfig::complete_plus_missing ? &set.train_missing_pool : nullptr,
        seed);
    auto val_samples = apply_modality_config(
        set.val, mc, mc == ModalityConfig::complete_plus_missing ? &set.val_missing_pool : nullptr,
        seed);

    fs::create_directories(out_dir);
    {
        json resolved = cfg;
        resolved["seed"] = seed;
        resolved["classes"] = classes;
        resolved["train"] = json::parse(train_config_json(tc));
        write_text(out_dir + "/config.json", resolved.dump(2) + "\n");
    }

    TrainResult result = train(model, train_samples, val_samples, tc, out_dir);
    std::cout << "status:        " << result.status << "\n";
    if (result.status != "done") {
        std::cout << "message:       " << result.message << "\n";
        return 1;
    }
    std::cout << "best_epoch:    " << result.best_epoch << "\n"
              << "best_val_loss: " << result.best_val_loss << "\n"
              << "checkpoint:    " << result.checkpoint_path << "\n";
    return 0;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& manifest,
             const std::string& variant_arg, const std::string& out_path,
             const std::string& grid_path) {
    CheckpointMeta meta;
    FusionModel model = load_checkpoint(checkpoint_path, &meta);

    auto records = load_manifest(manifest);
    ImageStore store(fs::path(manifest).parent_path().string());
    SampleSet set = build_samples(records, store,
                                  model.class_names.empty() ? class_vocabulary(records)
                                                            : model.class_names,
                                  /*seed=*/0);
    if (set.test.empty()) throw std::runtime_error("manifest has no test-split samples");

    std::vector<TestVariant> variants;
    if (variant_arg == "all") {
        variants = {TestVariant::test_c, TestVariant::test_f, TestVariant::test_i};
    } else {
        variants = {test_variant_from_string(variant_arg)};
    }

    std::ofstream out;
    if (!out_path.empty()) out.open(out_path, std::ios::trunc);
    for (TestVariant v : variants) {
        MetricsReport report = evaluate(model, set.test, v);
        json line;
        line["variant"] = to_string(v);
        line["macro_f1"] = report.macro_f1;
        line["per_class_f1"] = report.per_class_f1;
        line["samples"] = report.confusion.total();
        std::cout << line.dump() << "\n";
        if (out.is_open()) out << line.dump() << "\n";

        if (!grid_path.empty()) {
            const auto variant_samples = make_test_variant(set.test, v);
            std::vector<int> predictions;
            predictions.reserve(variant_samples.size());
            for (const auto& s : variant_samples)
                predictions.push_back(predict(model, s.facade, s.interior).predicted_class);
            export_confusion_grid(report.confusion, variant_samples, predictions,
                                  grid_path + "." + to_string(v) + ".json");
        }
    }
    return 0;
}

int cmd_matrix(const json& cfg_json, const std::string& out_dir) {
    MatrixConfig cfg = matrix_config_from_json(cfg_json.dump());
    MatrixResult result = run_matrix(cfg, out_dir);
    write_report(result.records, out_dir + "/report.tsv");
    int failed = 0;
    for (const auto& r : result.records)
        if (r.status != "done") ++failed;
    std::cout << "runs executed: " << result.executed << "\n"
              << "runs skipped:  " << result.skipped << "\n"
              << "runs failed:   " << failed << "\n"
              << "report:        " << out_dir << "/report.tsv\n";
    return failed == 0 ? 0 : 1;
}

int cmd_report(const std::string& records_dir, const std::string& out_path) {
    auto records = load_run_records(records_dir);
    if (out_path.empty()) {
        std::cout << report(records);
    } else {
        write_report(records, out_path);
        std::cout << "report written to " << out_path << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pairfuse: two-modality fusion classification experiments"};
    app.require_subcommand(1);

    std::string config_path, out_dir, manifest, use_case_id, checkpoint_path;
    std::string variant = "all", out_path, grid_path, records_dir;
    std::uint64_t seed = 0;
    std::vector<std::string> overrides;

    auto* synth = app.add_subcommand("synth", "generate a synthetic two-modality dataset");
    synth->add_option("--config", config_path, "synth config JSON");
    synth->add_option("--set", overrides, "override config values (key=value)");
    synth->add_option("--out", out_dir, "output directory")->required();

    auto* pair = app.add_subcommand("pair", "build and inspect samples from a manifest");
    pair->add_option("--manifest", manifest, "dataset manifest")->required();
    pair->add_option("--use-case", use_case_id, "UC1, UC2 or UC3 (class vocabulary)");
    pair->add_option("--seed", seed, "pairing seed");
    pair->add_option("--out", out_path, "write pair listing (JSONL)");

    auto* train = app.add_subcommand("train", "run a single training run");
    train->add_option("--config", config_path, "run config JSON")->required();
    train->add_option("--set", overrides, "override config values (key=value)");

    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a test set");
    eval->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();
    eval->add_option("--manifest", manifest, "dataset manifest")->required();
    eval->add_option("--variant", variant, "test_c, test_f, test_i or all");
    eval->add_option("--out", out_path, "write metrics (JSONL)");
    eval->add_option("--grid", grid_path, "confusion grid path prefix");

    auto* matrix = app.add_subcommand("matrix", "run an experiment matrix");
    matrix->add_option("--config", config_path, "matrix config JSON")->required();
    matrix->add_option("--set", overrides, "override config values (key=value)");
    matrix->add_option("--out", out_dir, "output directory")->required();

    auto* rep = app.add_subcommand("report", "emit the results table from run records");
    rep->add_option("--records", records_dir, "matrix output directory")->required();
    rep->add_option("--out", out_path, "report file (stdout when omitted)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return cmd_synth(load_config(config_path, overrides), out_dir);
        if (pair->parsed()) return cmd_pair(manifest, use_case_id, seed, out_path);
        if (train->parsed()) return cmd_train(load_config(config_path, overrides));
        if (eval->parsed()) return cmd_eval(checkpoint_path, manifest, variant, out_path, grid_path);
        if (matrix->parsed()) return cmd_matrix(load_config(config_path, overrides), out_dir);
        if (rep->parsed()) return cmd_report(records_dir, out_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
