#include "pairfuse/runner.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "pairfuse/checkpoint.hpp"

namespace pairfuse {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t derive_run_seed(std::uint64_t global_seed, const std::string& use_case,
                              ModalityConfig mc, ArchitectureKind arch, int repeat) {
    std::string key = std::to_string(global_seed) + ":" + use_case + ":" + to_string(mc) + ":" +
                      to_string(arch) + ":" + std::to_string(repeat);
    return fnv1a(key);
}

std::vector<TestVariant> variants_for(ModalityConfig mc) {
    switch (mc) {
        case ModalityConfig::facade_only: return {TestVariant::test_f};
        case ModalityConfig::interior_only: return {TestVariant::test_i};
        default:
            return {TestVariant::test_c, TestVariant::test_f, TestVariant::test_i};
    }
}

namespace {

json record_to_json(const RunRecord& r) {
    json j;
    j["use_case"] = r.use_case;
    j["modality_config"] = r.modality_config;
    j["architecture"] = r.architecture;
    j["repeat"] = r.repeat;
    j["seed"] = r.seed;
    j["classes"] = r.classes;
    j["best_epoch"] = r.best_epoch;
    j["best_val_loss"] = r.best_val_loss;
    j["wall_clock_sec"] = r.wall_clock_sec;
    j["status"] = r.status;
    if (!r.message.empty()) j["message"] = r.message;
    json m = json::object();
    for (const auto& [variant, vm] : r.metrics)
        m[variant] = {{"macro_f1", vm.macro_f1}, {"per_class_f1", vm.per_class_f1}};
    j["metrics"] = m;
    return j;
}

RunRecord record_from_json(const json& j) {
    RunRecord r;
    r.use_case = j.at("use_case").get<std::string>();
    r.modality_config = j.at("modality_config").get<std::string>();
    r.architecture = j.at("architecture").get<std::string>();
    r.repeat = j.at("repeat").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.classes = j.at("classes").get<std::vector<std::string>>();
    r.best_epoch = j.at("best_epoch").get<int>();
    r.best_val_loss = j.at("best_val_loss").get<double>();
    r.wall_clock_sec = j.at("wall_clock_sec").get<double>();
    r.status = j.at("status").get<std::string>();
    if (j.contains("message")) r.message = j.at("message").get<std::string>();
    for (const auto& [variant, vm] : j.at("metrics").items()) {
        VariantMetrics v;
        v.macro_f1 = vm.at("macro_f1").get<double>();
        v.per_class_f1 = vm.at("per_class_f1").get<std::vector<double>>();
        r.metrics[variant] = v;
    }
    return r;
}

std::string run_dir_for(const std::string& out_dir, const std::string& uc, ModalityConfig mc,
                        ArchitectureKind arch, int repeat) {
    return out_dir + "/" + uc + "/" + to_string(mc) + "/" + to_string(arch) + "/rep" +
           std::to_string(repeat);
}

struct LoadedUseCase {
    std::string id;
    std::vector<std::string> classes;
    SampleSet samples;
};

LoadedUseCase load_use_case(const UseCaseSource& src, const MatrixConfig& cfg,
                            const std::string& out_dir) {
    LoadedUseCase uc;
    uc.id = src.id;

    std::string manifest = src.manifest;
    if (src.synth) {
        const std::string dataset_dir = out_dir + "/" + src.id + "/dataset";
        manifest = dataset_dir + "/manifest.jsonl";
        if (!fs::exists(manifest)) generate_synthetic(*src.synth, dataset_dir);
    }
    if (manifest.empty()) throw std::invalid_argument("use case " + src.id + " has no dataset source");

    auto records = load_manifest(manifest);
    uc.classes = !src.classes.empty() ? src.classes : class_vocabulary(records);

    ImageStore store(fs::path(manifest).parent_path().string());
    store.preload(records);
    uc.samples = build_samples(records, store, uc.classes,
                               hash_combine(cfg.global_seed, src.id + "/pairing"));
    return uc;
}

}  // namespace

MatrixResult run_matrix(const MatrixConfig& cfg, const std::string& out_dir) {
    fs::create_directories(out_dir);
    {
        std::ofstream out(out_dir + "/matrix_config.json", std::ios::trunc);
        out << matrix_config_to_json(cfg) << "\n";
    }

    MatrixResult result;
    for (const auto& src : cfg.use_cases) {
        std::optional<LoadedUseCase> uc;  // loaded lazily so fully resumed matrices stay cheap
        for (ModalityConfig mc : cfg.modality_configs) {
            for (ArchitectureKind arch : cfg.architectures) {
                for (int repeat : cfg.repeats) {
                    const std::string run_dir = run_dir_for(out_dir, src.id, mc, arch, repeat);
                    const std::string record_path = run_dir + "/record.json";
                    if (fs::exists(record_path)) {
                        std::ifstream in(record_path);
                        RunRecord existing = record_from_json(json::parse(in));
                        if (existing.status == "done") {
                            result.records.push_back(std::move(existing));
                            ++result.skipped;
                            continue;
                        }
                    }
                    if (!uc) uc = load_use_case(src, cfg, out_dir);

                    RunRecord rec;
                    rec.use_case = src.id;
                    rec.modality_config = to_string(mc);
                    rec.architecture = to_string(arch);
                    rec.repeat = repeat;
                    rec.seed = derive_run_seed(cfg.global_seed, src.id, mc, arch, repeat);
                    rec.classes = uc->classes;

                    fs::create_directories(run_dir);
                    TrainConfig tc = cfg.train;
                    tc.seed = rec.seed;
                    {
                        json resolved;
                        resolved["use_case"] = src.id;
                        resolved["modality_config"] = to_string(mc);
                        resolved["architecture"] = to_string(arch);
                        resolved["repeat"] = repeat;
                        resolved["seed"] = rec.seed;
                        resolved["backbone"] = to_string(cfg.backbone);
                        resolved["classes"] = uc->classes;
                        resolved["train"] = json::parse(train_config_json(tc));
                        std::ofstream out(run_dir + "/config.json", std::ios::trunc);
                        out << resolved.dump(2) << "\n";
                    }

                    const auto t0 = std::chrono::steady_clock::now();
                    try {
                        const BackboneConfig backbone = cfg.backbone == BackboneKind::desknet
                                                            ? desknet_config()
                                                            : fullscale_b0_config();
                        FusionModel model = build_model(arch, backbone,
                                                        static_cast<int>(uc->classes.size()),
                                                        rec.seed, uc->classes);

                        auto train_samples = apply_modality_config(
                            uc->samples.train, mc,
                            mc == ModalityConfig::complete_plus_missing ? &uc->samples.train_missing_pool
                                                                        : nullptr,
                            rec.seed);
                        // Validation mirrors the training configuration.
                        auto val_samples = apply_modality_config(
                            uc->samples.val, mc,
                            mc == ModalityConfig::complete_plus_missing ? &uc->samples.val_missing_pool
                                                                        : nullptr,
                            rec.seed);

                        TrainResult tr = train(model, train_samples, val_samples, tc, run_dir);
                        rec.best_epoch = tr.best_epoch;
                        rec.best_val_loss = tr.best_val_loss;
                        rec.status = tr.status;
                        rec.message = tr.message;

                        if (tr.status == "done") {
                            std::ofstream metrics_out(run_dir + "/metrics.jsonl", std::ios::trunc);
                            for (TestVariant variant : variants_for(mc)) {
                                MetricsReport mr = evaluate(model, uc->samples.test, variant,
                                                            &uc->classes);
                                VariantMetrics vm{mr.macro_f1, mr.per_class_f1};
                                rec.metrics[to_string(variant)] = vm;

                                json line;
                                line["use_case"] = src.id;
                                line["modality_config"] = to_string(mc);
                                line["architecture"] = to_string(arch);
                                line["seed"] = rec.seed;
                                line["variant"] = to_string(variant);
                                line["macro_f1"] = mr.macro_f1;
                                line["per_class_f1"] = mr.per_class_f1;
                                metrics_out << line.dump() << "\n";

                                // Confusion grid for qualitative inspection.
                                std::vector<int> predictions;
                                const auto variant_samples = make_test_variant(uc->samples.test, variant);
                                predictions.reserve(variant_samples.size());
                                for (const auto& s : variant_samples)
                                    predictions.push_back(predict(model, s.facade, s.interior).predicted_class);
                                export_confusion_grid(mr.confusion, variant_samples, predictions,
                                                      run_dir + "/confusion_" + to_string(variant) + ".json");
                            }
                        }
                    } catch (const std::exception& e) {
                        rec.status = "failed";
                        rec.message = e.what();
                    }
                    rec.wall_clock_sec =
                        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

                    {
                        std::ofstream out(record_path, std::ios::trunc);
                        out << record_to_json(rec).dump(2) << "\n";
                    }
                    result.records.push_back(std::move(rec));
                    ++result.executed;
                }
            }
        }
    }
    return result;
}

std::vector<RunRecord> load_run_records(const std::string& out_dir) {
    std::vector<RunRecord> records;
    std::vector<std::string> paths;
    for (const auto& entry : fs::recursive_directory_iterator(out_dir))
        if (entry.is_regular_file() && entry.path().filename() == "record.json")
            paths.push_back(entry.path().string());
    std::sort(paths.begin(), paths.end());
    for (const auto& p : paths) {
        std::ifstream in(p);
        records.push_back(record_from_json(json::parse(in)));
    }
    return records;
}

namespace {

const std::vector<std::string> kRowConfigs = {"complete", "facade_only", "interior_only",
                                              "complete_plus_missing"};
const std::vector<std::string> kRowArchs = {"early", "late", "intermediate"};
const std::vector<std::string> kColumns = {"test_c", "test_f", "test_i"};

bool cell_applicable(const std::string& mc, const std::string& variant) {
    if (mc == "facade_only") return variant == "test_f";
    if (mc == "interior_only") return variant == "test_i";
    return true;
}

}  // namespace

std::string report(const std::vector<RunRecord>& records) {
    // Preserve first-seen use-case order.
    std::vector<std::string> use_cases;
    for (const auto& r : records)
        if (std::find(use_cases.begin(), use_cases.end(), r.use_case) == use_cases.end())
            use_cases.push_back(r.use_case);

    std::ostringstream out;
    if (use_cases.empty()) {
        out << "modality_config\tarchitecture\ttest_c\ttest_f\ttest_i\tbest\n";
        return out.str();
    }
    for (const auto& uc : use_cases) {
        int num_classes = 0;
        for (const auto& r : records)
            if (r.use_case == uc) num_classes = static_cast<int>(r.classes.size());
        const double rb = num_classes > 0 ? 100.0 / num_classes : 0.0;
        char rb_buf[32];
        std::snprintf(rb_buf, sizeof(rb_buf), "%.0f%%", rb);
        out << "# use_case: " << uc << " (RB = " << rb_buf << ")\n";
        out << "modality_config\tarchitecture\ttest_c\ttest_f\ttest_i\tbest\n";

        // Cell means for the column-maximum flags.
        std::map<std::string, std::map<std::string, double>> col_means;  // variant -> row key -> mean
        auto row_key = [](const std::string& mc, const std::string& arch) { return mc + "/" + arch; };
        for (const auto& mc : kRowConfigs) {
            for (const auto& arch : kRowArchs) {
                for (const auto& variant : kColumns) {
                    if (!cell_applicable(mc, variant)) continue;
                    std::vector<double> scores;
                    for (const auto& r : records)
                        if (r.use_case == uc && r.modality_config == mc && r.architecture == arch &&
                            r.status == "done" && r.metrics.count(variant))
                            scores.push_back(r.metrics.at(variant).macro_f1);
                    if (!scores.empty())
                        col_means[variant][row_key(mc, arch)] = aggregate_runs(scores).mean;
                }
            }
        }
        std::map<std::string, double> col_max;
        for (const auto& [variant, rows] : col_means)
            for (const auto& [key, mean] : rows) {
                auto it = col_max.find(variant);
                if (it == col_max.end() || mean > it->second) col_max[variant] = mean;
            }

        for (const auto& mc : kRowConfigs) {
            for (const auto& arch : kRowArchs) {
                out << mc << "\t" << arch;
                std::vector<std::string> best_flags;
                for (const auto& variant : kColumns) {
                    out << "\t";
                    if (!cell_applicable(mc, variant)) continue;
                    std::vector<double> scores;
                    for (const auto& r : records)
                        if (r.use_case == uc && r.modality_config == mc && r.architecture == arch &&
                            r.status == "done" && r.metrics.count(variant))
                            scores.push_back(r.metrics.at(variant).macro_f1);
                    if (scores.empty()) continue;
                    const Aggregate agg = aggregate_runs(scores);
                    out << agg.formatted;
                    if (col_max.count(variant) && agg.mean == col_max.at(variant))
                        best_flags.push_back(variant);
                }
                out << "\t";
                for (std::size_t i = 0; i < best_flags.size(); ++i)
                    out << (i ? "," : "") << best_flags[i];
                out << "\n";
            }
        }
        out << "\n";
    }
    return out.str();
}

void write_report(const std::vector<RunRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open report for writing: " + path);
    out << report(records);
}

// ---------------------------------------------------------------------------
// Config JSON
// ---------------------------------------------------------------------------

namespace {

json synth_to_json(const SynthConfig& c) {
    json j;
    j["num_classes"] = c.num_classes;
    j["image_size"] = c.image_size;
    j["train_objects"] = c.train_objects;
    j["val_objects"] = c.val_objects;
    j["test_objects"] = c.test_objects;
    j["train_incomplete"] = c.train_incomplete;
    j["val_incomplete"] = c.val_incomplete;
    j["facade_cue_fidelity"] = c.facade_cue_fidelity;
    j["interior_cue_fidelity"] = c.interior_cue_fidelity;
    j["facade_images_min"] = c.facade_images_min;
    j["facade_images_max"] = c.facade_images_max;
    j["interior_images_min"] = c.interior_images_min;
    j["interior_images_max"] = c.interior_images_max;
    j["noise_level"] = c.noise_level;
    j["seed"] = c.seed;
    return j;
}

SynthConfig synth_from_json(const json& j) {
    SynthConfig c;
    c.num_classes = j.value("num_classes", c.num_classes);
    c.image_size = j.value("image_size", c.image_size);
    c.train_objects = j.value("train_objects", c.train_objects);
    c.val_objects = j.value("val_objects", c.val_objects);
    c.test_objects = j.value("test_objects", c.test_objects);
    c.train_incomplete = j.value("train_incomplete", c.train_incomplete);
    c.val_incomplete = j.value("val_incomplete", c.val_incomplete);
    c.facade_cue_fidelity = j.value("facade_cue_fidelity", c.facade_cue_fidelity);
    c.interior_cue_fidelity = j.value("interior_cue_fidelity", c.interior_cue_fidelity);
    c.facade_images_min = j.value("facade_images_min", c.facade_images_min);
    c.facade_images_max = j.value("facade_images_max", c.facade_images_max);
    c.interior_images_min = j.value("interior_images_min", c.interior_images_min);
    c.interior_images_max = j.value("interior_images_max", c.interior_images_max);
    c.noise_level = j.value("noise_level", c.noise_level);
    c.seed = j.value("seed", c.seed);
    return c;
}

json train_to_json(const TrainConfig& c) {
    json j;
    j["epochs"] = c.epochs;
    j["batch_size"] = c.batch_size;
    j["learning_rate"] = c.learning_rate;
    j["optimizer"] = "adam";
    j["loss"] = "categorical_cross_entropy";
    j["seed"] = c.seed;
    j["augment"] = c.augment;
    return j;
}

TrainConfig train_from_json(const json& j) {
    TrainConfig c;
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    const std::string opt = j.value("optimizer", std::string("adam"));
    if (opt != "adam") throw std::invalid_argument("unsupported optimizer: " + opt);
    const std::string loss = j.value("loss", std::string("categorical_cross_entropy"));
    if (loss != "categorical_cross_entropy") throw std::invalid_argument("unsupported loss: " + loss);
    c.seed = j.value("seed", c.seed);
    c.augment = j.value("augment", c.augment);
    return c;
}

}  // namespace

std::string train_config_json(const TrainConfig& cfg) { return train_to_json(cfg).dump(); }

SynthConfig synth_config_from_json(const std::string& json_text) {
    return synth_from_json(json::parse(json_text));
}

TrainConfig train_config_from_json(const std::string& json_text) {
    return train_from_json(json::parse(json_text));
}

MatrixConfig matrix_config_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return matrix_config_from_json(text);
}

MatrixConfig matrix_config_from_json(const std::string& json_text) {
    const json j = json::parse(json_text);

    MatrixConfig cfg;
    for (const auto& u : j.at("use_cases")) {
        UseCaseSource src;
        src.id = u.at("id").get<std::string>();
        if (u.contains("manifest")) src.manifest = u.at("manifest").get<std::string>();
        if (u.contains("synth")) src.synth = synth_from_json(u.at("synth"));
        if (u.contains("classes")) src.classes = u.at("classes").get<std::vector<std::string>>();
        cfg.use_cases.push_back(std::move(src));
    }
    if (j.contains("modality_configs")) {
        cfg.modality_configs.clear();
        for (const auto& s : j.at("modality_configs"))
            cfg.modality_configs.push_back(modality_config_from_string(s.get<std::string>()));
    }
    if (j.contains("architectures")) {
        cfg.architectures.clear();
        for (const auto& s : j.at("architectures"))
            cfg.architectures.push_back(architecture_from_string(s.get<std::string>()));
    }
    if (j.contains("repeats")) cfg.repeats = j.at("repeats").get<std::vector<int>>();
    cfg.global_seed = j.value("global_seed", cfg.global_seed);
    if (j.contains("backbone"))
        cfg.backbone = backbone_kind_from_string(j.at("backbone").get<std::string>());
    if (j.contains("train")) cfg.train = train_from_json(j.at("train"));
    return cfg;
}

SynthConfig synth_config_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    return synth_from_json(json::parse(in));
}



std::string matrix_config_to_json(const MatrixConfig& cfg) {
    json j;
    json ucs = json::array();
    for (const auto& u : cfg.use_cases) {
        json uj;
        uj["id"] = u.id;
        if (!u.manifest.empty()) uj["manifest"] = u.manifest;
        if (u.synth) uj["synth"] = synth_to_json(*u.synth);
        if (!u.classes.empty()) uj["classes"] = u.classes;
        ucs.push_back(std::move(uj));
    }
    j["use_cases"] = std::move(ucs);
    json mcs = json::array();
    for (auto mc : cfg.modality_configs) mcs.push_back(to_string(mc));
    j["modality_configs"] = std::move(mcs);
    json archs = json::array();
    for (auto a : cfg.architectures) archs.push_back(to_string(a));
    j["architectures"] = std::move(archs);
    j["repeats"] = cfg.repeats;
    j["global_seed"] = cfg.global_seed;
    j["backbone"] = to_string(cfg.backbone);
    j["train"] = train_to_json(cfg.train);
    return j.dump(2);
}

std::string synth_config_to_json(const SynthConfig& cfg) { return synth_to_json(cfg).dump(2); }

}  // namespace pairfuse
