#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pairfuse/data.hpp"
#include "pairfuse/eval.hpp"
#include "pairfuse/synth.hpp"
#include "pairfuse/train.hpp"

namespace pairfuse {

// One use case's dataset: an existing manifest or a synthetic config that is
// materialized under the output directory on first use.
struct UseCaseSource {
    std::string id;
    std::string manifest;
    std::optional<SynthConfig> synth;
    std::vector<std::string> classes;  // optional explicit vocabulary
};

struct MatrixConfig {
    std::vector<UseCaseSource> use_cases;
    std::vector<ModalityConfig> modality_configs{
        ModalityConfig::complete, ModalityConfig::facade_only, ModalityConfig::interior_only,
        ModalityConfig::complete_plus_missing};
    std::vector<ArchitectureKind> architectures{
        ArchitectureKind::early, ArchitectureKind::late, ArchitectureKind::intermediate};
    std::vector<int> repeats{0, 1, 2};
    std::uint64_t global_seed = 0;
    BackboneKind backbone = BackboneKind::desknet;
    TrainConfig train;
};

struct VariantMetrics {
    double macro_f1 = 0.0;
    std::vector<double> per_class_f1;
};

struct RunRecord {
    std::string use_case;
    std::string modality_config;
    std::string architecture;
    int repeat = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> classes;
    int best_epoch = 0;
    double best_val_loss = 0.0;
    double wall_clock_sec = 0.0;
    std::string status;  // "done" or "failed"
    std::string message;
    std::map<std::string, VariantMetrics> metrics;  // keyed by test variant
};

struct MatrixResult {
    std::vector<RunRecord> records;
    int executed = 0;
    int skipped = 0;
};

// run seed = stable hash of (global seed, use case, modality config,
// architecture, repeat index).
std::uint64_t derive_run_seed(std::uint64_t global_seed, const std::string& use_case,
                              ModalityConfig mc, ArchitectureKind arch, int repeat);

// The test variants recorded for a modality configuration: single-modality
// configurations keep only their matching variant, the others keep all three.
std::vector<TestVariant> variants_for(ModalityConfig mc);

// Executes every (use case x modality config x architecture x repeat) run
// under out_dir, skipping runs whose RunRecord already exists with status
// "done". A failed run is recorded and does not abort the matrix.
MatrixResult run_matrix(const MatrixConfig& cfg, const std::string& out_dir);

std::vector<RunRecord> load_run_records(const std::string& out_dir);

// Table-layout report: per use case a header with the random baseline, one
// row per (modality config, architecture), columns test_c/test_f/test_i in
// "mean (std)" format with blanks where a variant does not apply, and a flag
// field naming the columns where the row holds the column maximum.
std::string report(const std::vector<RunRecord>& records);
void write_report(const std::vector<RunRecord>& records, const std::string& path);

// Config (de)serialization for the CLI. Unknown keys are ignored; missing
// keys keep their defaults.
MatrixConfig matrix_config_from_json_file(const std::string& path);
MatrixConfig matrix_config_from_json(const std::string& json_text);
SynthConfig synth_config_from_json_file(const std::string& path);
SynthConfig synth_config_from_json(const std::string& json_text);
TrainConfig train_config_from_json(const std::string& json_text);
std::string matrix_config_to_json(const MatrixConfig& cfg);
std::string synth_config_to_json(const SynthConfig& cfg);
std::string train_config_json(const TrainConfig& cfg);

}  // namespace pairfuse
