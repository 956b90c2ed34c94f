#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pairfuse/tensor.hpp"

namespace pairfuse {

enum class Split { train, val, test };
enum class Modality { facade, interior };
enum class ModalityConfig { complete, facade_only, interior_only, complete_plus_missing };

std::string to_string(Split s);
std::string to_string(Modality m);
std::string to_string(ModalityConfig c);
Split split_from_string(const std::string& s);
Modality modality_from_string(const std::string& s);
ModalityConfig modality_config_from_string(const std::string& s);

// One real-estate (or synthetic) object with its photo lists. Image entries
// are paths relative to the manifest directory.
struct ObjectRecord {
    std::string object_id;
    std::string class_label;
    Split split = Split::train;
    std::vector<std::string> facade_images;
    std::vector<std::string> interior_images;
};

// One training/evaluation unit. A missing modality is encoded as an all-zero
// image with the presence flag false; at least one flag is always true.
struct Sample {
    std::string object_id;
    Tensor facade;   // (1, h, w, 3), values in [0, 1]
    Tensor interior;
    bool facade_present = true;
    bool interior_present = true;
    int label_index = 0;
    std::string facade_ref;    // source image path, empty when blackened
    std::string interior_ref;
};

// Paper dataset configuration. `extra` columns are the incomplete-sample
// additions used by the complete+missing configuration.
struct UseCaseSpec {
    struct ClassCounts {
        int train = 0, train_extra = 0;
        int val = 0, val_extra = 0;
        int test = 0;
    };
    std::string id;
    std::vector<std::string> classes;
    std::vector<ClassCounts> counts;  // parallel to classes; empty for ad-hoc sets

    double random_baseline() const { return 1.0 / static_cast<double>(classes.size()); }
};

// The three investigated use cases with their class vocabularies and
// train/val/test counts.
UseCaseSpec use_case(const std::string& id);

// Line-delimited JSON manifest: one object per line with fields object_id,
// class, split, facade, interior.
std::vector<ObjectRecord> load_manifest(const std::string& path);
void save_manifest(const std::string& path, const std::vector<ObjectRecord>& records);

// All images referenced by a manifest, loaded once and shared read-only.
class ImageStore {
public:
    ImageStore() = default;
    explicit ImageStore(std::string root) : root_(std::move(root)) {}

    const Tensor& get(const std::string& ref) const;
    void preload(const std::vector<ObjectRecord>& records);

private:
    std::string root_;
    mutable std::map<std::string, Tensor> cache_;
};

// Class vocabulary: the use case's classes if given, otherwise the sorted
// distinct labels present in the manifest.
std::vector<std::string> class_vocabulary(const std::vector<ObjectRecord>& records);
int label_index_of(const std::vector<std::string>& classes, const std::string& label);

// Complete-pair construction: min(|facade|, |interior|) samples, the larger
// list subsampled without replacement in seeded-shuffle order and zipped with
// the smaller list in manifest order. Records missing a modality produce zero
// samples here and belong in the missing pool instead.
std::vector<Sample> pair_object(const ObjectRecord& record, const ImageStore& images,
                                const std::vector<std::string>& classes, std::uint64_t seed);

// One sample whose `missing` modality is a black image (presence flag false);
// the present modality is drawn seeded from its list.
Sample make_incomplete(const ObjectRecord& record, Modality missing, const ImageStore& images,
                       const std::vector<std::string>& classes, std::uint64_t seed);

void blacken(Sample& s, Modality m);
Sample blackened(const Sample& s, Modality m);

// Balanced pool of incomplete samples from records that lack one modality:
// equal numbers of missing-facade and missing-interior samples, seeded
// selection, deterministic order.
std::vector<Sample> build_missing_pool(const std::vector<ObjectRecord>& records,
                                       const ImageStore& images,
                                       const std::vector<std::string>& classes,
                                       std::uint64_t seed,
                                       std::optional<int> pool_size = std::nullopt);

// complete -> unchanged; facade_only / interior_only -> the other modality
// blackened; complete_plus_missing -> samples ++ pool, shuffled by the
// training seed.
std::vector<Sample> apply_modality_config(const std::vector<Sample>& samples, ModalityConfig config,
                                          const std::vector<Sample>* missing_pool,
                                          std::uint64_t seed);

// Everything a run needs from one dataset, paired once with a dataset-level
// seed and shared read-only across runs.
struct SampleSet {
    std::vector<std::string> classes;
    std::vector<Sample> train, val, test;
    std::vector<Sample> train_missing_pool, val_missing_pool;
};

SampleSet build_samples(const std::vector<ObjectRecord>& records, const ImageStore& images,
                        const std::vector<std::string>& classes, std::uint64_t seed);

}  // namespace pairfuse
