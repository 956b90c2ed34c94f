#include "pairfuse/data.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "pairfuse/image_io.hpp"
#include "pairfuse/rng.hpp"

namespace pairfuse {

using nlohmann::json;

std::string to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "?";
}

std::string to_string(Modality m) { return m == Modality::facade ? "facade" : "interior"; }

std::string to_string(ModalityConfig c) {
    switch (c) {
        case ModalityConfig::complete: return "complete";
        case ModalityConfig::facade_only: return "facade_only";
        case ModalityConfig::interior_only: return "interior_only";
        case ModalityConfig::complete_plus_missing: return "complete_plus_missing";
    }
    return "?";
}

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    throw std::invalid_argument("unknown split: " + s);
}

Modality modality_from_string(const std::string& s) {
    if (s == "facade") return Modality::facade;
    if (s == "interior") return Modality::interior;
    throw std::invalid_argument("unknown modality: " + s);
}

ModalityConfig modality_config_from_string(const std::string& s) {
    if (s == "complete") return ModalityConfig::complete;
    if (s == "facade_only") return ModalityConfig::facade_only;
    if (s == "interior_only") return ModalityConfig::interior_only;
    if (s == "complete_plus_missing") return ModalityConfig::complete_plus_missing;
    throw std::invalid_argument("unknown modality config: " + s);
}

UseCaseSpec use_case(const std::string& id) {
    UseCaseSpec uc;
    uc.id = id;
    if (id == "UC1") {
        uc.classes = {"industry", "hospitality sector", "retail", "offices"};
        uc.counts = {{25, 30, 12, 14, 14},
                     {30, 20, 15, 10, 17},
                     {75, 100, 37, 40, 43},
                     {100, 50, 47, 20, 50}};
    } else if (id == "UC2") {
        uc.classes = {"apartment", "house"};
        uc.counts = {{300, 250, 50, 50, 667}, {300, 250, 50, 50, 177}};
    } else if (id == "UC3") {
        uc.classes = {"commercial", "residential"};
        uc.counts = {{230, 200, 111, 84, 124}, {600, 500, 100, 100, 844}};
    } else {
        throw std::invalid_argument("unknown use case: " + id);
    }
    return uc;
}

std::vector<ObjectRecord> load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest: " + path);
    std::vector<ObjectRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        ObjectRecord r;
        r.object_id = j.at("object_id").get<std::string>();
        r.class_label = j.at("class").get<std::string>();
        r.split = split_from_string(j.at("split").get<std::string>());
        r.facade_images = j.at("facade").get<std::vector<std::string>>();
        r.interior_images = j.at("interior").get<std::vector<std::string>>();
        if (r.facade_images.empty() && r.interior_images.empty())
            throw std::runtime_error("manifest object " + r.object_id + " has no images");
        records.push_back(std::move(r));
    }
    return records;
}

void save_manifest(const std::string& path, const std::vector<ObjectRecord>& records) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open manifest for writing: " + path);
    for (const auto& r : records) {
        json j;
        j["object_id"] = r.object_id;
        j["class"] = r.class_label;
        j["split"] = to_string(r.split);
        j["facade"] = r.facade_images;
        j["interior"] = r.interior_images;
        out << j.dump() << "\n";
    }
}

const Tensor& ImageStore::get(const std::string& ref) const {
    auto it = cache_.find(ref);
    if (it == cache_.end()) {
        const std::string path = root_.empty() ? ref : root_ + "/" + ref;
        it = cache_.emplace(ref, load_ppm(path)).first;
    }
    return it->second;
}

void ImageStore::preload(const std::vector<ObjectRecord>& records) {
    for (const auto& r : records) {
        for (const auto& f : r.facade_images) get(f);
        for (const auto& i : r.interior_images) get(i);
    }
}

std::vector<std::string> class_vocabulary(const std::vector<ObjectRecord>& records) {
    std::set<std::string> labels;
    for (const auto& r : records) labels.insert(r.class_label);
    return {labels.begin(), labels.end()};
}

int label_index_of(const std::vector<std::string>& classes, const std::string& label) {
    auto it = std::find(classes.begin(), classes.end(), label);
    if (it == classes.end()) throw std::invalid_argument("label not in vocabulary: " + label);
    return static_cast<int>(it - classes.begin());
}

namespace {

Tensor zeros_like_image(const Tensor& t) { return Tensor(1, t.h(), t.w(), t.c()); }

}  // namespace

std::vector<Sample> pair_object(const ObjectRecord& record, const ImageStore& images,
                                const std::vector<std::string>& classes, std::uint64_t seed) {
    const std::size_t nf = record.facade_images.size();
    const std::size_t ni = record.interior_images.size();
    const std::size_t k = std::min(nf, ni);
    std::vector<Sample> samples;
    if (k == 0) return samples;  // incomplete record, handled by the missing pool

    // The interior list counts as the larger one on ties.
    const bool interior_larger = ni >= nf;
    const auto& larger = interior_larger ? record.interior_images : record.facade_images;
    const auto& smaller = interior_larger ? record.facade_images : record.interior_images;

    std::vector<std::size_t> order(larger.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);

    const int label = label_index_of(classes, record.class_label);
    for (std::size_t i = 0; i < k; ++i) {
        const std::string& f_ref = interior_larger ? smaller[i] : larger[order[i]];
        const std::string& i_ref = interior_larger ? larger[order[i]] : smaller[i];
        Sample s;
        s.object_id = record.object_id;
        s.facade = images.get(f_ref);
        s.interior = images.get(i_ref);
        s.facade_ref = f_ref;
        s.interior_ref = i_ref;
        s.label_index = label;
        samples.push_back(std::move(s));
    }
    return samples;
}

Sample make_incomplete(const ObjectRecord& record, Modality missing, const ImageStore& images,
                       const std::vector<std::string>& classes, std::uint64_t seed) {
    const auto& present_list =
        missing == Modality::facade ? record.interior_images : record.facade_images;
    if (present_list.empty()) {
        throw std::invalid_argument("make_incomplete: object " + record.object_id + " has no " +
                                    (missing == Modality::facade ? "interior" : "facade") +
                                    " images to draw from");
    }
    Rng rng(seed);
    const std::string& ref = present_list[rng.below(present_list.size())];

    Sample s;
    s.object_id = record.object_id;
    s.label_index = label_index_of(classes, record.class_label);
    const Tensor& img = images.get(ref);
    if (missing == Modality::facade) {
        s.interior = img;
        s.interior_ref = ref;
        s.facade = zeros_like_image(img);
        s.facade_present = false;
    } else {
        s.facade = img;
        s.facade_ref = ref;
        s.interior = zeros_like_image(img);
        s.interior_present = false;
    }
    return s;
}

void blacken(Sample& s, Modality m) {
    if (m == Modality::facade) {
        s.facade.fill(0.0);
        s.facade_present = false;
        s.facade_ref.clear();
    } else {
        s.interior.fill(0.0);
        s.interior_present = false;
        s.interior_ref.clear();
    }
}

Sample blackened(const Sample& s, Modality m) {
    Sample out = s;
    blacken(out, m);
    return out;
}

std::vector<Sample> build_missing_pool(const std::vector<ObjectRecord>& records,
                                       const ImageStore& images,
                                       const std::vector<std::string>& classes,
                                       std::uint64_t seed,
                                       std::optional<int> pool_size) {
    std::vector<const ObjectRecord*> facade_missing, interior_missing;
    for (const auto& r : records) {
        const bool has_f = !r.facade_images.empty();
        const bool has_i = !r.interior_images.empty();
        if (has_f && !has_i) interior_missing.push_back(&r);
        if (!has_f && has_i) facade_missing.push_back(&r);
    }

    std::size_t per_side = std::min(facade_missing.size(), interior_missing.size());
    if (pool_size) {
        if (*pool_size % 2 != 0)
            throw std::invalid_argument("missing pool size must be even to stay balanced");
        const std::size_t want = static_cast<std::size_t>(*pool_size) / 2;
        if (want > per_side)
            throw std::invalid_argument("not enough incomplete objects for the requested pool size");
        per_side = want;
    }

    Rng rng(seed);
    rng.shuffle(facade_missing);
    rng.shuffle(interior_missing);

    std::vector<Sample> pool;
    for (std::size_t i = 0; i < per_side; ++i) {
        pool.push_back(make_incomplete(*facade_missing[i], Modality::facade, images, classes,
                                       hash_combine(seed, facade_missing[i]->object_id)));
        pool.push_back(make_incomplete(*interior_missing[i], Modality::interior, images, classes,
                                       hash_combine(seed, interior_missing[i]->object_id)));
    }
    return pool;
}

std::vector<Sample> apply_modality_config(const std::vector<Sample>& samples, ModalityConfig config,
                                          const std::vector<Sample>* missing_pool,
                                          std::uint64_t seed) {
    switch (config) {
        case ModalityConfig::complete:
            return samples;
        case ModalityConfig::facade_only: {
            std::vector<Sample> out;
            out.reserve(samples.size());
            for (const auto& s : samples) out.push_back(blackened(s, Modality::interior));
            return out;
        }
        case ModalityConfig::interior_only: {
            std::vector<Sample> out;
            out.reserve(samples.size());
            for (const auto& s : samples) out.push_back(blackened(s, Modality::facade));
            return out;
        }
        case ModalityConfig::complete_plus_missing: {
            if (missing_pool == nullptr || missing_pool->empty())
                throw std::invalid_argument("complete_plus_missing requires a missing pool");
            std::vector<Sample> out = samples;
            out.insert(out.end(), missing_pool->begin(), missing_pool->end());
            Rng rng(seed);
            rng.shuffle(out);
            return out;
        }
    }
    throw std::invalid_argument("unknown modality config");
}

SampleSet build_samples(const std::vector<ObjectRecord>& records, const ImageStore& images,
                        const std::vector<std::string>& classes, std::uint64_t seed) {
    SampleSet set;
    set.classes = classes;
    std::vector<ObjectRecord> train_incomplete, val_incomplete;
    for (const auto& r : records) {
        auto samples = pair_object(r, images, classes, hash_combine(seed, r.object_id + "/pair"));
        auto& dst = r.split == Split::train ? set.train : r.split == Split::val ? set.val : set.test;
        for (auto& s : samples) dst.push_back(std::move(s));
        if (r.facade_images.empty() || r.interior_images.empty()) {
            if (r.split == Split::train) train_incomplete.push_back(r);
            if (r.split == Split::val) val_incomplete.push_back(r);
        }
    }
    set.train_missing_pool = build_missing_pool(train_incomplete, images, classes,
                                                hash_combine(seed, "train_pool"));
    set.val_missing_pool = build_missing_pool(val_incomplete, images, classes,
                                              hash_combine(seed, "val_pool"));
    return set;
}

}  // namespace pairfuse
