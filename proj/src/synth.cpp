#include "pairfuse/synth.hpp"

#include <array>
#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "pairfuse/image_io.hpp"
#include "pairfuse/rng.hpp"

namespace pairfuse {

namespace fs = std::filesystem;

namespace {

constexpr std::array<std::array<double, 3>, 8> kPalette = {{
    {0.15, 0.35, 0.85},  // blue
    {0.90, 0.55, 0.10},  // orange
    {0.15, 0.70, 0.25},  // green
    {0.60, 0.20, 0.75},  // purple
    {0.05, 0.70, 0.70},  // teal
    {0.85, 0.15, 0.20},  // red
    {0.55, 0.55, 0.10},  // olive
    {0.85, 0.25, 0.65},  // magenta
}};

void fill_background(Tensor& img, double noise, Rng& rng) {
    for (int y = 0; y < img.h(); ++y)
        for (int x = 0; x < img.w(); ++x) {
            for (int c = 0; c < 3; ++c) {
                double v = 0.5 + noise * rng.normal();
                img.at(0, y, x, c) = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
            }
        }
}

void fill_rect(Tensor& img, int y0, int x0, int y1, int x1, const std::array<double, 3>& color) {
    for (int y = std::max(0, y0); y < std::min(img.h(), y1); ++y)
        for (int x = std::max(0, x0); x < std::min(img.w(), x1); ++x)
            for (int c = 0; c < 3; ++c) img.at(0, y, x, c) = color[c];
}

void fill_circle(Tensor& img, double cy, double cx, double r, const std::array<double, 3>& color) {
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - r)));
    const int y1 = std::min(img.h() - 1, static_cast<int>(std::ceil(cy + r)));
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - r)));
    const int x1 = std::min(img.w() - 1, static_cast<int>(std::ceil(cx + r)));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
            if ((y - cy) * (y - cy) + (x - cx) * (x - cx) <= r * r)
                for (int c = 0; c < 3; ++c) img.at(0, y, x, c) = color[c];
}

// Rectangle grid: geometry class g gives a (g+2) x (g+2) grid.
void draw_facade_motif(Tensor& img, int color_class, int geom_class) {
    const int size = img.h();
    const int margin = size / 8;
    const int span = size - 2 * margin;
    const int cells = geom_class + 2;
    const double cell = static_cast<double>(span) / cells;
    const auto& color = kPalette[color_class % kPalette.size()];
    for (int gy = 0; gy < cells; ++gy)
        for (int gx = 0; gx < cells; ++gx) {
            const double y = margin + gy * cell;
            const double x = margin + gx * cell;
            const double pad = cell * 0.2;
            fill_rect(img, static_cast<int>(std::lround(y + pad)), static_cast<int>(std::lround(x + pad)),
                      static_cast<int>(std::lround(y + cell - pad)), static_cast<int>(std::lround(x + cell - pad)),
                      color);
        }
}

// Circle scatter: geometry class g gives 3*(g+1) circles at seeded positions.
void draw_interior_motif(Tensor& img, int color_class, int geom_class, Rng& rng) {
    const int size = img.h();
    const int count = 3 * (geom_class + 1);
    const double r = size * 0.07;
    const auto& color = kPalette[color_class % kPalette.size()];
    for (int i = 0; i < count; ++i) {
        const double cy = rng.uniform(r + 1, size - r - 1);
        const double cx = rng.uniform(r + 1, size - r - 1);
        fill_circle(img, cy, cx, r, color);
    }
}

int draw_cue_class(int true_class, int num_classes, double fidelity, Rng& rng) {
    if (rng.uniform() < fidelity) return true_class;
    // Uniform over the other classes.
    int other = static_cast<int>(rng.below(static_cast<std::uint64_t>(num_classes - 1)));
    return other >= true_class ? other + 1 : other;
}

}  // namespace

std::vector<std::string> synth_class_names(int num_classes) {
    std::vector<std::string> names;
    for (int i = 0; i < num_classes; ++i) names.push_back("class" + std::to_string(i));
    return names;
}

SynthResult generate_synthetic(const SynthConfig& cfg, const std::string& out_dir) {
    if (cfg.num_classes < 2 || cfg.num_classes > static_cast<int>(kPalette.size()))
        throw std::invalid_argument("generate_synthetic: num_classes must be in [2, 8]");
    if (cfg.train_objects <= 0 || cfg.val_objects <= 0 || cfg.test_objects <= 0)
        throw std::invalid_argument("generate_synthetic: object counts must be positive");
    if (cfg.train_incomplete < 0 || cfg.val_incomplete < 0)
        throw std::invalid_argument("generate_synthetic: incomplete counts must be non-negative");
    if (cfg.facade_cue_fidelity < 0.0 || cfg.facade_cue_fidelity > 1.0 ||
        cfg.interior_cue_fidelity < 0.0 || cfg.interior_cue_fidelity > 1.0)
        throw std::invalid_argument("generate_synthetic: cue fidelities must be in [0, 1]");
    if (cfg.noise_level < 0.0)
        throw std::invalid_argument("generate_synthetic: noise level must be non-negative");
    if (cfg.facade_images_min < 1 || cfg.facade_images_max < cfg.facade_images_min ||
        cfg.interior_images_min < 1 || cfg.interior_images_max < cfg.interior_images_min)
        throw std::invalid_argument("generate_synthetic: bad images_per_object range");

    fs::create_directories(fs::path(out_dir) / "images");
    const auto classes = synth_class_names(cfg.num_classes);

    SynthResult result;
    std::vector<ObjectRecord> records;

    auto render = [&](const std::string& ref, Modality modality, int true_class, Rng& rng) {
        Tensor img(1, cfg.image_size, cfg.image_size, 3);
        fill_background(img, cfg.noise_level, rng);
        const double fidelity = modality == Modality::facade ? cfg.facade_cue_fidelity
                                                             : cfg.interior_cue_fidelity;
        const int color_class = draw_cue_class(true_class, cfg.num_classes, fidelity, rng);
        const int geom_class = draw_cue_class(true_class, cfg.num_classes, fidelity, rng);
        if (modality == Modality::facade)
            draw_facade_motif(img, color_class, geom_class);
        else
            draw_interior_motif(img, color_class, geom_class, rng);
        save_ppm((fs::path(out_dir) / ref).string(), img);
        ++result.num_images;
    };

    auto emit_object = [&](Split split, int cls, int index, bool incomplete, Modality present) {
        ObjectRecord rec;
        rec.object_id = "synth-" + to_string(split) + "-c" + std::to_string(cls) +
                        (incomplete ? "-x" : "-") + std::to_string(index);
        rec.class_label = classes[cls];
        rec.split = split;

        Rng obj_rng = Rng::derive(cfg.seed, rec.object_id);
        const int nf = incomplete ? (present == Modality::facade ? 1 : 0)
                                  : obj_rng.uniform_int(cfg.facade_images_min, cfg.facade_images_max);
        const int ni = incomplete ? (present == Modality::interior ? 1 : 0)
                                  : obj_rng.uniform_int(cfg.interior_images_min, cfg.interior_images_max);

        for (int j = 0; j < nf; ++j) {
            const std::string ref = "images/" + rec.object_id + "-f" + std::to_string(j) + ".ppm";
            Rng rng = Rng::derive(cfg.seed, rec.object_id + "/f" + std::to_string(j));
            render(ref, Modality::facade, cls, rng);
            rec.facade_images.push_back(ref);
        }
        for (int j = 0; j < ni; ++j) {
            const std::string ref = "images/" + rec.object_id + "-i" + std::to_string(j) + ".ppm";
            Rng rng = Rng::derive(cfg.seed, rec.object_id + "/i" + std::to_string(j));
            render(ref, Modality::interior, cls, rng);
            rec.interior_images.push_back(ref);
        }
        records.push_back(std::move(rec));
        ++result.num_objects;
    };

    const std::array<std::pair<Split, int>, 3> complete_plan = {
        {{Split::train, cfg.train_objects}, {Split::val, cfg.val_objects}, {Split::test, cfg.test_objects}}};
    for (const auto& [split, count] : complete_plan)
        for (int cls = 0; cls < cfg.num_classes; ++cls)
            for (int i = 0; i < count; ++i)
                emit_object(split, cls, i, false, Modality::facade);

    // Incomplete objects alternate the present modality so the missing pool
    // stays exactly balanced per class.
    const std::array<std::pair<Split, int>, 2> incomplete_plan = {
        {{Split::train, cfg.train_incomplete}, {Split::val, cfg.val_incomplete}}};
    for (const auto& [split, count] : incomplete_plan)
        for (int cls = 0; cls < cfg.num_classes; ++cls)
            for (int i = 0; i < count; ++i)
                emit_object(split, cls, i, true, i % 2 == 0 ? Modality::facade : Modality::interior);

    result.manifest_path = (fs::path(out_dir) / "manifest.jsonl").string();
    save_manifest(result.manifest_path, records);
    return result;
}

}  // namespace pairfuse
