#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pairfuse/data.hpp"

namespace pairfuse {

// Procedural two-modality dataset. Every class owns a distinct motif pair:
// facades show a (g+2) x (g+2) grid of filled rectangles, interiors show
// 3*(g+1) filled circles, both drawn in the class color on a noisy gray
// background. Each rendered image carries two class cues - the motif color
// and the motif geometry - and cue fidelity applies to each independently:
// with probability p the cue encodes the object's true class, otherwise a
// class drawn uniformly from the others (a conflicting clue). Incomplete
// objects carry images for exactly one modality and feed the missing pool.
struct SynthConfig {
    int num_classes = 2;
    int image_size = 64;

    // Complete objects per class and split.
    int train_objects = 0;
    int val_objects = 0;
    int test_objects = 0;
    // Incomplete objects per class and split (alternating missing modality).
    int train_incomplete = 0;
    int val_incomplete = 0;

    double facade_cue_fidelity = 1.0;   // p_f
    double interior_cue_fidelity = 1.0; // p_i

    int facade_images_min = 1, facade_images_max = 1;
    int interior_images_min = 1, interior_images_max = 1;

    double noise_level = 0.05;  // stddev of per-pixel Gaussian noise
    std::uint64_t seed = 0;
};

struct SynthResult {
    std::string manifest_path;
    int num_objects = 0;
    int num_images = 0;
};

std::vector<std::string> synth_class_names(int num_classes);

// Writes images/ and manifest.jsonl under out_dir. Output is a pure function
// of the config: the same config produces bit-identical files.
SynthResult generate_synthetic(const SynthConfig& cfg, const std::string& out_dir);

}  // namespace pairfuse
