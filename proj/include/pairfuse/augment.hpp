#pragma once

#include <cstdint>

#include "pairfuse/data.hpp"
#include "pairfuse/tensor.hpp"

namespace pairfuse {

// Training-time augmentation. Each operation fires independently with
// probability 0.5: horizontal flip, rotation in [-15, 15] degrees, zoom in
// [0.9, 1.1], shear in [-10, 10] degrees, brightness scale in [0.8, 1.2]
// (clamped to [0, 1]). Geometry is resampled bilinearly with zero fill, so an
// all-zero image maps to an all-zero image under every operation.
Tensor augment_image(const Tensor& image, std::uint64_t seed);

// Pixel-wise brightness scaling with clamping to [0, 1].
Tensor apply_brightness(const Tensor& image, double scale);

// Augments both modalities with independent streams derived from `seed`.
// A modality whose presence flag is false is left exactly all-zero.
Sample augment(const Sample& sample, std::uint64_t seed);

}  // namespace pairfuse
