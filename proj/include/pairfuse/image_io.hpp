#pragma once

#include <string>

#include "pairfuse/tensor.hpp"

namespace pairfuse {

// Images are stored as binary PPM (P6, 8-bit RGB, maxval 255) and handled in
// memory as (1, h, w, 3) tensors with values in [0, 1]. Writing quantizes
// with round-half-up after clamping, so a given tensor always produces the
// same bytes.
Tensor load_ppm(const std::string& path);
void save_ppm(const std::string& path, const Tensor& image);

}  // namespace pairfuse
