#include "pairfuse/augment.hpp"

#include <cmath>

#include "pairfuse/rng.hpp"

namespace pairfuse {

namespace {

constexpr double kPi = 3.141592653589793;

struct AffineDraw {
    bool flip = false;
    double rotation = 0.0;   // radians
    double zoom = 1.0;
    double shear = 0.0;      // radians
    bool identity() const { return !flip && rotation == 0.0 && zoom == 1.0 && shear == 0.0; }
};

double bilinear(const Tensor& img, double y, double x, int c) {
    const int h = img.h(), w = img.w();
    const int y0 = static_cast<int>(std::floor(y));
    const int x0 = static_cast<int>(std::floor(x));
    const double fy = y - y0;
    const double fx = x - x0;
    double acc = 0.0;
    for (int dy = 0; dy < 2; ++dy) {
        const int yy = y0 + dy;
        if (yy < 0 || yy >= h) continue;
        const double wy = dy ? fy : 1.0 - fy;
        for (int dx = 0; dx < 2; ++dx) {
            const int xx = x0 + dx;
            if (xx < 0 || xx >= w) continue;
            const double wx = dx ? fx : 1.0 - fx;
            acc += wy * wx * img.at(0, yy, xx, c);
        }
    }
    return acc;  // zero fill outside the image
}

// Operations compose in the order flip, rotate, zoom, shear; the warp maps
// each output pixel back through the inverse chain.
Tensor warp(const Tensor& img, const AffineDraw& d) {
    const int h = img.h(), w = img.w();
    const double cy = (h - 1) / 2.0;
    const double cx = (w - 1) / 2.0;
    const double cos_r = std::cos(-d.rotation);
    const double sin_r = std::sin(-d.rotation);
    const double inv_zoom = 1.0 / d.zoom;
    const double shear_t = std::tan(d.shear);

    Tensor out(1, h, w, 3);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            // inverse shear, then inverse zoom, then inverse rotation
            double px = (x - cx);
            double py = (y - cy);
            px -= shear_t * py;
            px *= inv_zoom;
            py *= inv_zoom;
            double qx = cos_r * px - sin_r * py;
            double qy = sin_r * px + cos_r * py;
            qx += cx;
            qy += cy;
            if (d.flip) qx = (w - 1) - qx;
            for (int c = 0; c < 3; ++c) out.at(0, y, x, c) = bilinear(img, qy, qx, c);
        }
    }
    return out;
}

}  // namespace

Tensor apply_brightness(const Tensor& image, double scale) {
    Tensor out = image;
    for (std::size_t i = 0; i < out.size(); ++i) {
        double v = out[i] * scale;
        out[i] = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    }
    return out;
}

Tensor augment_image(const Tensor& image, std::uint64_t seed) {
    Rng rng(seed);
    AffineDraw d;
    if (rng.coin()) d.flip = true;
    if (rng.coin()) d.rotation = rng.uniform(-15.0, 15.0) * kPi / 180.0;
    if (rng.coin()) d.zoom = rng.uniform(0.9, 1.1);
    if (rng.coin()) d.shear = rng.uniform(-10.0, 10.0) * kPi / 180.0;
    double brightness = 1.0;
    if (rng.coin()) brightness = rng.uniform(0.8, 1.2);

    Tensor out = d.identity() ? image : warp(image, d);
    if (brightness != 1.0) out = apply_brightness(out, brightness);
    return out;
}

Sample augment(const Sample& sample, std::uint64_t seed) {
    Sample out = sample;
    if (out.facade_present) out.facade = augment_image(out.facade, hash_combine(seed, "facade"));
    if (out.interior_present) out.interior = augment_image(out.interior, hash_combine(seed, "interior"));
    return out;
}

}  // namespace pairfuse
