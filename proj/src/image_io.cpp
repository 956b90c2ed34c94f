#include "pairfuse/image_io.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace pairfuse {

namespace {

int read_ppm_token(std::istream& in) {
    // Skips whitespace and '#' comments between header tokens.
    int c = in.get();
    while (c == '#' || std::isspace(c)) {
        if (c == '#')
            while (c != '\n' && c != EOF) c = in.get();
        c = in.get();
    }
    int value = 0;
    bool any = false;
    while (std::isdigit(c)) {
        value = value * 10 + (c - '0');
        any = true;
        c = in.get();
    }
    if (!any) throw std::runtime_error("malformed PPM header");
    return value;
}

}  // namespace

Tensor load_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open image: " + path);
    char p, six;
    in.get(p);
    in.get(six);
    if (p != 'P' || six != '6') throw std::runtime_error("not a P6 PPM file: " + path);
    const int w = read_ppm_token(in);
    const int h = read_ppm_token(in);
    const int maxval = read_ppm_token(in);
    if (maxval != 255) throw std::runtime_error("unsupported PPM maxval in " + path);

    std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * 3);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!in) throw std::runtime_error("truncated PPM data in " + path);

    Tensor img(1, h, w, 3);
    for (std::size_t i = 0; i < raw.size(); ++i) img[i] = raw[i] / 255.0;
    return img;
}

void save_ppm(const std::string& path, const Tensor& image) {
    if (image.n() != 1 || image.c() != 3)
        throw std::invalid_argument("save_ppm expects a (1, h, w, 3) tensor, got " + image.shape_str());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open image for writing: " + path);
    out << "P6\n" << image.w() << " " << image.h() << "\n255\n";
    std::vector<unsigned char> raw(image.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        double v = image[i];
        if (v < 0.0) v = 0.0;
        if (v > 1.0) v = 1.0;
        raw[i] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw std::runtime_error("image write failed: " + path);
}

}  // namespace pairfuse
