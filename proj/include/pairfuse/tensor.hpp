#pragma once

#include <cassert>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace pairfuse {

// Dense rank-4 array of doubles laid out (n, h, w, c) with c fastest.
// Feature maps and image batches all use this type; a single image is a
// tensor with n == 1.
class Tensor {
public:
    Tensor() : n_(0), h_(0), w_(0), c_(0) {}
    Tensor(int n, int h, int w, int c)
        : n_(n), h_(h), w_(w), c_(c),
          data_(static_cast<std::size_t>(n) * h * w * c, 0.0) {}

    static Tensor zeros_like(const Tensor& t) { return Tensor(t.n_, t.h_, t.w_, t.c_); }

    int n() const { return n_; }
    int h() const { return h_; }
    int w() const { return w_; }
    int c() const { return c_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& at(int n, int h, int w, int c) {
        assert(n >= 0 && n < n_ && h >= 0 && h < h_ && w >= 0 && w < w_ && c >= 0 && c < c_);
        return data_[index(n, h, w, c)];
    }
    double at(int n, int h, int w, int c) const {
        assert(n >= 0 && n < n_ && h >= 0 && h < h_ && w >= 0 && w < w_ && c >= 0 && c < c_);
        return data_[index(n, h, w, c)];
    }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    bool same_shape(const Tensor& o) const {
        return n_ == o.n_ && h_ == o.h_ && w_ == o.w_ && c_ == o.c_;
    }

    std::string shape_str() const {
        return "(" + std::to_string(n_) + ", " + std::to_string(h_) + ", " +
               std::to_string(w_) + ", " + std::to_string(c_) + ")";
    }

private:
    std::size_t index(int n, int h, int w, int c) const {
        return ((static_cast<std::size_t>(n) * h_ + h) * w_ + w) * c_ + c;
    }

    int n_, h_, w_, c_;
    std::vector<double> data_;
};

inline void require_shape(const Tensor& t, int n, int h, int w, int c, const char* what) {
    if (t.n() != n || t.h() != h || t.w() != w || t.c() != c) {
        throw std::invalid_argument(std::string(what) + ": expected shape (" +
                                    std::to_string(n) + ", " + std::to_string(h) + ", " +
                                    std::to_string(w) + ", " + std::to_string(c) +
                                    "), got " + t.shape_str());
    }
}

}  // namespace pairfuse
