#include "pairfuse/nn.hpp"

#include <cmath>

namespace pairfuse::nn {

namespace {

// Fills one im2col matrix for a 3x3 kernel with padding 1. Row r corresponds
// to output pixel (n, oy, ox); column ((ky*3 + kx) * in_ch + ci) holds the
// input value at (oy*stride + ky - 1, ox*stride + kx - 1).
void im2col(const Tensor& x, int stride, RowMatX& col, int oh, int ow) {
    const int n = x.n(), h = x.h(), w = x.w(), c = x.c();
    col.setZero(static_cast<Eigen::Index>(n) * oh * ow, 9 * c);
    const double* src = x.data();
    for (int in = 0; in < n; ++in) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                double* row = col.row((static_cast<Eigen::Index>(in) * oh + oy) * ow + ox).data();
                for (int ky = 0; ky < 3; ++ky) {
                    const int iy = oy * stride + ky - 1;
                    if (iy < 0 || iy >= h) continue;
                    for (int kx = 0; kx < 3; ++kx) {
                        const int ix = ox * stride + kx - 1;
                        if (ix < 0 || ix >= w) continue;
                        const double* px = src + ((static_cast<std::size_t>(in) * h + iy) * w + ix) * c;
                        double* dst = row + (ky * 3 + kx) * c;
                        for (int ci = 0; ci < c; ++ci) dst[ci] = px[ci];
                    }
                }
            }
        }
    }
}

// Scatter-adds an im2col-shaped gradient back onto the input layout.
void col2im(const RowMatX& dcol, int stride, Tensor& dx, int oh, int ow) {
    const int n = dx.n(), h = dx.h(), w = dx.w(), c = dx.c();
    double* dst = dx.data();
    for (int in = 0; in < n; ++in) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                const double* row = dcol.row((static_cast<Eigen::Index>(in) * oh + oy) * ow + ox).data();
                for (int ky = 0; ky < 3; ++ky) {
                    const int iy = oy * stride + ky - 1;
                    if (iy < 0 || iy >= h) continue;
                    for (int kx = 0; kx < 3; ++kx) {
                        const int ix = ox * stride + kx - 1;
                        if (ix < 0 || ix >= w) continue;
                        double* px = dst + ((static_cast<std::size_t>(in) * h + iy) * w + ix) * c;
                        const double* g = row + (ky * 3 + kx) * c;
                        for (int ci = 0; ci < c; ++ci) px[ci] += g[ci];
                    }
                }
            }
        }
    }
}

}  // namespace

ConvParams conv_init(int in_ch, int out_ch, int stride, Rng& rng) {
    ConvParams p;
    p.in_ch = in_ch;
    p.out_ch = out_ch;
    p.stride = stride;
    p.weight.resize(9 * in_ch, out_ch);
    // Fan-in scaled normal init: std = sqrt(2 / (9 * in_ch)).
    const double std = std::sqrt(2.0 / (9.0 * in_ch));
    for (Eigen::Index i = 0; i < p.weight.rows(); ++i)
        for (Eigen::Index j = 0; j < p.weight.cols(); ++j)
            p.weight(i, j) = std * rng.normal();
    return p;
}

Tensor conv_forward(const ConvParams& p, const Tensor& x, ConvCache* cache) {
    if (x.c() != p.in_ch) {
        throw std::invalid_argument("conv_forward: expected " + std::to_string(p.in_ch) +
                                    " input channels, got " + std::to_string(x.c()));
    }
    const int oh = (x.h() + 2 - 3) / p.stride + 1;
    const int ow = (x.w() + 2 - 3) / p.stride + 1;
    ConvCache local;
    ConvCache& c = cache ? *cache : local;
    c.n = x.n();
    c.ih = x.h();
    c.iw = x.w();
    c.oh = oh;
    c.ow = ow;
    im2col(x, p.stride, c.col, oh, ow);

    Tensor y(x.n(), oh, ow, p.out_ch);
    Eigen::Map<RowMatX> ymap(y.data(), c.col.rows(), p.out_ch);
    ymap.noalias() = c.col * p.weight;
    return y;
}

Tensor conv_backward(const ConvParams& p, const ConvCache& cache, const Tensor& dy, RowMatX& gw) {
    Eigen::Map<const RowMatX> dymap(dy.data(), cache.col.rows(), p.out_ch);
    gw.noalias() += cache.col.transpose() * dymap;

    RowMatX dcol(cache.col.rows(), cache.col.cols());
    dcol.noalias() = dymap * p.weight.transpose();

    Tensor dx(cache.n, cache.ih, cache.iw, p.in_ch);
    col2im(dcol, p.stride, dx, cache.oh, cache.ow);
    return dx;
}

BnParams bn_init(int channels) {
    BnParams p;
    p.gamma = VecX::Ones(channels);
    p.beta = VecX::Zero(channels);
    p.running_mean = VecX::Zero(channels);
    p.running_var = VecX::Ones(channels);
    return p;
}

Tensor bn_forward(const BnParams& p, const Tensor& x, bool use_batch_stats, BnCache* cache) {
    const int c = x.c();
    const std::size_t spatial = x.size() / c;

    VecX mean(c), var(c);
    if (use_batch_stats) {
        mean.setZero();
        var.setZero();
        const double* px = x.data();
        for (std::size_t i = 0; i < spatial; ++i, px += c)
            for (int j = 0; j < c; ++j) mean[j] += px[j];
        mean /= static_cast<double>(spatial);
        px = x.data();
        for (std::size_t i = 0; i < spatial; ++i, px += c)
            for (int j = 0; j < c; ++j) {
                const double d = px[j] - mean[j];
                var[j] += d * d;
            }
        var /= static_cast<double>(spatial);
    } else {
        mean = p.running_mean;
        var = p.running_var;
    }

    VecX inv_std(c);
    for (int j = 0; j < c; ++j) inv_std[j] = 1.0 / std::sqrt(var[j] + p.epsilon);

    Tensor y = Tensor::zeros_like(x);
    Tensor x_hat = Tensor::zeros_like(x);
    const double* px = x.data();
    double* pxh = x_hat.data();
    double* py = y.data();
    for (std::size_t i = 0; i < spatial; ++i, px += c, pxh += c, py += c) {
        for (int j = 0; j < c; ++j) {
            const double xh = (px[j] - mean[j]) * inv_std[j];
            pxh[j] = xh;
            py[j] = p.gamma[j] * xh + p.beta[j];
        }
    }

    if (cache) {
        cache->mean = std::move(mean);
        cache->var = std::move(var);
        cache->inv_std = std::move(inv_std);
        cache->x_hat = std::move(x_hat);
    }
    return y;
}

Tensor bn_backward(const BnParams& p, const BnCache& cache, const Tensor& dy,
                   VecX& g_gamma, VecX& g_beta) {
    const int c = dy.c();
    const std::size_t spatial = dy.size() / c;
    const double inv_n = 1.0 / static_cast<double>(spatial);

    VecX sum_dy = VecX::Zero(c);
    VecX sum_dy_xhat = VecX::Zero(c);
    const double* pdy = dy.data();
    const double* pxh = cache.x_hat.data();
    for (std::size_t i = 0; i < spatial; ++i, pdy += c, pxh += c) {
        for (int j = 0; j < c; ++j) {
            sum_dy[j] += pdy[j];
            sum_dy_xhat[j] += pdy[j] * pxh[j];
        }
    }
    g_beta += sum_dy;
    g_gamma += sum_dy_xhat;

    // dx = gamma * inv_std * (dy - mean(dy) - x_hat * mean(dy * x_hat))
    Tensor dx = Tensor::zeros_like(dy);
    pdy = dy.data();
    pxh = cache.x_hat.data();
    double* pdx = dx.data();
    for (std::size_t i = 0; i < spatial; ++i, pdy += c, pxh += c, pdx += c) {
        for (int j = 0; j < c; ++j) {
            pdx[j] = p.gamma[j] * cache.inv_std[j] *
                     (pdy[j] - sum_dy[j] * inv_n - pxh[j] * sum_dy_xhat[j] * inv_n);
        }
    }
    return dx;
}

void bn_update_running(BnParams& p, const BnCache& cache) {
    p.running_mean = p.momentum * p.running_mean + (1.0 - p.momentum) * cache.mean;
    p.running_var = p.momentum * p.running_var + (1.0 - p.momentum) * cache.var;
}

Tensor relu_forward(const Tensor& x) {
    Tensor y = x;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (y[i] < 0.0) y[i] = 0.0;
    return y;
}

Tensor relu_backward(const Tensor& y, const Tensor& dy) {
    Tensor dx = dy;
    for (std::size_t i = 0; i < dx.size(); ++i)
        if (y[i] <= 0.0) dx[i] = 0.0;
    return dx;
}

RowMatX global_avg_pool(const Tensor& x) {
    const int n = x.n(), c = x.c();
    const int hw = x.h() * x.w();
    RowMatX out = RowMatX::Zero(n, c);
    const double* px = x.data();
    for (int in = 0; in < n; ++in) {
        for (int i = 0; i < hw; ++i, px += c)
            for (int j = 0; j < c; ++j) out(in, j) += px[j];
    }
    out /= static_cast<double>(hw);
    return out;
}

Tensor global_avg_pool_backward(const RowMatX& dy, int h, int w) {
    const int n = static_cast<int>(dy.rows());
    const int c = static_cast<int>(dy.cols());
    const double inv_hw = 1.0 / (h * w);
    Tensor dx(n, h, w, c);
    double* pdx = dx.data();
    for (int in = 0; in < n; ++in) {
        for (int i = 0; i < h * w; ++i, pdx += c)
            for (int j = 0; j < c; ++j) pdx[j] = dy(in, j) * inv_hw;
    }
    return dx;
}

DenseParams dense_init(int in_dim, int out_dim, Rng& rng) {
    DenseParams p;
    p.weight.resize(in_dim, out_dim);
    const double std = std::sqrt(2.0 / in_dim);
    for (Eigen::Index i = 0; i < p.weight.rows(); ++i)
        for (Eigen::Index j = 0; j < p.weight.cols(); ++j)
            p.weight(i, j) = std * rng.normal();
    p.bias = VecX::Zero(out_dim);
    return p;
}

RowMatX dense_forward(const DenseParams& p, const RowMatX& x) {
    RowMatX y = x * p.weight;
    y.rowwise() += p.bias.transpose();
    return y;
}

RowMatX dense_backward(const DenseParams& p, const RowMatX& x, const RowMatX& dy,
                       RowMatX& gw, VecX& gb) {
    gw.noalias() += x.transpose() * dy;
    gb += dy.colwise().sum();
    return dy * p.weight.transpose();
}

RowMatX softmax(const RowMatX& logits) {
    RowMatX p = logits;
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        const double m = p.row(i).maxCoeff();
        p.row(i) = (p.row(i).array() - m).exp();
        p.row(i) /= p.row(i).sum();
    }
    return p;
}

RowMatX softmax_xent_grad(const RowMatX& probs, const std::vector<int>& labels) {
    RowMatX d = probs;
    const double inv_n = 1.0 / static_cast<double>(probs.rows());
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        d(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
        d.row(i) *= inv_n;
    }
    return d;
}

}  // namespace pairfuse::nn
