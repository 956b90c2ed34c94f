#pragma once

#include <Eigen/Dense>

#include "pairfuse/rng.hpp"
#include "pairfuse/tensor.hpp"

namespace pairfuse::nn {

using MatX = Eigen::MatrixXd;
using RowMatX = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using VecX = Eigen::VectorXd;

// ---------------------------------------------------------------------------
// 3x3 convolution, padding 1, no bias (a batch-norm shift always follows).
// Weight rows are ordered (ky, kx, c_in) to match the im2col column layout;
// the logical weight shape is (3, 3, c_in, c_out).
// ---------------------------------------------------------------------------
struct ConvParams {
    int in_ch = 0;
    int out_ch = 0;
    int stride = 1;
    RowMatX weight;  // (9 * in_ch) x out_ch

    double& at(int ky, int kx, int ci, int co) { return weight((ky * 3 + kx) * in_ch + ci, co); }
    double at(int ky, int kx, int ci, int co) const { return weight((ky * 3 + kx) * in_ch + ci, co); }
};

struct ConvCache {
    RowMatX col;  // (n * oh * ow) x (9 * in_ch)
    int n = 0, ih = 0, iw = 0, oh = 0, ow = 0;
};

ConvParams conv_init(int in_ch, int out_ch, int stride, Rng& rng);
Tensor conv_forward(const ConvParams& p, const Tensor& x, ConvCache* cache);
// Returns dx; accumulates the weight gradient into gw.
Tensor conv_backward(const ConvParams& p, const ConvCache& cache, const Tensor& dy, RowMatX& gw);

// ---------------------------------------------------------------------------
// Per-channel batch normalization over (n, h, w). Batch statistics during
// training, running statistics at inference; variance is the population
// variance in both places.
// ---------------------------------------------------------------------------
struct BnParams {
    VecX gamma, beta;
    VecX running_mean, running_var;
    double momentum = 0.9;
    double epsilon = 1e-5;
};

struct BnCache {
    VecX mean, var, inv_std;
    Tensor x_hat;
};

BnParams bn_init(int channels);
Tensor bn_forward(const BnParams& p, const Tensor& x, bool use_batch_stats, BnCache* cache);
Tensor bn_backward(const BnParams& p, const BnCache& cache, const Tensor& dy,
                   VecX& g_gamma, VecX& g_beta);
void bn_update_running(BnParams& p, const BnCache& cache);

// ---------------------------------------------------------------------------
// ReLU, global average pooling, dense head, softmax.
// ---------------------------------------------------------------------------
Tensor relu_forward(const Tensor& x);
Tensor relu_backward(const Tensor& y, const Tensor& dy);  // y is the forward output

// (n, h, w, c) -> n x c matrix of spatial means.
RowMatX global_avg_pool(const Tensor& x);
Tensor global_avg_pool_backward(const RowMatX& dy, int h, int w);

struct DenseParams {
    RowMatX weight;  // in x out
    VecX bias;
};

DenseParams dense_init(int in_dim, int out_dim, Rng& rng);
RowMatX dense_forward(const DenseParams& p, const RowMatX& x);
RowMatX dense_backward(const DenseParams& p, const RowMatX& x, const RowMatX& dy,
                       RowMatX& gw, VecX& gb);

// Row-wise softmax with max subtraction.
RowMatX softmax(const RowMatX& logits);
// d(mean cross-entropy)/d(logits) = (softmax - onehot) / n.
RowMatX softmax_xent_grad(const RowMatX& probs, const std::vector<int>& labels);

}  // namespace pairfuse::nn
