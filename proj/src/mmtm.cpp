#include "pairfuse/mmtm.hpp"

#include <cmath>
#include <stdexcept>

namespace pairfuse {

namespace {

// n x c matrix of spatial means, one row per sample.
nn::RowMatX squeeze(const Tensor& f) {
    return nn::global_avg_pool(f);
}

void scale_channels(const Tensor& in, const nn::RowMatX& s, Tensor& out) {
    const int c = in.c();
    const int hw = in.h() * in.w();
    const double* src = in.data();
    double* dst = out.data();
    for (int n = 0; n < in.n(); ++n) {
        for (int i = 0; i < hw; ++i, src += c, dst += c)
            for (int j = 0; j < c; ++j) dst[j] = src[j] * s(n, j);
    }
}

}  // namespace

MMTMWeights mmtm_init(int c1, int c2, std::uint64_t seed) {
    if (c1 < 1 || c2 < 1) {
        throw std::invalid_argument("mmtm_init: channel counts must be positive, got c1=" +
                                    std::to_string(c1) + " c2=" + std::to_string(c2));
    }
    MMTMWeights w;
    w.c1 = c1;
    w.c2 = c2;
    w.cz = std::max(4, (c1 + c2) / 4);

    Rng rng(seed);
    auto fill = [&rng](nn::RowMatX& m, int fan_in) {
        const double std = std::sqrt(2.0 / fan_in);
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = std * rng.normal();
    };
    w.joint_weight.resize(c1 + c2, w.cz);
    fill(w.joint_weight, c1 + c2);
    w.excite_weight_1.resize(w.cz, c1);
    fill(w.excite_weight_1, w.cz);
    w.excite_weight_2.resize(w.cz, c2);
    fill(w.excite_weight_2, w.cz);
    w.joint_bias = nn::VecX::Zero(w.cz);
    w.excite_bias_1 = nn::VecX::Zero(c1);
    w.excite_bias_2 = nn::VecX::Zero(c2);
    return w;
}

MMTMGrads mmtm_grads_like(const MMTMWeights& w) {
    MMTMGrads g;
    g.joint_weight = nn::RowMatX::Zero(w.joint_weight.rows(), w.joint_weight.cols());
    g.excite_weight_1 = nn::RowMatX::Zero(w.excite_weight_1.rows(), w.excite_weight_1.cols());
    g.excite_weight_2 = nn::RowMatX::Zero(w.excite_weight_2.rows(), w.excite_weight_2.cols());
    g.joint_bias = nn::VecX::Zero(w.joint_bias.size());
    g.excite_bias_1 = nn::VecX::Zero(w.excite_bias_1.size());
    g.excite_bias_2 = nn::VecX::Zero(w.excite_bias_2.size());
    return g;
}

MMTMOutput mmtm_forward(const Tensor& f1, const Tensor& f2, const MMTMWeights& w, MMTMCache* cache) {
    if (f1.c() != w.c1 || f2.c() != w.c2) {
        throw std::invalid_argument("mmtm_forward: channel mismatch, weights expect (" +
                                    std::to_string(w.c1) + ", " + std::to_string(w.c2) +
                                    "), got (" + std::to_string(f1.c()) + ", " +
                                    std::to_string(f2.c()) + ")");
    }
    if (f1.n() != f2.n()) {
        throw std::invalid_argument("mmtm_forward: batch size mismatch");
    }
    const int n = f1.n();

    nn::RowMatX u(n, w.c1 + w.c2);
    u.leftCols(w.c1) = squeeze(f1);
    u.rightCols(w.c2) = squeeze(f2);

    nn::RowMatX z = u * w.joint_weight;
    z.rowwise() += w.joint_bias.transpose();
    z = z.cwiseMax(0.0);

    auto gate = [&z](const nn::RowMatX& we, const nn::VecX& be) {
        nn::RowMatX a = z * we;
        a.rowwise() += be.transpose();
        // 2 * sigmoid, elementwise in (0, 2).
        return (2.0 / (1.0 + (-a.array()).exp())).matrix();
    };
    GatingSignals sig{gate(w.excite_weight_1, w.excite_bias_1),
                      gate(w.excite_weight_2, w.excite_bias_2)};

    MMTMOutput out;
    out.f1 = Tensor::zeros_like(f1);
    out.f2 = Tensor::zeros_like(f2);
    scale_channels(f1, sig.s1, out.f1);
    scale_channels(f2, sig.s2, out.f2);
    out.signals = sig;

    if (cache) {
        cache->f1_in = f1;
        cache->f2_in = f2;
        cache->u = std::move(u);
        cache->z = std::move(z);
        cache->signals = out.signals;
    }
    return out;
}

std::pair<Tensor, Tensor> mmtm_backward(const MMTMWeights& w, const MMTMCache& cache,
                                        const Tensor& df1_out, const Tensor& df2_out,
                                        MMTMGrads& grads) {
    const int n = cache.f1_in.n();

    // ds[n, c] = sum_{h,w} d_out * f_in; direct product path d_in = d_out * s.
    auto gate_grad = [n](const Tensor& f_in, const Tensor& d_out, const nn::RowMatX& s,
                         Tensor& d_in, nn::RowMatX& ds) {
        const int c = f_in.c();
        const int hw = f_in.h() * f_in.w();
        ds.setZero(n, c);
        const double* pf = f_in.data();
        const double* pd = d_out.data();
        double* pi = d_in.data();
        for (int in = 0; in < n; ++in) {
            for (int i = 0; i < hw; ++i, pf += c, pd += c, pi += c)
                for (int j = 0; j < c; ++j) {
                    ds(in, j) += pd[j] * pf[j];
                    pi[j] = pd[j] * s(in, j);
                }
        }
    };

    Tensor df1 = Tensor::zeros_like(cache.f1_in);
    Tensor df2 = Tensor::zeros_like(cache.f2_in);
    nn::RowMatX ds1, ds2;
    gate_grad(cache.f1_in, df1_out, cache.signals.s1, df1, ds1);
    gate_grad(cache.f2_in, df2_out, cache.signals.s2, df2, ds2);

    // s = 2*sigmoid(a)  =>  ds/da = s * (1 - s/2).
    nn::RowMatX da1 = (ds1.array() * cache.signals.s1.array() *
                       (1.0 - cache.signals.s1.array() / 2.0)).matrix();
    nn::RowMatX da2 = (ds2.array() * cache.signals.s2.array() *
                       (1.0 - cache.signals.s2.array() / 2.0)).matrix();

    grads.excite_weight_1.noalias() += cache.z.transpose() * da1;
    grads.excite_weight_2.noalias() += cache.z.transpose() * da2;
    grads.excite_bias_1 += da1.colwise().sum();
    grads.excite_bias_2 += da2.colwise().sum();

    nn::RowMatX dz = da1 * w.excite_weight_1.transpose() + da2 * w.excite_weight_2.transpose();
    dz = (dz.array() * (cache.z.array() > 0.0).cast<double>()).matrix();

    grads.joint_weight.noalias() += cache.u.transpose() * dz;
    grads.joint_bias += dz.colwise().sum();

    nn::RowMatX du = dz * w.joint_weight.transpose();

    // Squeeze backward: every pixel of channel c receives du[c] / (h*w).
    auto add_squeeze_grad = [n](const nn::RowMatX& du_part, Tensor& d_in) {
        const int c = d_in.c();
        const int hw = d_in.h() * d_in.w();
        const double inv_hw = 1.0 / hw;
        double* pd = d_in.data();
        for (int in = 0; in < n; ++in) {
            for (int i = 0; i < hw; ++i, pd += c)
                for (int j = 0; j < c; ++j) pd[j] += du_part(in, j) * inv_hw;
        }
    };
    add_squeeze_grad(du.leftCols(w.c1), df1);
    add_squeeze_grad(du.rightCols(w.c2), df2);

    return {std::move(df1), std::move(df2)};
}

}  // namespace pairfuse
