#pragma once

#include <cstdint>

#include "pairfuse/nn.hpp"
#include "pairfuse/tensor.hpp"

namespace pairfuse {

// Multimodal transfer module. Squeezes both streams' feature maps to channel
// means, fuses them through a joint projection and emits one channel-gating
// signal per stream in (0, 2); each stream is reweighted channel-wise and the
// gated maps feed forward in both streams.
struct MMTMWeights {
    int c1 = 0, c2 = 0, cz = 0;  // cz = max(4, floor((c1 + c2) / 4))
    nn::RowMatX joint_weight;    // (c1 + c2) x cz
    nn::VecX joint_bias;         // cz
    nn::RowMatX excite_weight_1; // cz x c1
    nn::VecX excite_bias_1;      // c1
    nn::RowMatX excite_weight_2; // cz x c2
    nn::VecX excite_bias_2;      // c2
};

struct GatingSignals {
    nn::RowMatX s1;  // n x c1, every element in (0, 2)
    nn::RowMatX s2;  // n x c2
};

struct MMTMOutput {
    Tensor f1, f2;
    GatingSignals signals;
};

struct MMTMCache {
    Tensor f1_in, f2_in;
    nn::RowMatX u;       // n x (c1 + c2) squeezed means
    nn::RowMatX z;       // n x cz after ReLU
    GatingSignals signals;
};

struct MMTMGrads {
    nn::RowMatX joint_weight, excite_weight_1, excite_weight_2;
    nn::VecX joint_bias, excite_bias_1, excite_bias_2;
};

MMTMWeights mmtm_init(int c1, int c2, std::uint64_t seed);
MMTMGrads mmtm_grads_like(const MMTMWeights& w);

MMTMOutput mmtm_forward(const Tensor& f1, const Tensor& f2, const MMTMWeights& w,
                        MMTMCache* cache = nullptr);

// Returns (df1, df2) and accumulates parameter gradients.
std::pair<Tensor, Tensor> mmtm_backward(const MMTMWeights& w, const MMTMCache& cache,
                                        const Tensor& df1_out, const Tensor& df2_out,
                                        MMTMGrads& grads);

}  // namespace pairfuse
