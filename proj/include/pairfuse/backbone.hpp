#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pairfuse/nn.hpp"
#include "pairfuse/tensor.hpp"

namespace pairfuse {

enum class BackboneKind { desknet, fullscale_b0 };

std::string to_string(BackboneKind k);
BackboneKind backbone_kind_from_string(const std::string& s);

// A backbone is a ladder of conv(3x3) -> batch-norm -> ReLU stages. Stages are
// 1-indexed; mmtm_tap_stages names the stages whose outputs feed MMTM blocks.
struct BackboneConfig {
    BackboneKind name = BackboneKind::desknet;
    int input_height = 0;
    int input_width = 0;
    std::vector<int> stage_channels;
    std::vector<int> stage_strides;
    std::vector<int> mmtm_tap_stages;
    std::string pretrained_weights_path;  // fullscale only, optional

    int num_stages() const { return static_cast<int>(stage_channels.size()); }
    int final_channels() const { return stage_channels.back(); }
};

// DeskNet: 64x64x3 input, four stride-2 stages [16, 32, 64, 128], taps 2/3/4.
BackboneConfig desknet_config();

// Full-scale ladder mirroring EfficientNet-B0 stage geometry: a stride-2 stem,
// seven body stages and a 1280-channel projection, for 224x224x3 inputs.
// Ladder stages 6/7/8 (the body stages with 112/192/320 channels) are the tap
// points; they sit where B0's stages 5/6/7 sit in the downsampling schedule.
BackboneConfig fullscale_b0_config();

struct StageWeights {
    nn::ConvParams conv;
    nn::BnParams bn;
};

struct BackboneWeights {
    std::vector<StageWeights> stages;
};

struct StageFeatureMap {
    int stage_index = 0;  // 1-indexed
    Tensor tensor;
};

// Deterministic seeded initialization (fan-in scaled normal conv weights,
// identity batch-norm). Both configs use the same scheme.
BackboneWeights backbone_init(const BackboneConfig& cfg, std::uint64_t seed);
inline BackboneWeights desknet_init(std::uint64_t seed) { return backbone_init(desknet_config(), seed); }

struct StageTrace {
    Tensor input;
    nn::ConvCache conv;
    nn::BnCache bn;
    Tensor relu_out;
};

struct BackboneGrads {
    std::vector<nn::RowMatX> conv_w;
    std::vector<nn::VecX> bn_gamma, bn_beta;
};

BackboneGrads backbone_grads_like(const BackboneWeights& w);

// Output spatial size per stage for a given input, without running anything.
std::vector<std::array<int, 3>> stage_output_shapes(const BackboneConfig& cfg, int input_h, int input_w);

// Runs every stage and returns all stage feature maps in order; the last map
// is the classification feature map. The input must match the configured
// size, except that a doubled width is accepted (early fusion concatenates
// the two modalities side by side).
std::vector<StageFeatureMap> forward_stages(const Tensor& image, const BackboneWeights& weights,
                                            const BackboneConfig& cfg, bool training = false);

// Single-stage helpers used by the fusion models, which interleave MMTM
// blocks between stages.
Tensor stage_forward(const StageWeights& w, const Tensor& x, bool training, StageTrace* trace);
Tensor stage_backward(const StageWeights& w, const StageTrace& trace, const Tensor& dy,
                      nn::RowMatX& g_conv, nn::VecX& g_gamma, nn::VecX& g_beta);

void validate_backbone_input(const BackboneConfig& cfg, const Tensor& image, bool allow_double_width);

}  // namespace pairfuse
