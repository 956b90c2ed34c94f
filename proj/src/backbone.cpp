#include "pairfuse/backbone.hpp"

#include <array>
#include <stdexcept>

namespace pairfuse {

std::string to_string(BackboneKind k) {
    return k == BackboneKind::desknet ? "desknet" : "fullscale-b0";
}

BackboneKind backbone_kind_from_string(const std::string& s) {
    if (s == "desknet") return BackboneKind::desknet;
    if (s == "fullscale-b0") return BackboneKind::fullscale_b0;
    throw std::invalid_argument("unknown backbone kind: " + s);
}

BackboneConfig desknet_config() {
    BackboneConfig cfg;
    cfg.name = BackboneKind::desknet;
    cfg.input_height = 64;
    cfg.input_width = 64;
    cfg.stage_channels = {16, 32, 64, 128};
    cfg.stage_strides = {2, 2, 2, 2};
    cfg.mmtm_tap_stages = {2, 3, 4};
    return cfg;
}

BackboneConfig fullscale_b0_config() {
    BackboneConfig cfg;
    cfg.name = BackboneKind::fullscale_b0;
    cfg.input_height = 224;
    cfg.input_width = 224;
    // Stem, seven body stages, 1280-channel projection. Spatial schedule
    // 224 -> 112 -> 112 -> 56 -> 28 -> 14 -> 14 -> 7 -> 7 -> 7.
    cfg.stage_channels = {32, 16, 24, 40, 80, 112, 192, 320, 1280};
    cfg.stage_strides = {2, 1, 2, 2, 2, 1, 2, 1, 1};
    cfg.mmtm_tap_stages = {6, 7, 8};
    return cfg;
}

BackboneWeights backbone_init(const BackboneConfig& cfg, std::uint64_t seed) {
    BackboneWeights w;
    int in_ch = 3;
    for (int s = 0; s < cfg.num_stages(); ++s) {
        Rng rng = Rng::derive(seed, "stage" + std::to_string(s + 1));
        StageWeights sw;
        sw.conv = nn::conv_init(in_ch, cfg.stage_channels[s], cfg.stage_strides[s], rng);
        sw.bn = nn::bn_init(cfg.stage_channels[s]);
        w.stages.push_back(std::move(sw));
        in_ch = cfg.stage_channels[s];
    }
    return w;
}

BackboneGrads backbone_grads_like(const BackboneWeights& w) {
    BackboneGrads g;
    for (const auto& s : w.stages) {
        g.conv_w.push_back(nn::RowMatX::Zero(s.conv.weight.rows(), s.conv.weight.cols()));
        g.bn_gamma.push_back(nn::VecX::Zero(s.bn.gamma.size()));
        g.bn_beta.push_back(nn::VecX::Zero(s.bn.beta.size()));
    }
    return g;
}

std::vector<std::array<int, 3>> stage_output_shapes(const BackboneConfig& cfg, int input_h, int input_w) {
    std::vector<std::array<int, 3>> shapes;
    int h = input_h, w = input_w;
    for (int s = 0; s < cfg.num_stages(); ++s) {
        const int stride = cfg.stage_strides[s];
        h = (h + 2 - 3) / stride + 1;
        w = (w + 2 - 3) / stride + 1;
        shapes.push_back({h, w, cfg.stage_channels[s]});
    }
    return shapes;
}

void validate_backbone_input(const BackboneConfig& cfg, const Tensor& image, bool allow_double_width) {
    const bool ok_width = image.w() == cfg.input_width ||
                          (allow_double_width && image.w() == 2 * cfg.input_width);
    if (image.h() != cfg.input_height || !ok_width || image.c() != 3) {
        std::string expected = std::to_string(cfg.input_height) + "x" +
                               std::to_string(cfg.input_width) +
                               (allow_double_width ? " (or doubled width)" : "") + "x3";
        throw std::invalid_argument("backbone input shape mismatch: expected " + expected +
                                    ", got " + std::to_string(image.h()) + "x" +
                                    std::to_string(image.w()) + "x" + std::to_string(image.c()));
    }
}

Tensor stage_forward(const StageWeights& w, const Tensor& x, bool training, StageTrace* trace) {
    Tensor conv_out = nn::conv_forward(w.conv, x, trace ? &trace->conv : nullptr);
    Tensor bn_out = nn::bn_forward(w.bn, conv_out, training, trace ? &trace->bn : nullptr);
    Tensor out = nn::relu_forward(bn_out);
    if (trace) {
        trace->input = x;
        trace->relu_out = out;
    }
    return out;
}

Tensor stage_backward(const StageWeights& w, const StageTrace& trace, const Tensor& dy,
                      nn::RowMatX& g_conv, nn::VecX& g_gamma, nn::VecX& g_beta) {
    Tensor d_bn = nn::relu_backward(trace.relu_out, dy);
    Tensor d_conv = nn::bn_backward(w.bn, trace.bn, d_bn, g_gamma, g_beta);
    return nn::conv_backward(w.conv, trace.conv, d_conv, g_conv);
}

std::vector<StageFeatureMap> forward_stages(const Tensor& image, const BackboneWeights& weights,
                                            const BackboneConfig& cfg, bool training) {
    validate_backbone_input(cfg, image, /*allow_double_width=*/true);
    std::vector<StageFeatureMap> maps;
    Tensor x = image;
    for (int s = 0; s < cfg.num_stages(); ++s) {
        x = stage_forward(weights.stages[s], x, training, nullptr);
        maps.push_back({s + 1, x});
    }
    return maps;
}

}  // namespace pairfuse
