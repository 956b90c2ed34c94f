#include "pairfuse/fusion.hpp"

#include <algorithm>
#include <stdexcept>

namespace pairfuse {

std::string to_string(ArchitectureKind k) {
    switch (k) {
        case ArchitectureKind::early: return "early";
        case ArchitectureKind::late: return "late";
        case ArchitectureKind::intermediate: return "intermediate";
    }
    return "?";
}

ArchitectureKind architecture_from_string(const std::string& s) {
    if (s == "early") return ArchitectureKind::early;
    if (s == "late") return ArchitectureKind::late;
    if (s == "intermediate") return ArchitectureKind::intermediate;
    throw std::invalid_argument("unknown architecture kind: " + s);
}

namespace {

// Facade on the left, interior on the right.
Tensor concat_width(const Tensor& a, const Tensor& b) {
    Tensor out(a.n(), a.h(), a.w() + b.w(), a.c());
    for (int n = 0; n < a.n(); ++n)
        for (int h = 0; h < a.h(); ++h) {
            for (int w = 0; w < a.w(); ++w)
                for (int c = 0; c < a.c(); ++c) out.at(n, h, w, c) = a.at(n, h, w, c);
            for (int w = 0; w < b.w(); ++w)
                for (int c = 0; c < b.c(); ++c) out.at(n, h, a.w() + w, c) = b.at(n, h, w, c);
        }
    return out;
}

bool is_tap(const BackboneConfig& cfg, int stage_1indexed) {
    return std::find(cfg.mmtm_tap_stages.begin(), cfg.mmtm_tap_stages.end(), stage_1indexed) !=
           cfg.mmtm_tap_stages.end();
}

}  // namespace

FusionModel build_model(ArchitectureKind kind, const BackboneConfig& backbone, int num_classes,
                        std::uint64_t seed, std::vector<std::string> class_names) {
    if (num_classes < 2) {
        throw std::invalid_argument("build_model: num_classes must be >= 2, got " +
                                    std::to_string(num_classes));
    }
    if (!class_names.empty() && static_cast<int>(class_names.size()) != num_classes) {
        throw std::invalid_argument("build_model: class name count does not match num_classes");
    }
    FusionModel m;
    m.kind = kind;
    m.backbone = backbone;
    m.num_classes = num_classes;
    m.class_names = std::move(class_names);

    m.stream1 = backbone_init(backbone, hash_combine(seed, "stream1"));
    if (m.two_stream()) {
        m.stream2 = backbone_init(backbone, hash_combine(seed, "stream2"));
    }
    if (kind == ArchitectureKind::intermediate) {
        for (int tap : backbone.mmtm_tap_stages) {
            const int c = backbone.stage_channels[tap - 1];
            m.mmtm_blocks.push_back(mmtm_init(c, c, hash_combine(seed, "mmtm" + std::to_string(tap))));
        }
    }
    Rng head_rng = Rng::derive(seed, "head");
    m.head = nn::dense_init(m.feature_dim(), num_classes, head_rng);  // zero bias
    return m;
}

ModelGrads model_grads_like(const FusionModel& m) {
    ModelGrads g;
    g.stream1 = backbone_grads_like(m.stream1);
    if (m.two_stream()) g.stream2 = backbone_grads_like(m.stream2);
    for (const auto& b : m.mmtm_blocks) g.mmtm.push_back(mmtm_grads_like(b));
    g.head_w = nn::RowMatX::Zero(m.head.weight.rows(), m.head.weight.cols());
    g.head_b = nn::VecX::Zero(m.head.bias.size());
    return g;
}

nn::RowMatX model_forward(const FusionModel& m, const Tensor& facade, const Tensor& interior,
                          bool training, ModelTrace* trace) {
    validate_backbone_input(m.backbone, facade, false);
    validate_backbone_input(m.backbone, interior, false);
    if (facade.n() != interior.n()) {
        throw std::invalid_argument("model_forward: facade/interior batch size mismatch");
    }
    const int stages = m.backbone.num_stages();
    if (trace) {
        trace->s1.assign(stages, {});
        if (m.two_stream()) trace->s2.assign(stages, {});
        trace->mmtm.assign(m.mmtm_blocks.size(), {});
    }

    nn::RowMatX features;
    int fh = 0, fw = 0;
    if (m.kind == ArchitectureKind::early) {
        Tensor x = concat_width(facade, interior);
        for (int s = 0; s < stages; ++s)
            x = stage_forward(m.stream1.stages[s], x, training, trace ? &trace->s1[s] : nullptr);
        fh = x.h();
        fw = x.w();
        features = nn::global_avg_pool(x);
    } else {
        Tensor x1 = facade, x2 = interior;
        std::size_t block = 0;
        for (int s = 0; s < stages; ++s) {
            x1 = stage_forward(m.stream1.stages[s], x1, training, trace ? &trace->s1[s] : nullptr);
            x2 = stage_forward(m.stream2.stages[s], x2, training, trace ? &trace->s2[s] : nullptr);
            if (m.kind == ArchitectureKind::intermediate && is_tap(m.backbone, s + 1)) {
                MMTMOutput out = mmtm_forward(x1, x2, m.mmtm_blocks[block],
                                              trace ? &trace->mmtm[block] : nullptr);
                x1 = std::move(out.f1);
                x2 = std::move(out.f2);
                ++block;
            }
        }
        fh = x1.h();
        fw = x1.w();
        // Channel concatenation of the final maps, stream 1 first; pooling and
        // concatenation commute, so pool per stream and join the vectors.
        const int c = m.backbone.final_channels();
        features.resize(x1.n(), 2 * c);
        features.leftCols(c) = nn::global_avg_pool(x1);
        features.rightCols(c) = nn::global_avg_pool(x2);
    }

    if (trace) {
        trace->features = features;
        trace->final_h = fh;
        trace->final_w = fw;
    }
    return nn::dense_forward(m.head, features);
}

void model_backward(const FusionModel& m, const ModelTrace& trace, const nn::RowMatX& dlogits,
                    ModelGrads& grads) {
    nn::RowMatX dfeatures = nn::dense_backward(m.head, trace.features, dlogits, grads.head_w, grads.head_b);
    const int stages = m.backbone.num_stages();

    if (m.kind == ArchitectureKind::early) {
        Tensor dx = nn::global_avg_pool_backward(dfeatures, trace.final_h, trace.final_w);
        for (int s = stages - 1; s >= 0; --s) {
            dx = stage_backward(m.stream1.stages[s], trace.s1[s], dx, grads.stream1.conv_w[s],
                                grads.stream1.bn_gamma[s], grads.stream1.bn_beta[s]);
        }
        return;
    }

    const int c = m.backbone.final_channels();
    Tensor dx1 = nn::global_avg_pool_backward(dfeatures.leftCols(c), trace.final_h, trace.final_w);
    Tensor dx2 = nn::global_avg_pool_backward(dfeatures.rightCols(c), trace.final_h, trace.final_w);
    int block = static_cast<int>(m.mmtm_blocks.size()) - 1;
    for (int s = stages - 1; s >= 0; --s) {
        if (m.kind == ArchitectureKind::intermediate && is_tap(m.backbone, s + 1)) {
            auto [d1, d2] = mmtm_backward(m.mmtm_blocks[block], trace.mmtm[block], dx1, dx2,
                                          grads.mmtm[block]);
            dx1 = std::move(d1);
            dx2 = std::move(d2);
            --block;
        }
        dx1 = stage_backward(m.stream1.stages[s], trace.s1[s], dx1, grads.stream1.conv_w[s],
                             grads.stream1.bn_gamma[s], grads.stream1.bn_beta[s]);
        dx2 = stage_backward(m.stream2.stages[s], trace.s2[s], dx2, grads.stream2.conv_w[s],
                             grads.stream2.bn_gamma[s], grads.stream2.bn_beta[s]);
    }
}

void update_bn_running(FusionModel& m, const ModelTrace& trace) {
    for (std::size_t s = 0; s < m.stream1.stages.size(); ++s)
        nn::bn_update_running(m.stream1.stages[s].bn, trace.s1[s].bn);
    if (m.two_stream())
        for (std::size_t s = 0; s < m.stream2.stages.size(); ++s)
            nn::bn_update_running(m.stream2.stages[s].bn, trace.s2[s].bn);
}

Prediction predict(const FusionModel& m, const Tensor& facade, const Tensor& interior) {
    nn::RowMatX logits = model_forward(m, facade, interior, /*training=*/false, nullptr);
    nn::RowMatX probs = nn::softmax(logits);
    Prediction p;
    p.probabilities = probs.row(0).transpose();
    p.predicted_class = 0;
    for (int k = 1; k < m.num_classes; ++k)
        if (p.probabilities[k] > p.probabilities[p.predicted_class]) p.predicted_class = k;
    return p;
}

namespace {

void add_stream_params(const std::string& prefix, BackboneWeights& w, BackboneGrads& g,
                       std::vector<ParamView>& out) {
    for (std::size_t s = 0; s < w.stages.size(); ++s) {
        const std::string base = prefix + ".stage" + std::to_string(s + 1);
        auto& st = w.stages[s];
        out.push_back({base + ".conv.weight", st.conv.weight.data(), g.conv_w[s].data(),
                       static_cast<std::size_t>(st.conv.weight.size())});
        out.push_back({base + ".bn.gamma", st.bn.gamma.data(), g.bn_gamma[s].data(),
                       static_cast<std::size_t>(st.bn.gamma.size())});
        out.push_back({base + ".bn.beta", st.bn.beta.data(), g.bn_beta[s].data(),
                       static_cast<std::size_t>(st.bn.beta.size())});
    }
}

}  // namespace

std::vector<ParamView> collect_params(FusionModel& m, ModelGrads& g) {
    std::vector<ParamView> out;
    add_stream_params("stream1", m.stream1, g.stream1, out);
    if (m.two_stream()) add_stream_params("stream2", m.stream2, g.stream2, out);
    for (std::size_t b = 0; b < m.mmtm_blocks.size(); ++b) {
        const std::string base = "mmtm." + std::to_string(m.backbone.mmtm_tap_stages[b]);
        auto& w = m.mmtm_blocks[b];
        auto& gb = g.mmtm[b];
        out.push_back({base + ".joint_weight", w.joint_weight.data(), gb.joint_weight.data(),
                       static_cast<std::size_t>(w.joint_weight.size())});
        out.push_back({base + ".joint_bias", w.joint_bias.data(), gb.joint_bias.data(),
                       static_cast<std::size_t>(w.joint_bias.size())});
        out.push_back({base + ".excite_weight_1", w.excite_weight_1.data(), gb.excite_weight_1.data(),
                       static_cast<std::size_t>(w.excite_weight_1.size())});
        out.push_back({base + ".excite_bias_1", w.excite_bias_1.data(), gb.excite_bias_1.data(),
                       static_cast<std::size_t>(w.excite_bias_1.size())});
        out.push_back({base + ".excite_weight_2", w.excite_weight_2.data(), gb.excite_weight_2.data(),
                       static_cast<std::size_t>(w.excite_weight_2.size())});
        out.push_back({base + ".excite_bias_2", w.excite_bias_2.data(), gb.excite_bias_2.data(),
                       static_cast<std::size_t>(w.excite_bias_2.size())});
    }
    out.push_back({"head.weight", m.head.weight.data(), g.head_w.data(),
                   static_cast<std::size_t>(m.head.weight.size())});
    out.push_back({"head.bias", m.head.bias.data(), g.head_b.data(),
                   static_cast<std::size_t>(m.head.bias.size())});
    return out;
}

namespace {

template <typename View, typename Model>
std::vector<View> enumerate_tensors(Model& m) {
    std::vector<View> out;
    auto add_mat = [&out](const std::string& name, auto& mat, std::vector<int> shape) {
        out.push_back({name, std::move(shape), mat.data(), static_cast<std::size_t>(mat.size())});
    };
    auto add_stream = [&](const std::string& prefix, auto& stream) {
        for (std::size_t s = 0; s < stream.stages.size(); ++s) {
            const std::string base = prefix + ".stage" + std::to_string(s + 1);
            auto& st = stream.stages[s];
            add_mat(base + ".conv.weight", st.conv.weight, {3, 3, st.conv.in_ch, st.conv.out_ch});
            const int c = static_cast<int>(st.bn.gamma.size());
            add_mat(base + ".bn.gamma", st.bn.gamma, {c});
            add_mat(base + ".bn.beta", st.bn.beta, {c});
            add_mat(base + ".bn.running_mean", st.bn.running_mean, {c});
            add_mat(base + ".bn.running_var", st.bn.running_var, {c});
        }
    };
    add_stream("stream1", m.stream1);
    if (m.two_stream()) add_stream("stream2", m.stream2);
    for (std::size_t b = 0; b < m.mmtm_blocks.size(); ++b) {
        const std::string base = "mmtm." + std::to_string(m.backbone.mmtm_tap_stages[b]);
        auto& w = m.mmtm_blocks[b];
        add_mat(base + ".joint_weight", w.joint_weight, {w.c1 + w.c2, w.cz});
        add_mat(base + ".joint_bias", w.joint_bias, {w.cz});
        add_mat(base + ".excite_weight_1", w.excite_weight_1, {w.cz, w.c1});
        add_mat(base + ".excite_bias_1", w.excite_bias_1, {w.c1});
        add_mat(base + ".excite_weight_2", w.excite_weight_2, {w.cz, w.c2});
        add_mat(base + ".excite_bias_2", w.excite_bias_2, {w.c2});
    }
    add_mat("head.weight", m.head.weight,
            {static_cast<int>(m.head.weight.rows()), static_cast<int>(m.head.weight.cols())});
    add_mat("head.bias", m.head.bias, {static_cast<int>(m.head.bias.size())});
    return out;
}

}  // namespace

std::vector<NamedTensorView> named_tensors(const FusionModel& m) {
    return enumerate_tensors<NamedTensorView, const FusionModel>(m);
}

std::vector<ParamView> mutable_tensors(FusionModel& m) {
    auto views = enumerate_tensors<NamedTensorView, FusionModel>(m);
    std::vector<ParamView> out;
    out.reserve(views.size());
    for (auto& v : views)
        out.push_back({v.name, const_cast<double*>(v.data), nullptr, v.size});
    return out;
}

}  // namespace pairfuse
