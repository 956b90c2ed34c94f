#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pairfuse/backbone.hpp"
#include "pairfuse/mmtm.hpp"
#include "pairfuse/nn.hpp"

namespace pairfuse {

enum class ArchitectureKind { early, late, intermediate };

std::string to_string(ArchitectureKind k);
ArchitectureKind architecture_from_string(const std::string& s);

struct Prediction {
    nn::VecX probabilities;  // non-negative, sums to 1
    int predicted_class = 0; // argmax, lowest index wins ties
};

// One of the three fusion architectures over the staged backbone:
//   early        - facade and interior concatenated along width, one stream
//   late         - two streams, final maps channel-concatenated before pooling
//   intermediate - late plus MMTM gating at the configured tap stages
struct FusionModel {
    ArchitectureKind kind = ArchitectureKind::late;
    BackboneConfig backbone;
    BackboneWeights stream1;
    BackboneWeights stream2;               // unused for early fusion
    std::vector<MMTMWeights> mmtm_blocks;  // intermediate only, one per tap stage
    nn::DenseParams head;
    int num_classes = 0;
    std::vector<std::string> class_names;

    bool two_stream() const { return kind != ArchitectureKind::early; }
    int feature_dim() const {
        return two_stream() ? 2 * backbone.final_channels() : backbone.final_channels();
    }
};

struct ModelGrads {
    BackboneGrads stream1, stream2;
    std::vector<MMTMGrads> mmtm;
    nn::RowMatX head_w;
    nn::VecX head_b;
};

struct ModelTrace {
    std::vector<StageTrace> s1, s2;
    std::vector<MMTMCache> mmtm;
    nn::RowMatX features;  // pooled (and concatenated) head input
    int final_h = 0, final_w = 0;
};

FusionModel build_model(ArchitectureKind kind, const BackboneConfig& backbone, int num_classes,
                        std::uint64_t seed, std::vector<std::string> class_names = {});
ModelGrads model_grads_like(const FusionModel& m);

// Batched forward to logits (n x num_classes). Training mode uses batch-norm
// batch statistics and fills the trace; running statistics are only touched
// by update_bn_running below.
nn::RowMatX model_forward(const FusionModel& m, const Tensor& facade, const Tensor& interior,
                          bool training, ModelTrace* trace);
void model_backward(const FusionModel& m, const ModelTrace& trace, const nn::RowMatX& dlogits,
                    ModelGrads& grads);
void update_bn_running(FusionModel& m, const ModelTrace& trace);

Prediction predict(const FusionModel& m, const Tensor& facade, const Tensor& interior);

// Flat views over all trainable parameters and their gradients, in a fixed
// deterministic order shared by the optimizer and the checkpoint container.
struct ParamView {
    std::string name;
    double* value = nullptr;
    double* grad = nullptr;
    std::size_t size = 0;
};

std::vector<ParamView> collect_params(FusionModel& m, ModelGrads& g);

struct NamedTensorView {
    std::string name;
    std::vector<int> shape;
    const double* data = nullptr;
    std::size_t size = 0;
};

// Every persisted tensor (trainable parameters plus batch-norm running
// statistics), keyed stream{i}.stage{k}.{role}, mmtm.{tap}.{role}, head.{role}.
std::vector<NamedTensorView> named_tensors(const FusionModel& m);
std::vector<ParamView> mutable_tensors(FusionModel& m);  // same keys, writable

}  // namespace pairfuse
