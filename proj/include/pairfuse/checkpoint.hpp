#pragma once

#include <optional>
#include <string>

#include "pairfuse/fusion.hpp"

namespace pairfuse {

// Checkpoint container (version 1): the magic "PFCKPT01", a little-endian
// u64 header length, a JSON header (architecture kind, backbone config, class
// vocabulary, training fingerprint, tensor table) and a payload of raw
// little-endian float64 values. All model tensors are stored, including
// batch-norm running statistics.
struct CheckpointMeta {
    double best_val_loss = 0.0;
    int best_epoch = 0;
    std::string train_fingerprint;
};

void save_checkpoint(const std::string& path, const FusionModel& model, const CheckpointMeta& meta);
FusionModel load_checkpoint(const std::string& path, CheckpointMeta* meta = nullptr);

}  // namespace pairfuse
