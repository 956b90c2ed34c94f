#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "pairfuse/data.hpp"
#include "pairfuse/fusion.hpp"

namespace pairfuse {

enum class Optimizer { adam };
enum class Loss { categorical_cross_entropy };

struct TrainConfig {
    int epochs = 200;        // paper default; desk-scale runs use 30
    int batch_size = 16;
    double learning_rate = 1e-4;
    Optimizer optimizer = Optimizer::adam;
    Loss loss = Loss::categorical_cross_entropy;
    std::uint64_t seed = 0;
    bool augment = true;     // training-time augmentation

    // Adam constants, pinned.
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
};

std::string train_config_fingerprint(const TrainConfig& cfg);

// -log(p[label]) with the probability floored at 1e-12.
double cross_entropy(const nn::VecX& probabilities, int label_index);
double cross_entropy(const std::vector<double>& probabilities, int label_index);

// Strict-decrease checkpoint rule: save exactly when the validation loss
// drops below the best seen so far.
class CheckpointPolicy {
public:
    bool should_save(double val_loss) {
        if (val_loss < best_) {
            best_ = val_loss;
            return true;
        }
        return false;
    }
    double best() const { return best_; }

private:
    double best_ = std::numeric_limits<double>::infinity();
};

struct EpochRecord {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    bool saved = false;
};

struct TrainResult {
    std::string status = "done";  // "done" or "failed"
    std::string message;
    double best_val_loss = 0.0;
    int best_epoch = 0;
    std::vector<EpochRecord> history;
    std::string checkpoint_path;  // empty when no out_dir was given
    std::string fingerprint;
};

// Adam on the mean batch cross-entropy. Data order is reshuffled every epoch
// from cfg.seed, augmentation touches training samples only, validation loss
// is computed over the full validation set after each epoch, and the model
// checkpoint is persisted exactly on strict improvements. On return the model
// holds the best checkpoint's weights. A non-finite loss marks the run failed
// instead of continuing.
TrainResult train(FusionModel& model, const std::vector<Sample>& train_samples,
                  const std::vector<Sample>& val_samples, const TrainConfig& cfg,
                  const std::string& out_dir = "");

}  // namespace pairfuse
