#include "pairfuse/train.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "pairfuse/augment.hpp"
#include "pairfuse/checkpoint.hpp"
#include "pairfuse/rng.hpp"

namespace pairfuse {

using nlohmann::json;

std::string train_config_fingerprint(const TrainConfig& cfg) {
    json j;
    j["epochs"] = cfg.epochs;
    j["batch_size"] = cfg.batch_size;
    j["learning_rate"] = cfg.learning_rate;
    j["optimizer"] = "adam";
    j["loss"] = "categorical_cross_entropy";
    j["seed"] = cfg.seed;
    j["augment"] = cfg.augment;
    j["beta1"] = cfg.beta1;
    j["beta2"] = cfg.beta2;
    j["adam_epsilon"] = cfg.adam_epsilon;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(j.dump())));
    return buf;
}

double cross_entropy(const nn::VecX& probabilities, int label_index) {
    if (label_index < 0 || label_index >= probabilities.size())
        throw std::invalid_argument("cross_entropy: label index " + std::to_string(label_index) +
                                    " outside [0, " + std::to_string(probabilities.size()) + ")");
    return -std::log(std::max(probabilities[label_index], 1e-12));
}

double cross_entropy(const std::vector<double>& probabilities, int label_index) {
    return cross_entropy(nn::VecX(Eigen::Map<const nn::VecX>(probabilities.data(),
                                                             static_cast<Eigen::Index>(probabilities.size()))),
                         label_index);
}

namespace {

struct Adam {
    double lr, beta1, beta2, eps;
    long long t = 0;
    std::vector<nn::VecX> m, v;

    explicit Adam(const TrainConfig& cfg, const std::vector<ParamView>& params)
        : lr(cfg.learning_rate), beta1(cfg.beta1), beta2(cfg.beta2), eps(cfg.adam_epsilon) {
        for (const auto& p : params) {
            m.push_back(nn::VecX::Zero(static_cast<Eigen::Index>(p.size)));
            v.push_back(nn::VecX::Zero(static_cast<Eigen::Index>(p.size)));
        }
    }

    void step(const std::vector<ParamView>& params) {
        ++t;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (std::size_t i = 0; i < params.size(); ++i) {
            Eigen::Map<nn::VecX> w(params[i].value, static_cast<Eigen::Index>(params[i].size));
            Eigen::Map<nn::VecX> g(params[i].grad, static_cast<Eigen::Index>(params[i].size));
            m[i] = beta1 * m[i] + (1.0 - beta1) * g;
            v[i] = beta2 * v[i] + (1.0 - beta2) * g.cwiseProduct(g);
            w.array() -= lr * (m[i].array() / bc1) /
                         ((v[i].array() / bc2).sqrt() + eps);
        }
    }
};

void zero_grads(const std::vector<ParamView>& params) {
    for (const auto& p : params)
        Eigen::Map<nn::VecX>(p.grad, static_cast<Eigen::Index>(p.size)).setZero();
}

struct BatchTensors {
    Tensor facade, interior;
    std::vector<int> labels;
};

BatchTensors assemble(const std::vector<Sample>& samples, const std::vector<std::size_t>& order,
                      std::size_t begin, std::size_t end, bool do_augment,
                      std::uint64_t seed, int epoch) {
    const int b = static_cast<int>(end - begin);
    const Sample& first = samples[order[begin]];
    BatchTensors batch{Tensor(b, first.facade.h(), first.facade.w(), 3),
                       Tensor(b, first.interior.h(), first.interior.w(), 3), {}};
    for (int i = 0; i < b; ++i) {
        const std::size_t idx = order[begin + i];
        Sample s = samples[idx];
        if (do_augment) {
            s = augment(s, hash_combine(seed, "aug/e" + std::to_string(epoch) + "/s" + std::to_string(idx)));
        }
        std::copy(s.facade.data(), s.facade.data() + s.facade.size(),
                  batch.facade.data() + static_cast<std::size_t>(i) * s.facade.size());
        std::copy(s.interior.data(), s.interior.data() + s.interior.size(),
                  batch.interior.data() + static_cast<std::size_t>(i) * s.interior.size());
        batch.labels.push_back(s.label_index);
    }
    return batch;
}

double mean_loss(const nn::RowMatX& probs, const std::vector<int>& labels) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < probs.rows(); ++i)
        total += -std::log(std::max(probs(i, labels[static_cast<std::size_t>(i)]), 1e-12));
    return total / static_cast<double>(probs.rows());
}

double validation_loss(const FusionModel& model, const std::vector<Sample>& val, int batch_size) {
    double total = 0.0;
    std::vector<std::size_t> order(val.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t begin = 0; begin < val.size(); begin += static_cast<std::size_t>(batch_size)) {
        const std::size_t end = std::min(val.size(), begin + static_cast<std::size_t>(batch_size));
        BatchTensors batch = assemble(val, order, begin, end, false, 0, 0);
        nn::RowMatX logits = model_forward(model, batch.facade, batch.interior, false, nullptr);
        nn::RowMatX probs = nn::softmax(logits);
        total += mean_loss(probs, batch.labels) * static_cast<double>(end - begin);
    }
    return total / static_cast<double>(val.size());
}

}  // namespace

TrainResult train(FusionModel& model, const std::vector<Sample>& train_samples,
                  const std::vector<Sample>& val_samples, const TrainConfig& cfg,
                  const std::string& out_dir) {
    if (train_samples.empty() || val_samples.empty())
        throw std::invalid_argument("train: empty training or validation set");
    for (const auto& s : train_samples)
        if (s.label_index < 0 || s.label_index >= model.num_classes)
            throw std::invalid_argument("train: label index outside the model's classes");

    TrainResult result;
    result.fingerprint = train_config_fingerprint(cfg);

    ModelGrads grads = model_grads_like(model);
    std::vector<ParamView> params = collect_params(model, grads);
    Adam adam(cfg, params);
    CheckpointPolicy policy;
    FusionModel best = model;

    std::ofstream history_out;
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        result.checkpoint_path = out_dir + "/checkpoint.pfc";
        history_out.open(out_dir + "/history.jsonl", std::ios::trunc);
    }

    std::vector<std::size_t> order(train_samples.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Rng shuffle_rng = Rng::derive(cfg.seed, "order/e" + std::to_string(epoch));
        shuffle_rng.shuffle(order);

        double epoch_loss = 0.0;
        for (std::size_t begin = 0; begin < order.size();
             begin += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end =
                std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
            BatchTensors batch =
                assemble(train_samples, order, begin, end, cfg.augment, cfg.seed, epoch);

            ModelTrace trace;
            nn::RowMatX logits = model_forward(model, batch.facade, batch.interior, true, &trace);
            update_bn_running(model, trace);
            nn::RowMatX probs = nn::softmax(logits);
            const double batch_loss = mean_loss(probs, batch.labels);
            if (!std::isfinite(batch_loss)) {
                result.status = "failed";
                result.message = "non-finite training loss at epoch " + std::to_string(epoch);
                return result;
            }
            epoch_loss += batch_loss * static_cast<double>(end - begin);

            zero_grads(params);
            nn::RowMatX dlogits = nn::softmax_xent_grad(probs, batch.labels);
            model_backward(model, trace, dlogits, grads);
            adam.step(params);
        }
        epoch_loss /= static_cast<double>(train_samples.size());

        const double val_loss = validation_loss(model, val_samples, cfg.batch_size);
        if (!std::isfinite(val_loss)) {
            result.status = "failed";
            result.message = "non-finite validation loss at epoch " + std::to_string(epoch);
            return result;
        }

        const bool saved = policy.should_save(val_loss);
        if (saved) {
            best = model;
            result.best_val_loss = val_loss;
            result.best_epoch = epoch;
            if (!result.checkpoint_path.empty()) {
                save_checkpoint(result.checkpoint_path, model,
                                {val_loss, epoch, result.fingerprint});
            }
        }

        result.history.push_back({epoch, epoch_loss, val_loss, saved});
        if (history_out.is_open()) {
            json line;
            line["epoch"] = epoch;
            line["train_loss"] = epoch_loss;
            line["val_loss"] = val_loss;
            line["saved"] = saved;
            history_out << line.dump() << "\n";
        }
    }

    model = std::move(best);
    return result;
}

}  // namespace pairfuse
