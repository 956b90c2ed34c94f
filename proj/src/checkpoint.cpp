#include "pairfuse/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace pairfuse {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'P', 'F', 'C', 'K', 'P', 'T', '0', '1'};

json backbone_to_json(const BackboneConfig& cfg) {
    json j;
    j["name"] = to_string(cfg.name);
    j["input_height"] = cfg.input_height;
    j["input_width"] = cfg.input_width;
    j["stage_channels"] = cfg.stage_channels;
    j["stage_strides"] = cfg.stage_strides;
    j["mmtm_tap_stages"] = cfg.mmtm_tap_stages;
    if (!cfg.pretrained_weights_path.empty()) j["pretrained_weights_path"] = cfg.pretrained_weights_path;
    return j;
}

BackboneConfig backbone_from_json(const json& j) {
    BackboneConfig cfg;
    cfg.name = backbone_kind_from_string(j.at("name").get<std::string>());
    cfg.input_height = j.at("input_height").get<int>();
    cfg.input_width = j.at("input_width").get<int>();
    cfg.stage_channels = j.at("stage_channels").get<std::vector<int>>();
    cfg.stage_strides = j.at("stage_strides").get<std::vector<int>>();
    cfg.mmtm_tap_stages = j.at("mmtm_tap_stages").get<std::vector<int>>();
    if (j.contains("pretrained_weights_path"))
        cfg.pretrained_weights_path = j.at("pretrained_weights_path").get<std::string>();
    return cfg;
}

}  // namespace

void save_checkpoint(const std::string& path, const FusionModel& model, const CheckpointMeta& meta) {
    auto tensors = named_tensors(model);

    json header;
    header["format_version"] = 1;
    header["kind"] = to_string(model.kind);
    header["backbone"] = backbone_to_json(model.backbone);
    header["num_classes"] = model.num_classes;
    header["classes"] = model.class_names;
    header["train_fingerprint"] = meta.train_fingerprint;
    header["best_val_loss"] = meta.best_val_loss;
    header["best_epoch"] = meta.best_epoch;

    json table = json::object();
    std::size_t offset = 0;
    for (const auto& t : tensors) {
        table[t.name] = {{"shape", t.shape}, {"offset", offset}, {"size", t.size}};
        offset += t.size;
    }
    header["tensors"] = table;

    const std::string hs = header.dump();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    out.write(kMagic, sizeof(kMagic));
    const std::uint64_t len = hs.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    for (const auto& t : tensors)
        out.write(reinterpret_cast<const char*>(t.data), static_cast<std::streamsize>(t.size * sizeof(double)));
    if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

FusionModel load_checkpoint(const std::string& path, CheckpointMeta* meta) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);

    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("not a checkpoint file (bad magic): " + path);

    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    std::string hs(len, '\0');
    in.read(hs.data(), static_cast<std::streamsize>(len));
    if (!in) throw std::runtime_error("truncated checkpoint header: " + path);
    const json header = json::parse(hs);
    if (header.at("format_version").get<int>() != 1)
        throw std::runtime_error("unsupported checkpoint format version");

    FusionModel model = build_model(architecture_from_string(header.at("kind").get<std::string>()),
                                    backbone_from_json(header.at("backbone")),
                                    header.at("num_classes").get<int>(), /*seed=*/0,
                                    header.at("classes").get<std::vector<std::string>>());
    if (meta) {
        meta->best_val_loss = header.at("best_val_loss").get<double>();
        meta->best_epoch = header.at("best_epoch").get<int>();
        meta->train_fingerprint = header.at("train_fingerprint").get<std::string>();
    }

    const json& table = header.at("tensors");
    const std::streampos payload_start = in.tellg();
    for (auto& view : mutable_tensors(model)) {
        if (!table.contains(view.name))
            throw std::runtime_error("checkpoint missing tensor: " + view.name);
        const auto& entry = table.at(view.name);
        if (entry.at("size").get<std::size_t>() != view.size)
            throw std::runtime_error("checkpoint tensor size mismatch for " + view.name);
        in.seekg(payload_start + static_cast<std::streamoff>(entry.at("offset").get<std::size_t>() * sizeof(double)));
        in.read(reinterpret_cast<char*>(view.value), static_cast<std::streamsize>(view.size * sizeof(double)));
        if (!in) throw std::runtime_error("truncated checkpoint payload at " + view.name);
    }
    return model;
}

}  // namespace pairfuse
