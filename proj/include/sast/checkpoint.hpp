#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sast/bps.hpp"
#include "sast/denoiser.hpp"
#include "sast/io.hpp"
#include "sast/normalize.hpp"
#include "sast/schedule.hpp"
#include "sast/training.hpp"

namespace sast {

struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace ckpt_detail {

inline uint64_t fnv1a(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline uint64_t schedule_hash(const DiffusionSchedule& s) {
    uint64_t h = fnv1a(&s.T, sizeof(s.T));
    h = fnv1a(s.beta.data(), s.beta.size() * sizeof(double), h);
    return h;
}

inline nlohmann::json denoiser_cfg_to_json(const DenoiserConfig& c) {
    return {{"J", c.J},
            {"N", c.N},
            {"n_input", c.n_input},
            {"levels", c.levels},
            {"pose_kernel", c.pose_kernel},
            {"others_kernel", c.others_kernel},
            {"group_norm_groups", c.group_norm_groups},
            {"stem_channels", c.stem_channels},
            {"pose_channels", c.pose_channels},
            {"others_channels", c.others_channels},
            {"d_scene", c.d_scene},
            {"ff_scene", c.ff_scene},
            {"heads_scene", c.heads_scene},
            {"layers_scene", c.layers_scene},
            {"d_others", c.d_others},
            {"ff_others", c.ff_others},
            {"heads_others", c.heads_others},
            {"layers_others", c.layers_others},
            {"time_embed_dim", c.time_embed_dim},
            {"fourier_seed", c.fourier_seed},
            {"d_obj", c.d_obj}};
}

inline DenoiserConfig denoiser_cfg_from_json(const nlohmann::json& j) {
    DenoiserConfig c;
    c.J = j.at("J").get<int64_t>();
    c.N = j.at("N").get<int64_t>();
    c.n_input = j.at("n_input").get<int64_t>();
    c.levels = j.at("levels").get<int>();
    c.pose_kernel = j.at("pose_kernel").get<int64_t>();
    c.others_kernel = j.at("others_kernel").get<int64_t>();
    c.group_norm_groups = j.at("group_norm_groups").get<int64_t>();
    c.stem_channels = j.at("stem_channels").get<int64_t>();
    c.pose_channels = j.at("pose_channels").get<std::vector<int64_t>>();
    c.others_channels = j.at("others_channels").get<std::vector<int64_t>>();
    c.d_scene = j.at("d_scene").get<int64_t>();
    c.ff_scene = j.at("ff_scene").get<int64_t>();
    c.heads_scene = j.at("heads_scene").get<int>();
    c.layers_scene = j.at("layers_scene").get<int>();
    c.d_others = j.at("d_others").get<int64_t>();
    c.ff_others = j.at("ff_others").get<int64_t>();
    c.heads_others = j.at("heads_others").get<int>();
    c.layers_others = j.at("layers_others").get<int>();
    c.time_embed_dim = j.at("time_embed_dim").get<int64_t>();
    c.fourier_seed = j.at("fourier_seed").get<uint64_t>();
    c.d_obj = j.at("d_obj").get<int64_t>();
    return c;
}

inline nlohmann::json train_cfg_to_json(const TrainConfig& c) {
    return {{"T", c.T},
            {"total_steps", c.total_steps},
            {"batch_size", c.batch_size},
            {"lr_start", c.lr_start},
            {"lr_end", c.lr_end},
            {"weight_decay", c.weight_decay},
            {"undersample_fraction", c.undersample_fraction},
            {"seed", c.seed}};
}

inline TrainConfig train_cfg_from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.T = j.at("T").get<int>();
    c.total_steps = j.at("total_steps").get<int64_t>();
    c.batch_size = j.at("batch_size").get<int64_t>();
    c.lr_start = j.at("lr_start").get<double>();
    c.lr_end = j.at("lr_end").get<double>();
    c.weight_decay = j.at("weight_decay").get<double>();
    c.undersample_fraction = j.at("undersample_fraction").get<double>();
    c.seed = j.at("seed").get<uint64_t>();
    return c;
}

}  // namespace ckpt_detail

/// A complete model checkpoint: a model is unusable without its scaler and
/// basis, so they travel together.
struct Checkpoint {
    DenoiserModel model;
    MinMaxScaler scaler;
    BasisPointSet basis;
    TrainConfig train_cfg;
    int64_t trained_steps = 0;

    // Optimizer state, present when saved mid-run so resuming continues
    // bit-exactly.
    std::map<std::string, Tensor> opt_m, opt_v;
    int64_t opt_steps = 0;

    DiffusionSchedule schedule() const { return cosine_schedule(train_cfg.T); }
};

inline void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    manifest["format"] = "sast-checkpoint-v1";
    manifest["denoiser"] = ckpt_detail::denoiser_cfg_to_json(ckpt.model.cfg);
    manifest["train"] = ckpt_detail::train_cfg_to_json(ckpt.train_cfg);
    manifest["trained_steps"] = ckpt.trained_steps;
    manifest["schedule_hash"] = ckpt_detail::schedule_hash(ckpt.schedule());
    manifest["scaler"] = {{"mins", ckpt.scaler.mins}, {"maxs", ckpt.scaler.maxs}};
    manifest["basis"] = {{"seed", ckpt.basis.seed},
                         {"radius", ckpt.basis.radius},
                         {"count", ckpt.basis.count()}};

    std::vector<std::byte> params_bin;
    manifest["params"] = nlohmann::json::array();
    for (const auto& [name, t] : ckpt.model.params) {
        manifest["params"].push_back({{"name", name},
                                      {"shape", t.shape()},
                                      {"byte_offset", params_bin.size()}});
        for (int64_t i = 0; i < t.size(); ++i)
            io::append_f32(params_bin, static_cast<float>(t[i]));
    }
    std::vector<std::byte> basis_bin;
    for (double v : ckpt.basis.points) io::append_f32(basis_bin, static_cast<float>(v));

    if (!ckpt.opt_m.empty()) {
        // Optimizer moments are stored as doubles: Adam's v accumulates
        // squared gradients that underflow in float32.
        std::vector<std::byte> optim_bin;
        auto append_map = [&](const std::map<std::string, Tensor>& mp) {
            for (const auto& [name, t] : ckpt.model.params) {
                auto it = mp.find(name);
                Tensor zero(t.shape());
                const Tensor& src = it != mp.end() ? it->second : zero;
                const auto* p = reinterpret_cast<const std::byte*>(src.vec().data());
                optim_bin.insert(optim_bin.end(), p, p + src.size() * sizeof(double));
            }
        };
        append_map(ckpt.opt_m);
        append_map(ckpt.opt_v);
        manifest["optimizer"] = {{"steps", ckpt.opt_steps}};
        io::write_file(dir / "optim.bin", optim_bin);
    }

    std::ofstream mf(dir / "manifest.json", std::ios::binary | std::ios::trunc);
    if (!mf) throw CheckpointError("cannot write checkpoint manifest");
    mf << manifest.dump(2) << "\n";
    io::write_file(dir / "params.bin", params_bin);
    io::write_file(dir / "basis.bin", basis_bin);
}

/// Content hash of the stored parameters, used to tie forecasts to the
/// checkpoint that produced them.
inline uint64_t checkpoint_hash(const std::filesystem::path& dir) {
    auto bytes = io::read_file(dir / "params.bin");
    return ckpt_detail::fnv1a(bytes.data(), bytes.size());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& dir) {
    std::ifstream mf(dir / "manifest.json");
    if (!mf) throw CheckpointError("checkpoint not found: " + dir.string());
    nlohmann::json manifest;
    try {
        mf >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(std::string("malformed checkpoint manifest: ") + e.what());
    }

    Checkpoint ckpt;
    try {
        DenoiserConfig cfg = ckpt_detail::denoiser_cfg_from_json(manifest.at("denoiser"));
        ckpt.train_cfg = ckpt_detail::train_cfg_from_json(manifest.at("train"));
        ckpt.trained_steps = manifest.at("trained_steps").get<int64_t>();
        ckpt.model = init_denoiser(cfg, 0);

        auto params_bin = io::read_file(dir / "params.bin");
        for (const auto& jp : manifest.at("params")) {
            std::string name = jp.at("name").get<std::string>();
            auto shape = jp.at("shape").get<std::vector<int64_t>>();
            size_t offset = jp.at("byte_offset").get<size_t>();
            auto it = ckpt.model.params.find(name);
            if (it == ckpt.model.params.end())
                throw CheckpointError("checkpoint parameter not in model: " + name);
            if (it->second.shape() != shape)
                throw CheckpointError("checkpoint parameter shape mismatch: " + name);
            auto vals = io::read_f32_block(params_bin, offset,
                                           static_cast<size_t>(it->second.size()));
            for (int64_t i = 0; i < it->second.size(); ++i)
                it->second[i] = static_cast<double>(vals[static_cast<size_t>(i)]);
        }

        ckpt.scaler.mins = manifest.at("scaler").at("mins").get<std::vector<double>>();
        ckpt.scaler.maxs = manifest.at("scaler").at("maxs").get<std::vector<double>>();

        // The basis is regenerated from (seed, radius) so training and
        // inference see bit-identical double-precision points; basis.bin
        // exists for external tooling only.
        uint64_t bseed = manifest.at("basis").at("seed").get<uint64_t>();
        double bradius = manifest.at("basis").at("radius").get<double>();
        int64_t count = manifest.at("basis").at("count").get<int64_t>();
        ckpt.basis = generate_basis(bseed, count, bradius);

        if (manifest.contains("optimizer")) {
            ckpt.opt_steps = manifest.at("optimizer").at("steps").get<int64_t>();
            auto optim_bin = io::read_file(dir / "optim.bin");
            size_t off = 0;
            auto read_map = [&](std::map<std::string, Tensor>& mp) {
                for (const auto& [name, t] : ckpt.model.params) {
                    Tensor dst(t.shape());
                    size_t bytes = static_cast<size_t>(dst.size()) * sizeof(double);
                    if (off + bytes > optim_bin.size())
                        throw CheckpointError("optimizer state shorter than declared");
                    std::memcpy(dst.vec().data(), optim_bin.data() + off, bytes);
                    off += bytes;
                    mp.emplace(name, std::move(dst));
                }
            };
            read_map(ckpt.opt_m);
            read_map(ckpt.opt_v);
        }

        uint64_t declared = manifest.at("schedule_hash").get<uint64_t>();
        if (declared != ckpt_detail::schedule_hash(ckpt.schedule()))
            throw CheckpointError("checkpoint schedule hash mismatch");
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(std::string("malformed checkpoint manifest: ") + e.what());
    }
    return ckpt;
}

}  // namespace sast
