#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "sast/denoiser.hpp"
#include "sast/metrics.hpp"
#include "sast/synth.hpp"
#include "sast/training.hpp"

namespace sast {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// All run settings in one document. Unknown keys are rejected so typos
/// fail loudly instead of silently using defaults.
struct RunConfig {
    uint64_t seed = 0;

    // data generation
    int64_t persons = 4;
    int64_t objects = 6;
    double duration_s = 60.0;
    int64_t recordings = 1;
    double room_width = 8.0;
    double room_depth = 6.0;
    double partial_track_prob = 0.15;

    // model
    std::string preset = "desk";  // "desk" | "paper"
    int64_t J = 17;
    int64_t N = 275;
    int64_t n_input = 25;

    // scene basis
    int64_t basis_count = 2048;
    double basis_radius = 5.0;
    uint64_t basis_seed = 3;

    TrainConfig train;

    // sampling
    int64_t sample_count = 2;
    int64_t stride = 50;
    bool noise_at_final_step = false;
    bool zero_scene = false;
    bool zero_others = false;

    // metrics
    int64_t kappa = 8;
    int64_t realism_stride = 5;
    RealismTrainConfig realism;

    DenoiserConfig model_config() const {
        DenoiserConfig c = preset == "paper" ? DenoiserConfig::paper() : DenoiserConfig::desk();
        if (preset != "paper" && preset != "desk")
            throw ConfigError("unknown model preset: " + preset);
        c.J = J;
        c.N = N;
        c.n_input = n_input;
        c.d_obj = basis_count + kObjectTypeCount;
        c.validate();
        return c;
    }

    SynthConfig synth_config() const {
        SynthConfig c;
        c.persons = static_cast<int>(persons);
        c.objects = static_cast<int>(objects);
        c.duration_s = duration_s;
        c.room_width = room_width;
        c.room_depth = room_depth;
        c.partial_track_prob = partial_track_prob;
        return c;
    }

    nlohmann::json to_json() const {
        return {{"seed", seed},
                {"data",
                 {{"persons", persons},
                  {"objects", objects},
                  {"duration_s", duration_s},
                  {"recordings", recordings},
                  {"room_width", room_width},
                  {"room_depth", room_depth},
                  {"partial_track_prob", partial_track_prob}}},
                {"model", {{"preset", preset}, {"J", J}, {"N", N}, {"n_input", n_input}}},
                {"basis",
                 {{"count", basis_count}, {"radius", basis_radius}, {"seed", basis_seed}}},
                {"train",
                 {{"T", train.T},
                  {"total_steps", train.total_steps},
                  {"batch_size", train.batch_size},
                  {"lr_start", train.lr_start},
                  {"lr_end", train.lr_end},
                  {"weight_decay", train.weight_decay},
                  {"undersample_fraction", train.undersample_fraction},
                  {"log_every", train.log_every}}},
                {"sample",
                 {{"count", sample_count},
                  {"stride", stride},
                  {"noise_at_final_step", noise_at_final_step},
                  {"zero_scene", zero_scene},
                  {"zero_others", zero_others}}},
                {"metrics",
                 {{"kappa", kappa},
                  {"realism_stride", realism_stride},
                  {"realism_lr", realism.lr},
                  {"realism_epochs", realism.epochs},
                  {"realism_batch", realism.batch_size},
                  {"realism_holdout", realism.holdout_fraction}}}};
    }
};

namespace cfg_detail {

inline void reject_unknown(const nlohmann::json& j, const nlohmann::json& allowed,
                           const std::string& where) {
    if (!j.is_object()) return;
    for (const auto& [key, value] : j.items()) {
        if (!allowed.contains(key))
            throw ConfigError("unknown config key: " + where + key);
        reject_unknown(value, allowed.at(key), where + key + ".");
    }
}

template <typename T>
void fetch(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace cfg_detail

inline RunConfig config_from_json(const nlohmann::json& j) {
    RunConfig base;
    cfg_detail::reject_unknown(j, base.to_json(), "");
    RunConfig c;
    using cfg_detail::fetch;
    fetch(j, "seed", c.seed);
    if (j.contains("data")) {
        const auto& d = j.at("data");
        fetch(d, "persons", c.persons);
        fetch(d, "objects", c.objects);
        fetch(d, "duration_s", c.duration_s);
        fetch(d, "recordings", c.recordings);
        fetch(d, "room_width", c.room_width);
        fetch(d, "room_depth", c.room_depth);
        fetch(d, "partial_track_prob", c.partial_track_prob);
    }
    if (j.contains("model")) {
        const auto& m = j.at("model");
        fetch(m, "preset", c.preset);
        fetch(m, "J", c.J);
        fetch(m, "N", c.N);
        fetch(m, "n_input", c.n_input);
    }
    if (j.contains("basis")) {
        const auto& b = j.at("basis");
        fetch(b, "count", c.basis_count);
        fetch(b, "radius", c.basis_radius);
        fetch(b, "seed", c.basis_seed);
    }
    if (j.contains("train")) {
        const auto& t = j.at("train");
        fetch(t, "T", c.train.T);
        fetch(t, "total_steps", c.train.total_steps);
        fetch(t, "batch_size", c.train.batch_size);
        fetch(t, "lr_start", c.train.lr_start);
        fetch(t, "lr_end", c.train.lr_end);
        fetch(t, "weight_decay", c.train.weight_decay);
        fetch(t, "undersample_fraction", c.train.undersample_fraction);
        fetch(t, "log_every", c.train.log_every);
    }
    if (j.contains("sample")) {
        const auto& s = j.at("sample");
        fetch(s, "count", c.sample_count);
        fetch(s, "stride", c.stride);
        fetch(s, "noise_at_final_step", c.noise_at_final_step);
        fetch(s, "zero_scene", c.zero_scene);
        fetch(s, "zero_others", c.zero_others);
    }
    if (j.contains("metrics")) {
        const auto& m = j.at("metrics");
        fetch(m, "kappa", c.kappa);
        fetch(m, "realism_stride", c.realism_stride);
        fetch(m, "realism_lr", c.realism.lr);
        fetch(m, "realism_epochs", c.realism.epochs);
        fetch(m, "realism_batch", c.realism.batch_size);
        fetch(m, "realism_holdout", c.realism.holdout_fraction);
    }
    c.train.seed = c.seed;
    c.realism.seed = c.seed;
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config: " + path.string());
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    return config_from_json(j);
}

inline void write_resolved_config(const RunConfig& c, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream f(dir / "resolved_config.json", std::ios::trunc);
    if (!f) throw ConfigError("cannot write resolved config in " + dir.string());
    f << c.to_json().dump(2) << "\n";
}

}  // namespace sast
