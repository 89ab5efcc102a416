#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sast/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"scene-aware multi-person motion forecasting"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out";
    std::optional<uint64_t> seed_override;
    app.add_option("--config", config_path, "run config (json)")->expected(1);
    app.add_option("--seed", seed_override, "override config seed");
    app.add_option("--out", out_dir, "output directory");

    auto* gen = app.add_subcommand("gen-data", "generate synthetic recordings");

    std::string data_dir, resume_path;
    auto* train = app.add_subcommand("train", "train the denoiser");
    train->add_option("--data", data_dir, "recording directory")->required();
    train->add_option("--resume", resume_path, "checkpoint directory to resume from");

    std::string ckpt_dir, input_dir;
    std::optional<int64_t> k_override;
    auto* sample = app.add_subcommand("sample", "forecast from a recording");
    sample->add_option("--checkpoint", ckpt_dir, "checkpoint directory")->required();
    sample->add_option("--input", input_dir, "input recording directory")->required();
    sample->add_option("--k", k_override, "samples per window");

    std::string forecasts_dir, truth_dir;
    auto* eval = app.add_subcommand("evaluate", "score forecasts against ground truth");
    eval->add_option("--forecasts", forecasts_dir, "forecast directory (or recording)")
        ->required();
    eval->add_option("--truth", truth_dir, "ground-truth recording directory")->required();

    std::string metrics_path;
    auto* plot = app.add_subcommand("plot", "render trajectory and velocity plots");
    plot->add_option("--metrics", metrics_path, "metrics json from evaluate")->required();
    plot->add_option("--forecasts", forecasts_dir, "forecast directory (or recording)")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        sast::RunConfig cfg =
            config_path.empty() ? sast::RunConfig{} : sast::load_config(config_path);
        if (seed_override) {
            cfg.seed = *seed_override;
            cfg.train.seed = *seed_override;
            cfg.realism.seed = *seed_override;
        }
        if (k_override) cfg.sample_count = *k_override;

        if (gen->parsed()) {
            sast::cmd_gen_data(cfg, out_dir);
        } else if (train->parsed()) {
            std::optional<std::filesystem::path> resume;
            if (!resume_path.empty()) resume = resume_path;
            sast::cmd_train(cfg, data_dir, out_dir, resume);
        } else if (sample->parsed()) {
            sast::cmd_sample(cfg, ckpt_dir, input_dir, out_dir);
        } else if (eval->parsed()) {
            sast::cmd_evaluate(cfg, forecasts_dir, truth_dir,
                               std::filesystem::path(out_dir) / "metrics.json");
        } else if (plot->parsed()) {
            sast::cmd_plot(cfg, metrics_path, forecasts_dir, out_dir);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
