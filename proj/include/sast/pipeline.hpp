#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "sast/checkpoint.hpp"
#include "sast/config.hpp"
#include "sast/inference.hpp"
#include "sast/metrics.hpp"
#include "sast/plot.hpp"
#include "sast/synth.hpp"
#include "sast/training.hpp"

namespace sast {

struct PipelineError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace pipe_detail {

inline std::string zero_pad(int64_t v, int width = 3) {
    std::string s = std::to_string(v);
    while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
    return s;
}

inline std::vector<std::filesystem::path> recording_dirs(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> out;
    if (!std::filesystem::is_directory(dir))
        throw PipelineError("no such directory: " + dir.string());
    if (std::filesystem::exists(dir / "manifest.json")) {
        out.push_back(dir);
        return out;
    }
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_directory() && std::filesystem::exists(e.path() / "manifest.json"))
            out.push_back(e.path());
    std::sort(out.begin(), out.end());
    if (out.empty()) throw PipelineError("no recordings found in " + dir.string());
    return out;
}

inline Tensor person_seq(const MultiPersonWindow& w, int64_t p) {
    const int64_t J = w.X.dim(1), N = w.N;
    Tensor seq({J, 3, N});
    for (int64_t j = 0; j < J; ++j)
        for (int64_t d = 0; d < 3; ++d)
            for (int64_t f = 0; f < N; ++f) seq.at3(j, d, f) = w.X.at4(p, j, d, f);
    return seq;
}

}  // namespace pipe_detail

inline void cmd_gen_data(const RunConfig& cfg, const std::filesystem::path& out) {
    if (cfg.recordings < 1) throw PipelineError("gen-data: need at least one recording");
    std::filesystem::create_directories(out);
    for (int64_t r = 0; r < cfg.recordings; ++r) {
        SceneRecording rec = synth_generate(cfg.synth_config(), cfg.seed + static_cast<uint64_t>(r));
        write_recording(rec, out / ("rec_" + pipe_detail::zero_pad(r)));
    }
    write_resolved_config(cfg, out);
}

inline Checkpoint cmd_train(const RunConfig& cfg, const std::filesystem::path& data_dir,
                            const std::filesystem::path& out,
                            const std::optional<std::filesystem::path>& resume = {}) {
    DenoiserConfig mcfg = cfg.model_config();

    std::vector<MultiPersonWindow> windows;
    for (const auto& dir : pipe_detail::recording_dirs(data_dir)) {
        SceneRecording rec = load_recording(dir);
        auto w = make_windows(rec, mcfg.n_input, mcfg.N, cfg.stride);
        windows.insert(windows.end(), std::make_move_iterator(w.begin()),
                       std::make_move_iterator(w.end()));
    }
    if (windows.empty()) throw PipelineError("train: no usable windows in " + data_dir.string());
    auto us = undersample_standing(std::move(windows), cfg.train.undersample_fraction, cfg.seed);
    if (us.warning)
        std::fprintf(stderr, "warning: standing detection undecidable for some windows\n");
    if (us.windows.empty()) throw PipelineError("train: undersampling dropped every window");

    Checkpoint ckpt;
    AdamW opt;
    int64_t start_step = 0;
    if (resume) {
        ckpt = load_checkpoint(*resume);
        if (ckpt.model.cfg != mcfg)
            throw PipelineError("train: resume checkpoint was built with a different model config");
        start_step = ckpt.trained_steps;
        opt.m() = std::move(ckpt.opt_m);
        opt.v() = std::move(ckpt.opt_v);
        opt.t() = ckpt.opt_steps;
    } else {
        ckpt.basis = generate_basis(cfg.basis_seed, cfg.basis_count, cfg.basis_radius);
        ckpt.model = init_denoiser(mcfg, cfg.seed);
    }
    ckpt.train_cfg = cfg.train;

    std::vector<Tensor> primary_seqs;
    std::vector<TrainExample> dataset;
    {
        std::vector<Datapoint> dps;
        for (const auto& w : us.windows)
            for (int64_t i = 0; i < w.person_count(); ++i)
                dps.push_back(build_datapoint(w, i, ckpt.basis));
        if (!resume) {
            for (const auto& dp : dps) primary_seqs.push_back(dp.x);
            ckpt.scaler = fit_minmax(primary_seqs);
        }
        for (const auto& dp : dps)
            dataset.push_back(prepare_example(dp, ckpt.scaler, mcfg.n_input));
    }

    std::printf("model parameters: %lld\n",
                static_cast<long long>(count_params(ckpt.model.params)));
    std::printf("training examples: %zu, steps %lld..%lld\n", dataset.size(),
                static_cast<long long>(start_step),
                static_cast<long long>(cfg.train.total_steps));

    DiffusionSchedule schedule = ckpt.schedule();
    TrainResult res = train(ckpt.model, dataset, cfg.train, schedule, &opt, start_step,
                            [](int64_t step, double loss) {
                                std::printf("step %lld  loss %.6f\n",
                                            static_cast<long long>(step), loss);
                                std::fflush(stdout);
                            });

    ckpt.trained_steps = cfg.train.total_steps;
    ckpt.opt_m = std::move(opt.m());
    ckpt.opt_v = std::move(opt.v());
    ckpt.opt_steps = opt.t();
    save_checkpoint(ckpt, out / "checkpoint");

    // Append to any existing loss history so resumed runs keep one file.
    std::vector<LossRecord> history;
    if (resume && std::filesystem::exists(out / "loss.csv")) {
        std::ifstream f(out / "loss.csv");
        std::string line;
        std::getline(f, line);  // header
        while (std::getline(f, line)) {
            LossRecord r{};
            if (std::sscanf(line.c_str(), "%lld,%lf,%lf", reinterpret_cast<long long*>(&r.step),
                            &r.loss, &r.lr) == 3 &&
                r.step < start_step)
                history.push_back(r);
        }
    }
    history.insert(history.end(), res.history.begin(), res.history.end());
    write_loss_csv(out / "loss.csv", history);
    write_resolved_config(cfg, out);
    return ckpt;
}

inline void cmd_sample(const RunConfig& cfg, const std::filesystem::path& checkpoint_dir,
                       const std::filesystem::path& input_dir,
                       const std::filesystem::path& out) {
    Checkpoint ckpt = load_checkpoint(checkpoint_dir);
    const DenoiserConfig& mcfg = ckpt.model.cfg;
    SceneRecording rec = load_recording(pipe_detail::recording_dirs(input_dir).front());
    auto windows = make_windows(rec, mcfg.n_input, mcfg.N, cfg.stride);
    if (windows.empty()) throw PipelineError("sample: recording yields no windows");

    std::filesystem::create_directories(out);
    nlohmann::json manifest;
    manifest["format"] = "sast-forecast-v1";
    manifest["seed"] = cfg.seed;
    manifest["sample_count"] = cfg.sample_count;
    manifest["zero_scene"] = cfg.zero_scene;
    manifest["zero_others"] = cfg.zero_others;
    manifest["noise_at_final_step"] = cfg.noise_at_final_step;
    manifest["checkpoint_hash"] = checkpoint_hash(checkpoint_dir);
    manifest["n_input"] = mcfg.n_input;
    manifest["N"] = mcfg.N;
    manifest["windows"] = nlohmann::json::array();

    for (size_t wi = 0; wi < windows.size(); ++wi) {
        const auto& w = windows[wi];
        const int64_t P = w.person_count();

        ForecastRequest req;
        req.input = Tensor({P, mcfg.J, 3, mcfg.n_input});
        for (int64_t p = 0; p < P; ++p)
            for (int64_t j = 0; j < mcfg.J; ++j)
                for (int64_t d = 0; d < 3; ++d)
                    for (int64_t f = 0; f < mcfg.n_input; ++f)
                        req.input.at4(p, j, d, f) = w.X.at4(p, j, d, f);
        req.scene_state = w.scene_state;
        req.sample_count = cfg.sample_count;
        req.seed = cfg.seed * 0x9e3779b97f4a7c15ull + static_cast<uint64_t>(wi);
        req.zero_scene = cfg.zero_scene;
        req.zero_others = cfg.zero_others;
        req.noise_at_final_step = cfg.noise_at_final_step;
        req.skeleton = w.skeleton;
        ForecastResult fr = forecast(req, ckpt);

        for (int64_t k = 0; k < cfg.sample_count; ++k) {
            SceneRecording srec;
            srec.skeleton = w.skeleton;
            srec.total_frames = mcfg.N;
            srec.objects = w.scene_state;
            for (int64_t p = 0; p < P; ++p) {
                PersonTrack tr;
                tr.person_id = w.person_ids[static_cast<size_t>(p)];
                tr.first_frame = 0;
                tr.last_frame = mcfg.N - 1;
                tr.joints.resize(static_cast<size_t>(mcfg.N * mcfg.J * 3));
                for (int64_t f = 0; f < mcfg.N; ++f)
                    for (int64_t j = 0; j < mcfg.J; ++j)
                        for (int64_t d = 0; d < 3; ++d)
                            tr.joints[static_cast<size_t>((f * mcfg.J + j) * 3 + d)] =
                                static_cast<float>(fr.samples[static_cast<size_t>(k)]
                                                       .at4(p, j, d, f));
                srec.persons.push_back(std::move(tr));
            }
            write_recording(srec, out / ("window_" + pipe_detail::zero_pad(static_cast<int64_t>(wi))) /
                                      ("sample_" + pipe_detail::zero_pad(k)));
        }

        nlohmann::json jw;
        jw["index"] = wi;
        jw["start_frame"] = w.start_frame;
        jw["persons"] = w.person_ids;
        jw["fully_present"] = nlohmann::json::array();
        for (int64_t p = 0; p < P; ++p) {
            const auto& m = w.presence_mask[static_cast<size_t>(p)];
            jw["fully_present"].push_back(
                std::all_of(m.begin(), m.end(), [](bool b) { return b; }));
        }
        manifest["windows"].push_back(std::move(jw));
    }

    std::ofstream mf(out / "manifest.json", std::ios::trunc);
    if (!mf) throw PipelineError("sample: cannot write forecast manifest");
    mf << manifest.dump(2) << "\n";
    write_resolved_config(cfg, out);
}

/// One evaluable sequence: full (J,3,N) frames, with the first n being
/// ground-truth input.
struct EvalSequence {
    Tensor seq;
    int64_t n = 0;
    int64_t start_frame = 0;
    std::string person_id;
};

namespace pipe_detail {

/// Loads forecast output (or, absent a forecast manifest, windows of a
/// plain recording — the evaluate-GT-against-itself path).
inline std::vector<EvalSequence> load_eval_sequences(const std::filesystem::path& dir,
                                                     const RunConfig& cfg,
                                                     const SceneRecording& truth) {
    std::vector<EvalSequence> out;
    std::ifstream mf(dir / "manifest.json");
    nlohmann::json manifest;
    if (mf) {
        try {
            mf >> manifest;
        } catch (const nlohmann::json::exception&) {
            manifest = nlohmann::json();
        }
    }
    if (manifest.is_object() && manifest.value("format", "") == "sast-forecast-v1") {
        const int64_t n = manifest.at("n_input").get<int64_t>();
        for (const auto& jw : manifest.at("windows")) {
            int64_t wi = jw.at("index").get<int64_t>();
            auto persons = jw.at("persons").get<std::vector<std::string>>();
            auto full = jw.at("fully_present").get<std::vector<bool>>();
            for (int64_t k = 0;; ++k) {
                auto sdir = dir / ("window_" + zero_pad(wi)) / ("sample_" + zero_pad(k));
                if (!std::filesystem::exists(sdir / "manifest.json")) break;
                SceneRecording rec = load_recording(sdir);
                for (size_t p = 0; p < rec.persons.size(); ++p) {
                    if (p < full.size() && !full[p]) continue;  // padded in GT, not scoreable
                    const auto& tr = rec.persons[p];
                    const int64_t J = rec.skeleton.joint_count, N = tr.frames();
                    EvalSequence es;
                    es.seq = Tensor({J, 3, N});
                    for (int64_t f = 0; f < N; ++f)
                        for (int64_t j = 0; j < J; ++j)
                            for (int64_t d = 0; d < 3; ++d)
                                es.seq.at3(j, d, f) =
                                    tr.joints[static_cast<size_t>((f * J + j) * 3 + d)];
                    es.n = n;
                    es.start_frame = jw.at("start_frame").get<int64_t>();
                    es.person_id = p < persons.size() ? persons[p] : tr.person_id;
                    out.push_back(std::move(es));
                }
            }
        }
    } else {
        // Plain recording(s): treat each fully present person-window as one
        // "sample".
        for (const auto& rdir : recording_dirs(dir)) {
            SceneRecording rec = load_recording(rdir);
            auto windows = make_windows(rec, cfg.n_input, cfg.N, cfg.stride);
            for (const auto& w : windows)
                for (int64_t p = 0; p < w.person_count(); ++p) {
                    const auto& m = w.presence_mask[static_cast<size_t>(p)];
                    if (!std::all_of(m.begin(), m.end(), [](bool b) { return b; })) continue;
                    EvalSequence es;
                    es.seq = person_seq(w, p);
                    es.n = w.n;
                    es.start_frame = w.start_frame;
                    es.person_id = w.person_ids[static_cast<size_t>(p)];
                    out.push_back(std::move(es));
                }
        }
    }
    (void)truth;
    if (out.empty()) throw PipelineError("evaluate: no scoreable sequences in " + dir.string());
    return out;
}

/// The ground-truth frames matching an evaluated window, if the person is
/// fully present there.
inline std::optional<Tensor> truth_window(const SceneRecording& truth, const EvalSequence& es) {
    const int64_t J = truth.skeleton.joint_count, N = es.seq.dim(2);
    for (const auto& tr : truth.persons) {
        if (tr.person_id != es.person_id) continue;
        if (tr.first_frame > es.start_frame || tr.last_frame < es.start_frame + N - 1)
            return std::nullopt;
        Tensor t({J, 3, N});
        for (int64_t f = 0; f < N; ++f) {
            int64_t base = (es.start_frame + f - tr.first_frame) * J * 3;
            for (int64_t j = 0; j < J; ++j)
                for (int64_t d = 0; d < 3; ++d)
                    t.at3(j, d, f) = tr.joints[static_cast<size_t>(base + j * 3 + d)];
        }
        return t;
    }
    return std::nullopt;
}

inline Tensor slice_frames_pub(const Tensor& seq, int64_t start, int64_t len) {
    return met_detail::slice_frames(seq, start, len);
}

inline std::vector<Tensor> realism_pool(const std::vector<Tensor>& seqs, const SkeletonSpec& sk,
                                        int64_t stride) {
    std::vector<Tensor> out;
    for (const auto& seq : seqs)
        for (int64_t s = 0; s + kRealismFrames <= seq.dim(2); s += stride) {
            Tensor w = slice_frames_pub(seq, s, kRealismFrames);
            out.push_back(apply_norm(fit_norm(w, 1, sk), w));
        }
    return out;
}

}  // namespace pipe_detail

inline MetricsReport cmd_evaluate(const RunConfig& cfg,
                                  const std::filesystem::path& forecasts_dir,
                                  const std::filesystem::path& truth_dir,
                                  const std::filesystem::path& out_file) {
    auto truth_dirs = pipe_detail::recording_dirs(truth_dir);
    std::vector<SceneRecording> truth;
    for (const auto& d : truth_dirs) truth.push_back(load_recording(d));
    const SkeletonSpec& sk = truth[0].skeleton;

    ReferenceSet refset = build_reference_set(truth, cfg.kappa);
    auto sequences = pipe_detail::load_eval_sequences(forecasts_dir, cfg, truth[0]);

    MetricsReport rep;
    double ndms_sum = 0;
    int64_t ndms_count = 0;
    std::map<int64_t, std::pair<double, int64_t>> umwr_acc;
    std::vector<double> pred_lengths, truth_lengths;
    std::vector<Tensor> pred_seqs, truth_seqs;

    for (const auto& es : sequences) {
        const int64_t N = es.seq.dim(2);
        Tensor input = pipe_detail::slice_frames_pub(es.seq, 0, es.n);
        Tensor pred = pipe_detail::slice_frames_pub(es.seq, es.n, N - es.n);
        ndms_sum += ndms_score(pred, input, refset, sk);
        ++ndms_count;
        for (int64_t k = 2; k <= 10; k += 2) {
            if (es.n + static_cast<int64_t>(sk.fps) * k > N) break;
            auto& [sum, cnt] = umwr_acc[k];
            sum += umwr_at(es.seq, es.n, k, refset, sk);
            ++cnt;
        }
        Tensor r = root_trajectory(es.seq, sk);
        pred_lengths.push_back(trajectory_length(r, es.n, N));
        pred_seqs.push_back(es.seq);

        for (const auto& trec : truth) {
            if (auto tw = pipe_detail::truth_window(trec, es)) {
                Tensor tr = root_trajectory(*tw, sk);
                truth_lengths.push_back(trajectory_length(tr, es.n, N));
                truth_seqs.push_back(std::move(*tw));
                break;
            }
        }
    }
    rep.ndms = ndms_sum / static_cast<double>(ndms_count);
    for (const auto& [k, acc] : umwr_acc)
        rep.umwr_at_s[k] = acc.first / static_cast<double>(acc.second);

    double mean = 0;
    for (double d : pred_lengths) mean += d;
    mean /= static_cast<double>(pred_lengths.size());
    double var = 0;
    for (double d : pred_lengths) var += (d - mean) * (d - mean);
    rep.trajectory_mean = mean;
    rep.trajectory_std = std::sqrt(var / static_cast<double>(pred_lengths.size()));
    rep.trajectory_w1 =
        truth_lengths.empty() ? 0.0 : wasserstein1(pred_lengths, truth_lengths);

    rep.velocity = velocity_curve(pred_seqs, sk);

    // Realism: truth windows against forecast windows.
    if (!truth_seqs.empty()) {
        auto real_pool = pipe_detail::realism_pool(truth_seqs, sk, cfg.realism_stride);
        auto fake_pool = pipe_detail::realism_pool(pred_seqs, sk, cfg.realism_stride);
        if (!real_pool.empty() && !fake_pool.empty()) {
            RealismTrainReport rt = train_realism(real_pool, fake_pool, cfg.realism);
            std::printf("realism classifier: accuracy %.3f, auc %.3f\n", rt.accuracy, rt.auc);
            for (int64_t k = 2; k <= 10; ++k) {
                if (k * static_cast<int64_t>(sk.fps) < kRealismFrames) continue;
                double sum = 0;
                int64_t cnt = 0;
                for (const auto& seq : pred_seqs) {
                    if (std::min(seq.dim(2), k * static_cast<int64_t>(sk.fps)) < kRealismFrames)
                        continue;
                    sum += realism_at_k(seq, rt.params, k, sk);
                    ++cnt;
                }
                if (cnt > 0) rep.realism_at_s[k] = sum / static_cast<double>(cnt);
            }
        }
    }

    std::filesystem::create_directories(out_file.parent_path());
    std::ofstream f(out_file, std::ios::trunc);
    if (!f) throw PipelineError("evaluate: cannot write " + out_file.string());
    f << rep.to_json().dump(2) << "\n";
    return rep;
}

inline void cmd_plot(const RunConfig& cfg, const std::filesystem::path& metrics_file,
                     const std::filesystem::path& forecasts_dir,
                     const std::filesystem::path& out) {
    std::filesystem::create_directories(out);
    SkeletonSpec sk = SkeletonSpec::default_spec();

    // Trajectories from the forecasts.
    std::vector<Tensor> seqs;
    int64_t n_input = cfg.n_input;
    {
        std::ifstream mf(forecasts_dir / "manifest.json");
        nlohmann::json manifest;
        if (mf) mf >> manifest;
        std::vector<std::filesystem::path> dirs;
        if (manifest.is_object() && manifest.value("format", "") == "sast-forecast-v1") {
            n_input = manifest.at("n_input").get<int64_t>();
            for (const auto& e :
                 std::filesystem::recursive_directory_iterator(forecasts_dir))
                if (e.is_directory() &&
                    std::filesystem::exists(e.path() / "manifest.json") &&
                    e.path().filename().string().rfind("sample_", 0) == 0)
                    dirs.push_back(e.path());
            std::sort(dirs.begin(), dirs.end());
        } else {
            dirs = pipe_detail::recording_dirs(forecasts_dir);
        }
        for (const auto& d : dirs) {
            SceneRecording rec = load_recording(d);
            sk = rec.skeleton;
            const int64_t J = sk.joint_count;
            for (const auto& tr : rec.persons) {
                Tensor seq({J, 3, tr.frames()});
                for (int64_t f = 0; f < tr.frames(); ++f)
                    for (int64_t j = 0; j < J; ++j)
                        for (int64_t d2 = 0; d2 < 3; ++d2)
                            seq.at3(j, d2, f) =
                                tr.joints[static_cast<size_t>((f * J + j) * 3 + d2)];
                seqs.push_back(std::move(seq));
            }
        }
    }
    if (seqs.empty()) throw PipelineError("plot: no sequences to plot");
    plot_trajectories(seqs, sk, n_input, out / "trajectories.svg", 20, cfg.seed);

    std::vector<std::pair<std::string, std::vector<double>>> curves;
    {
        std::ifstream f(metrics_file);
        if (!f) throw PipelineError("plot: cannot open metrics file " + metrics_file.string());
        nlohmann::json j;
        f >> j;
        if (j.contains("velocity_curve"))
            curves.emplace_back("forecast", j.at("velocity_curve").get<std::vector<double>>());
    }
    if (curves.empty()) curves.emplace_back("forecast", velocity_curve(seqs, sk));
    plot_velocity_curves(curves, sk.fps, out / "velocity.svg");
}

}  // namespace sast
