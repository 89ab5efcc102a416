#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "sast/checkpoint.hpp"
#include "sast/denoiser.hpp"
#include "sast/normalize.hpp"
#include "sast/rng.hpp"
#include "sast/schedule.hpp"

namespace sast {

struct ForecastRequest {
    Tensor input;                        // (P, J, 3, n), global coordinates
    std::vector<SceneObject> scene_state;
    int64_t sample_count = 1;
    uint64_t seed = 0;
    bool zero_scene = false;
    bool zero_others = false;
    bool noise_at_final_step = false;    // reverse-step noise at t=1 (off by default)
    /// Noise-stream ids per person; defaults to 0..P-1. Keeping these fixed
    /// makes per-person draws independent of who else is in the request.
    std::vector<uint64_t> person_stream_ids;
    int64_t max_persons = 64;
    SkeletonSpec skeleton = SkeletonSpec::default_spec();
};

struct ForecastResult {
    std::vector<Tensor> samples;              // K tensors (P, J, 3, N), global
    std::vector<AffineTransform2D> transforms;  // per person
};

/// Ablation switch per the zero-output protocol: the flagged branch output
/// is forced to zero, which removes its cross-attention contribution
/// exactly (the model then skips the branch outright).
inline DenoiserModel ablate(const DenoiserModel& model, bool zero_scene, bool zero_others) {
    DenoiserModel m = model;
    m.zero_scene = m.zero_scene || zero_scene;
    m.zero_others = m.zero_others || zero_others;
    return m;
}

/// Rebuilds every person's other-person context from the current clean
/// estimates: de-normalize and unscale all estimates into the global frame,
/// overwrite input frames 1..n with the known ground truth, then re-normalize
/// under every other person's transform. Returned sequences are normalized
/// but not scaled.
inline std::vector<Tensor> exchange_context(const std::vector<Tensor>& x0_scaled,
                                            const std::vector<AffineTransform2D>& transforms,
                                            const MinMaxScaler& scaler,
                                            const Tensor& input_global, int64_t n) {
    const int64_t P = static_cast<int64_t>(x0_scaled.size());
    if (static_cast<int64_t>(transforms.size()) != P)
        throw std::invalid_argument("exchange_context: transform count mismatch");
    std::vector<Tensor> global(static_cast<size_t>(P));
    for (int64_t i = 0; i < P; ++i) {
        Tensor est = invert_norm(transforms[static_cast<size_t>(i)],
                                 scaler.unscale(x0_scaled[static_cast<size_t>(i)]));
        const int64_t J = est.dim(0);
        for (int64_t j = 0; j < J; ++j)
            for (int64_t d = 0; d < 3; ++d)
                for (int64_t f = 0; f < n; ++f)
                    est.at3(j, d, f) = input_global.at4(i, j, d, f);
        global[static_cast<size_t>(i)] = std::move(est);
    }
    std::vector<Tensor> others(static_cast<size_t>(P));
    const int64_t J = global[0].dim(0), N = global[0].dim(2);
    for (int64_t i = 0; i < P; ++i) {
        Tensor O({P - 1, J, 3, N});
        int64_t oi = 0;
        for (int64_t j2 = 0; j2 < P; ++j2) {
            if (j2 == i) continue;
            Tensor norm = apply_norm(transforms[static_cast<size_t>(i)],
                                     global[static_cast<size_t>(j2)]);
            for (int64_t j = 0; j < J; ++j)
                for (int64_t d = 0; d < 3; ++d)
                    for (int64_t f = 0; f < N; ++f) O.at4(oi, j, d, f) = norm.at3(j, d, f);
            ++oi;
        }
        others[static_cast<size_t>(i)] = std::move(O);
    }
    return others;
}

namespace inf_detail {

inline Tensor scale_stack(const Tensor& stack, const MinMaxScaler& scaler) {
    const int64_t P = stack.dim(0), J = stack.dim(1), N = stack.dim(3);
    Tensor out({P, J, 3, N});
    for (int64_t p = 0; p < P; ++p) {
        Tensor seq({J, 3, N});
        for (int64_t j = 0; j < J; ++j)
            for (int64_t d = 0; d < 3; ++d)
                for (int64_t f = 0; f < N; ++f) seq.at3(j, d, f) = stack.at4(p, j, d, f);
        Tensor sc = scaler.scale(seq);
        for (int64_t j = 0; j < J; ++j)
            for (int64_t d = 0; d < 3; ++d)
                for (int64_t f = 0; f < N; ++f) out.at4(p, j, d, f) = sc.at3(j, d, f);
    }
    return out;
}

/// Zero-velocity extension of a (J,3,n) sequence to N frames.
inline Tensor extend_zero_velocity(const Tensor& seq, int64_t N) {
    const int64_t J = seq.dim(0), n = seq.dim(2);
    Tensor out({J, 3, N});
    for (int64_t j = 0; j < J; ++j)
        for (int64_t d = 0; d < 3; ++d)
            for (int64_t f = 0; f < N; ++f) out.at3(j, d, f) = seq.at3(j, d, std::min(f, n - 1));
    return out;
}

}  // namespace inf_detail

/// Joint multi-person sampling: per-person diffusion chains run in
/// parallel, exchanging de-normalized clean-sequence estimates after every
/// step. Deterministic per (seed, sample, person stream id).
inline ForecastResult forecast(const ForecastRequest& req, const Checkpoint& ckpt) {
    const DenoiserConfig& cfg = ckpt.model.cfg;
    const int64_t J = cfg.J, N = cfg.N, n = cfg.n_input;
    if (req.input.rank() != 4 || req.input.dim(1) != J || req.input.dim(2) != 3 ||
        req.input.dim(3) != n)
        throw std::invalid_argument("forecast: input must be (P,J,3,n) matching the model");
    const int64_t P = req.input.dim(0);
    if (P < 1) throw std::invalid_argument("forecast: need at least one person");
    if (P > req.max_persons) throw std::invalid_argument("forecast: person cap exceeded");
    if (req.sample_count < 1) throw std::invalid_argument("forecast: sample_count must be >= 1");
    if (ckpt.scaler.channels() != J * 3)
        throw std::invalid_argument("forecast: checkpoint scaler missing or mismatched");
    if (ckpt.basis.count() < 1)
        throw std::invalid_argument("forecast: checkpoint basis missing");
    std::vector<uint64_t> stream_ids = req.person_stream_ids;
    if (stream_ids.empty())
        for (int64_t i = 0; i < P; ++i) stream_ids.push_back(static_cast<uint64_t>(i));
    if (static_cast<int64_t>(stream_ids.size()) != P)
        throw std::invalid_argument("forecast: person_stream_ids size mismatch");

    const DenoiserModel model = ablate(ckpt.model, req.zero_scene, req.zero_others);
    const DiffusionSchedule schedule = ckpt.schedule();
    const int T = schedule.T;

    ForecastResult result;

    // Per-person normalization from the input frames.
    std::vector<Tensor> input_seq(static_cast<size_t>(P));
    for (int64_t i = 0; i < P; ++i) {
        Tensor seq({J, 3, n});
        for (int64_t j = 0; j < J; ++j)
            for (int64_t d = 0; d < 3; ++d)
                for (int64_t f = 0; f < n; ++f) seq.at3(j, d, f) = req.input.at4(i, j, d, f);
        input_seq[static_cast<size_t>(i)] = seq;
        result.transforms.push_back(fit_norm(seq, n, req.skeleton));
    }

    // Scene encoding per person (static scene, computed once).
    std::vector<std::vector<std::vector<double>>> scene_tokens(static_cast<size_t>(P));
    if (!model.zero_scene) {
        for (int64_t i = 0; i < P; ++i) {
            SceneEncoding enc = encode_scene(req.scene_state, ckpt.basis,
                                             &result.transforms[static_cast<size_t>(i)]);
            for (const auto& o : enc.objects)
                scene_tokens[static_cast<size_t>(i)].push_back(o.concat());
        }
    }

    // Normalized + scaled input frames per person.
    std::vector<Tensor> x_input(static_cast<size_t>(P));
    for (int64_t i = 0; i < P; ++i)
        x_input[static_cast<size_t>(i)] = ckpt.scaler.scale(
            apply_norm(result.transforms[static_cast<size_t>(i)], input_seq[static_cast<size_t>(i)]));

    // Bootstrap others context: zero-velocity extension of the known inputs.
    Tensor input_global_ext({P, J, 3, N});
    for (int64_t i = 0; i < P; ++i) {
        Tensor ext = inf_detail::extend_zero_velocity(input_seq[static_cast<size_t>(i)], N);
        for (int64_t j = 0; j < J; ++j)
            for (int64_t d = 0; d < 3; ++d)
                for (int64_t f = 0; f < N; ++f) input_global_ext.at4(i, j, d, f) = ext.at3(j, d, f);
    }

    for (int64_t k = 0; k < req.sample_count; ++k) {
        std::vector<Rng> rngs;
        for (int64_t i = 0; i < P; ++i)
            rngs.push_back(Rng::derive(req.seed, static_cast<uint64_t>(k),
                                       stream_ids[static_cast<size_t>(i)], 0x464353u));

        std::vector<Tensor> x_t(static_cast<size_t>(P));
        for (int64_t i = 0; i < P; ++i) {
            Tensor x({J, 3, N});
            for (int64_t idx = 0; idx < x.size(); ++idx)
                x[idx] = rngs[static_cast<size_t>(i)].gauss();
            x_t[static_cast<size_t>(i)] = std::move(x);
        }

        // Others context for the first denoising step (t = T): built from
        // the zero-velocity-extended inputs.
        std::vector<Tensor> others_norm(static_cast<size_t>(P));
        if (!model.zero_others && P > 1) {
            for (int64_t i = 0; i < P; ++i) {
                Tensor O({P - 1, J, 3, N});
                int64_t oi = 0;
                for (int64_t j2 = 0; j2 < P; ++j2) {
                    if (j2 == i) continue;
                    Tensor seq({J, 3, N});
                    for (int64_t j = 0; j < J; ++j)
                        for (int64_t d = 0; d < 3; ++d)
                            for (int64_t f = 0; f < N; ++f)
                                seq.at3(j, d, f) = input_global_ext.at4(j2, j, d, f);
                    Tensor nrm = apply_norm(result.transforms[static_cast<size_t>(i)], seq);
                    for (int64_t j = 0; j < J; ++j)
                        for (int64_t d = 0; d < 3; ++d)
                            for (int64_t f = 0; f < N; ++f) O.at4(oi, j, d, f) = nrm.at3(j, d, f);
                    ++oi;
                }
                others_norm[static_cast<size_t>(i)] = std::move(O);
            }
        }

        std::vector<Tensor> x0_hat(static_cast<size_t>(P));
        for (int t = T; t >= 1; --t) {
            for (int64_t i = 0; i < P; ++i) {
                DenoiseInput in;
                in.x_t = Tensor({J, 3, N}, x_t[static_cast<size_t>(i)].vec());
                in.x_input = x_input[static_cast<size_t>(i)];
                if (!model.zero_others && P > 1)
                    in.others = inf_detail::scale_stack(others_norm[static_cast<size_t>(i)],
                                                        ckpt.scaler);
                else
                    in.others = Tensor({0, J, 3, N});
                in.scene_tokens = scene_tokens[static_cast<size_t>(i)];
                in.t = t;
                x0_hat[static_cast<size_t>(i)] = denoise(model, in);
            }
            for (int64_t i = 0; i < P; ++i) {
                Tensor noise;
                const bool add_noise = (t > 1) || req.noise_at_final_step;
                if (add_noise) {
                    noise = Tensor({J, 3, N});
                    for (int64_t idx = 0; idx < noise.size(); ++idx)
                        noise[idx] = rngs[static_cast<size_t>(i)].gauss();
                }
                x_t[static_cast<size_t>(i)] =
                    reverse_step(x_t[static_cast<size_t>(i)], x0_hat[static_cast<size_t>(i)], t,
                                 schedule, add_noise ? &noise : nullptr);
            }
            if (!model.zero_others && P > 1 && t > 1)
                others_norm = exchange_context(x0_hat, result.transforms, ckpt.scaler,
                                               req.input, n);
        }

        // Final: unscale, de-normalize, splice ground-truth input frames.
        Tensor sample({P, J, 3, N});
        for (int64_t i = 0; i < P; ++i) {
            Tensor global = invert_norm(result.transforms[static_cast<size_t>(i)],
                                        ckpt.scaler.unscale(x_t[static_cast<size_t>(i)]));
            for (int64_t j = 0; j < J; ++j)
                for (int64_t d = 0; d < 3; ++d)
                    for (int64_t f = 0; f < N; ++f)
                        sample.at4(i, j, d, f) = (f < n) ? req.input.at4(i, j, d, f)
                                                         : global.at3(j, d, f);
        }
        result.samples.push_back(std::move(sample));
    }
    return result;
}

}  // namespace sast
