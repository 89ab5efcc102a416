#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sast/denoiser.hpp"
#include "sast/io.hpp"
#include "sast/normalize.hpp"
#include "sast/schedule.hpp"
#include "sast/windowing.hpp"

namespace sast {

struct TrainConfig {
    int T = 1000;
    int64_t total_steps = 20000;       // full-scale runs use 680k
    int64_t batch_size = 32;
    double lr_start = 2e-7;
    double lr_end = 5e-5;
    double weight_decay = 1e-2;
    double undersample_fraction = 0.5;
    uint64_t seed = 0;
    int64_t log_every = 100;

    void validate() const {
        if (T < 1 || total_steps < 1 || batch_size < 1)
            throw std::invalid_argument("train config: counts must be positive");
        if (lr_start > lr_end)
            throw std::invalid_argument("train config: expected lr_start <= lr_end");
        if (undersample_fraction < 0 || undersample_fraction > 1)
            throw std::invalid_argument("train config: undersample fraction outside [0,1]");
    }

    double lr_at(int64_t step) const {
        if (total_steps <= 1) return lr_end;
        double f = static_cast<double>(step) / static_cast<double>(total_steps - 1);
        return lr_start + (lr_end - lr_start) * std::min(1.0, f);
    }
};

/// Adam with decoupled weight decay over a named parameter store.
class AdamW {
public:
    AdamW(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(ParamStore& params, const std::map<std::string, Tensor>& grads, double lr,
              double weight_decay) {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        for (auto& [name, p] : params) {
            auto git = grads.find(name);
            if (git == grads.end()) continue;
            const Tensor& g = git->second;
            Tensor& m = m_[name];
            Tensor& v = v_[name];
            if (m.size() != p.size()) m = Tensor(p.shape());
            if (v.size() != p.size()) v = Tensor(p.shape());
            for (int64_t i = 0; i < p.size(); ++i) {
                m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
                v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
                double mhat = m[i] / bc1;
                double vhat = v[i] / bc2;
                p[i] -= lr * (mhat / (std::sqrt(vhat) + eps_) + weight_decay * p[i]);
            }
        }
    }

    // Exposed for checkpointing so a resumed run continues bit-exactly.
    std::map<std::string, Tensor>& m() { return m_; }
    std::map<std::string, Tensor>& v() { return v_; }
    int64_t& t() { return t_; }

private:
    double beta1_, beta2_, eps_;
    int64_t t_ = 0;
    std::map<std::string, Tensor> m_, v_;
};

struct LossRecord {
    int64_t step;
    double loss;
    double lr;
};

inline void write_loss_csv(const std::filesystem::path& path,
                           const std::vector<LossRecord>& history) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write loss history: " + path.string());
    f << "step,loss,lr\n";
    for (const auto& r : history) f << r.step << "," << r.loss << "," << r.lr << "\n";
}

/// One prepared, normalized and scaled training example.
struct TrainExample {
    Tensor x_scaled;        // (J, 3, N)
    Tensor others_scaled;   // (P-1, J, 3, N)
    std::vector<std::vector<double>> scene_tokens;
    std::vector<bool> mask;
    int64_t n;
};

inline TrainExample prepare_example(const Datapoint& dp, const MinMaxScaler& scaler,
                                    int64_t n) {
    TrainExample ex;
    ex.x_scaled = scaler.scale(dp.x);
    const int64_t P1 = dp.others.dim(0), J = dp.others.dim(1), N = dp.others.dim(3);
    ex.others_scaled = Tensor({P1, J, 3, N});
    for (int64_t p = 0; p < P1; ++p) {
        Tensor seq({J, 3, N});
        for (int64_t j = 0; j < J; ++j)
            for (int64_t d = 0; d < 3; ++d)
                for (int64_t f = 0; f < N; ++f) seq.at3(j, d, f) = dp.others.at4(p, j, d, f);
        Tensor sc = scaler.scale(seq);
        for (int64_t j = 0; j < J; ++j)
            for (int64_t d = 0; d < 3; ++d)
                for (int64_t f = 0; f < N; ++f) ex.others_scaled.at4(p, j, d, f) = sc.at3(j, d, f);
    }
    for (const auto& obj : dp.scene.objects) ex.scene_tokens.push_back(obj.concat());
    ex.mask = dp.mask;
    ex.n = n;
    return ex;
}

/// Builds the per-person datapoints for every window.
inline std::vector<TrainExample> build_training_set(
    const std::vector<MultiPersonWindow>& windows, const BasisPointSet& basis,
    const MinMaxScaler& scaler) {
    std::vector<TrainExample> out;
    for (const auto& w : windows)
        for (int64_t i = 0; i < w.person_count(); ++i)
            out.push_back(prepare_example(build_datapoint(w, i, basis), scaler, w.n));
    return out;
}

/// Masked-mean-L1 weights over output frames; entries sum to 1/count each.
inline Tensor loss_weights(int64_t J, int64_t N, const std::vector<bool>& mask, int64_t n) {
    Tensor w({J * 3, N});
    int64_t count = 0;
    for (int64_t f = n; f < N; ++f)
        if (mask[static_cast<size_t>(f)]) count += J * 3;
    if (count == 0) throw std::invalid_argument("loss_weights: all output frames masked");
    const double inv = 1.0 / static_cast<double>(count);
    for (int64_t c = 0; c < J * 3; ++c)
        for (int64_t f = n; f < N; ++f)
            if (mask[static_cast<size_t>(f)]) w.at2(c, f) = inv;
    return w;
}

struct TrainResult {
    std::vector<LossRecord> history;
};

/// Denoising training loop: per batch element sample an example, a uniform
/// timestep and gaussian noise, noise the scaled sequence, predict the
/// clean sequence and apply masked L1 on the output frames. Deterministic
/// given the config seed.
inline TrainResult train(DenoiserModel& model, const std::vector<TrainExample>& dataset,
                         const TrainConfig& cfg, const DiffusionSchedule& schedule,
                         AdamW* optimizer = nullptr, int64_t start_step = 0,
                         const std::function<void(int64_t, double)>& progress = {}) {
    cfg.validate();
    if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
    const int64_t J = model.cfg.J, N = model.cfg.N;

    AdamW local_opt;
    AdamW& opt = optimizer ? *optimizer : local_opt;
    TrainResult res;
    for (int64_t step = start_step; step < cfg.total_steps; ++step) {
        Rng rng = Rng::derive(cfg.seed, static_cast<uint64_t>(step), 0x7261u);
        std::map<std::string, Tensor> grads;
        double batch_loss = 0.0;
        for (int64_t b = 0; b < cfg.batch_size; ++b) {
            const TrainExample& ex = dataset[static_cast<size_t>(
                rng.uniform_int(static_cast<int64_t>(dataset.size())))];
            int t = static_cast<int>(rng.uniform_int(cfg.T)) + 1;
            Tensor eps({J, 3, N});
            for (int64_t i = 0; i < eps.size(); ++i) eps[i] = rng.gauss();

            DenoiseInput in;
            in.x_t = q_sample(ex.x_scaled, t, eps, schedule);
            in.x_input = Tensor({J, 3, ex.n});
            for (int64_t j = 0; j < J; ++j)
                for (int64_t d = 0; d < 3; ++d)
                    for (int64_t f = 0; f < ex.n; ++f)
                        in.x_input.at3(j, d, f) = ex.x_scaled.at3(j, d, f);
            in.others = ex.others_scaled;
            in.scene_tokens = ex.scene_tokens;
            in.t = t;

            std::map<std::string, ag::Var> param_vars;
            ag::Var pred = denoise_var(model, in, true, &param_vars);
            Tensor target({J * 3, N}, ex.x_scaled.vec());
            Tensor w = loss_weights(J, N, ex.mask, ex.n);
            ag::Var loss = ag::weighted_l1(pred, target, w);
            if (!std::isfinite(loss->value[0]))
                throw std::runtime_error("train: NaN loss at step " + std::to_string(step) +
                                         " (t=" + std::to_string(t) + ")");
            batch_loss += loss->value[0];
            ag::backward(loss);

            for (auto& [name, var] : param_vars) {
                if (var->grad.size() != var->value.size()) continue;  // unused this pass
                auto it = grads.find(name);
                if (it == grads.end())
                    grads.emplace(name, std::move(var->grad));
                else
                    it->second += var->grad;
            }
        }
        batch_loss /= static_cast<double>(cfg.batch_size);
        const double scale = 1.0 / static_cast<double>(cfg.batch_size);
        for (auto& [name, g] : grads) g *= scale;
        const double lr = cfg.lr_at(step);
        opt.step(model.params, grads, lr, cfg.weight_decay);
        if (step % cfg.log_every == 0 || step + 1 == cfg.total_steps) {
            res.history.push_back({step, batch_loss, lr});
            if (progress) progress(step, batch_loss);
        }
    }
    return res;
}

}  // namespace sast
