#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "sast/tensor.hpp"

namespace sast {

/// Variance schedule tables, indexed 1..T (index 0 is the alpha_bar[0]=1
/// convention).
struct DiffusionSchedule {
    int T = 0;
    std::vector<double> beta;        // beta[t], t in 1..T
    std::vector<double> alpha;       // 1 - beta[t]
    std::vector<double> alpha_bar;   // prod_{s<=t} alpha[s]; alpha_bar[0] = 1
    std::vector<double> beta_tilde;  // posterior variance

    void validate() const {
        if (T < 1) throw std::invalid_argument("schedule: T must be >= 1");
        for (int t = 1; t <= T; ++t) {
            size_t i = static_cast<size_t>(t);
            if (std::abs(alpha[i] - (1.0 - beta[i])) > 1e-15)
                throw std::logic_error("schedule: alpha != 1 - beta");
            if (alpha_bar[i] >= alpha_bar[i - 1])
                throw std::logic_error("schedule: alpha_bar not strictly decreasing");
        }
    }
};

/// Cosine schedule: alpha_bar(t) = f(t)/f(0), f(t) = cos^2(((t/T + s)/(1+s)) * pi/2),
/// s = 0.008, beta clipped at 0.999.
inline DiffusionSchedule cosine_schedule(int T) {
    if (T < 1) throw std::invalid_argument("cosine_schedule: T must be >= 1");
    constexpr double s = 0.008;
    auto f = [&](double t) {
        double v = std::cos(((t / T + s) / (1.0 + s)) * M_PI / 2.0);
        return v * v;
    };
    DiffusionSchedule sch;
    sch.T = T;
    sch.beta.assign(static_cast<size_t>(T) + 1, 0.0);
    sch.alpha.assign(static_cast<size_t>(T) + 1, 0.0);
    sch.alpha_bar.assign(static_cast<size_t>(T) + 1, 1.0);
    sch.beta_tilde.assign(static_cast<size_t>(T) + 1, 0.0);
    const double f0 = f(0.0);
    for (int t = 1; t <= T; ++t) {
        size_t i = static_cast<size_t>(t);
        double ab_t = f(static_cast<double>(t)) / f0;
        double beta = 1.0 - ab_t / sch.alpha_bar[i - 1];
        beta = std::min(beta, 0.999);
        sch.beta[i] = beta;
        sch.alpha[i] = 1.0 - beta;
        sch.alpha_bar[i] = sch.alpha_bar[i - 1] * sch.alpha[i];
        sch.beta_tilde[i] = (1.0 - sch.alpha_bar[i - 1]) / (1.0 - sch.alpha_bar[i]) * beta;
    }
    return sch;
}

/// Forward noising: x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps.
inline Tensor q_sample(const Tensor& x0, int t, const Tensor& eps,
                       const DiffusionSchedule& sch) {
    if (t < 1 || t > sch.T) throw std::invalid_argument("q_sample: t outside 1..T");
    if (!x0.same_shape(eps)) throw std::invalid_argument("q_sample: eps shape mismatch");
    const double ab = sch.alpha_bar[static_cast<size_t>(t)];
    const double a = std::sqrt(ab), b = std::sqrt(1.0 - ab);
    Tensor out = x0;
    for (int64_t i = 0; i < out.size(); ++i) out[i] = a * x0[i] + b * eps[i];
    return out;
}

/// Reverse posterior step given the model's clean-sequence estimate.
/// Omitting `noise` gives the deterministic mean step.
inline Tensor reverse_step(const Tensor& x_t, const Tensor& x0_hat, int t,
                           const DiffusionSchedule& sch, const Tensor* noise = nullptr) {
    if (t < 1 || t > sch.T) throw std::invalid_argument("reverse_step: t outside 1..T");
    if (!x_t.same_shape(x0_hat)) throw std::invalid_argument("reverse_step: shape mismatch");
    const size_t i = static_cast<size_t>(t);
    const double ab_t = sch.alpha_bar[i];
    const double ab_prev = sch.alpha_bar[i - 1];
    const double beta = sch.beta[i];
    const double c0 = std::sqrt(ab_prev) * beta / (1.0 - ab_t);
    const double ct = std::sqrt(sch.alpha[i]) * (1.0 - ab_prev) / (1.0 - ab_t);
    const double sigma = std::sqrt(sch.beta_tilde[i]);
    Tensor out = x_t;
    for (int64_t k = 0; k < out.size(); ++k) {
        double v = c0 * x0_hat[k] + ct * x_t[k];
        if (noise) v += sigma * (*noise)[k];
        out[k] = v;
    }
    return out;
}

/// Masked L1 over output frames n+1..N. `prediction`/`target` are (J,3,N);
/// mask[f] marks real frames.
inline double training_loss(const Tensor& prediction, const Tensor& target,
                            const std::vector<bool>& mask, int64_t n) {
    if (!prediction.same_shape(target))
        throw std::invalid_argument("training_loss: shape mismatch");
    if (prediction.rank() != 3) throw std::invalid_argument("training_loss: expected (J,3,N)");
    const int64_t J = prediction.dim(0), N = prediction.dim(2);
    if (static_cast<int64_t>(mask.size()) != N)
        throw std::invalid_argument("training_loss: mask length mismatch");
    double sum = 0.0;
    int64_t count = 0;
    for (int64_t f = n; f < N; ++f) {
        if (!mask[static_cast<size_t>(f)]) continue;
        for (int64_t j = 0; j < J; ++j)
            for (int64_t d = 0; d < 3; ++d)
                sum += std::abs(prediction.at3(j, d, f) - target.at3(j, d, f));
        count += J * 3;
    }
    if (count == 0)
        throw std::invalid_argument("training_loss: all output frames masked");
    return sum / static_cast<double>(count);
}

}  // namespace sast
