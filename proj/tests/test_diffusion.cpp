#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sast/rng.hpp"
#include "sast/schedule.hpp"

using namespace sast;

namespace {

// Independent closed-form oracle for the cosine schedule.
double alpha_bar_oracle(int t, int T) {
    const double s = 0.008;
    auto f = [&](double u) {
        double c = std::cos((u / T + s) / (1.0 + s) * M_PI / 2.0);
        return c * c;
    };
    return f(static_cast<double>(t)) / f(0.0);
}

}  // namespace

TEST_CASE("cosine schedule invariants and closed form") {
    const int T = 1000;
    DiffusionSchedule sch = cosine_schedule(T);
    CHECK(sch.alpha_bar[0] == 1.0);
    CHECK(sch.alpha_bar[T] < 1e-3);
    for (int t = 1; t <= T; ++t) {
        CHECK(sch.alpha[t] == 1.0 - sch.beta[t]);
        CHECK(sch.alpha_bar[t] < sch.alpha_bar[t - 1]);
        CHECK(sch.alpha_bar[t] ==
              doctest::Approx(sch.alpha_bar[t - 1] * sch.alpha[t]).epsilon(1e-12));
        CHECK(sch.beta[t] <= 0.999);
        CHECK(sch.beta[t] > 0.0);
        // Where beta is unclipped it must match the closed form.
        double ratio = alpha_bar_oracle(t, T) / alpha_bar_oracle(t - 1, T);
        if (1.0 - ratio < 0.999)
            CHECK(sch.beta[t] == doctest::Approx(1.0 - ratio).epsilon(1e-9));
        double bt = (1.0 - sch.alpha_bar[t - 1]) / (1.0 - sch.alpha_bar[t]) * sch.beta[t];
        CHECK(sch.beta_tilde[t] == doctest::Approx(bt).epsilon(1e-12));
    }
    CHECK_NOTHROW(sch.validate());
}

TEST_CASE("q_sample") {
    DiffusionSchedule sch = cosine_schedule(10);
    SUBCASE("hand-evaluated scalar case") {
        // Force alpha_bar = 0.64 at one step for the arithmetic check.
        DiffusionSchedule s2 = sch;
        s2.alpha_bar[3] = 0.64;
        Tensor x0({1, 1, 1}), eps({1, 1, 1});
        x0[0] = 1.0;
        eps[0] = 0.5;
        Tensor xt = q_sample(x0, 3, eps, s2);
        CHECK(xt[0] == doctest::Approx(0.8 * 1.0 + 0.6 * 0.5).epsilon(1e-12));
    }
    SUBCASE("t out of range") {
        Tensor x0({1, 1, 1}), eps({1, 1, 1});
        CHECK_THROWS_AS(q_sample(x0, 0, eps, sch), std::invalid_argument);
        CHECK_THROWS_AS(q_sample(x0, 11, eps, sch), std::invalid_argument);
    }
    SUBCASE("Monte-Carlo mean and variance") {
        const int t = 6, draws = 100000;
        const double x0v = 0.7;
        Rng rng(99);
        double sum = 0, sumsq = 0;
        for (int i = 0; i < draws; ++i) {
            Tensor x0({1, 1, 1}), eps({1, 1, 1});
            x0[0] = x0v;
            eps[0] = rng.gauss();
            double v = q_sample(x0, t, eps, sch)[0];
            sum += v;
            sumsq += v * v;
        }
        double mean = sum / draws;
        double var = sumsq / draws - mean * mean;
        double expect_mean = std::sqrt(sch.alpha_bar[t]) * x0v;
        double expect_var = 1.0 - sch.alpha_bar[t];
        double se_mean = std::sqrt(expect_var / draws);
        double se_var = expect_var * std::sqrt(2.0 / draws);
        CHECK(std::abs(mean - expect_mean) < 3 * se_mean);
        CHECK(std::abs(var - expect_var) < 3 * se_var);
    }
}

namespace {

// Reverse-step mean written out independently from the standard posterior
// coefficient formulas.
double mu_oracle(double xt, double x0, int t, const DiffusionSchedule& s) {
    double ab_t = s.alpha_bar[t], ab_p = s.alpha_bar[t - 1];
    double beta = s.beta[t], alpha = s.alpha[t];
    double c0 = std::sqrt(ab_p) * beta / (1.0 - ab_t);
    double ct = std::sqrt(alpha) * (1.0 - ab_p) / (1.0 - ab_t);
    return c0 * x0 + ct * xt;
}

}  // namespace

TEST_CASE("reverse step") {
    DiffusionSchedule sch = cosine_schedule(50);
    SUBCASE("t=1 returns the clean estimate exactly") {
        Rng rng(7);
        Tensor xt({2, 3, 4}), x0({2, 3, 4});
        for (int64_t i = 0; i < xt.size(); ++i) {
            xt[i] = rng.gauss();
            x0[i] = rng.gauss();
        }
        Tensor out = reverse_step(xt, x0, 1, sch);
        for (int64_t i = 0; i < out.size(); ++i) CHECK(out[i] == x0[i]);
    }
    SUBCASE("coefficients match the symbolic oracle to 1e-12") {
        Rng rng(8);
        for (int rep = 0; rep < 200; ++rep) {
            int t = 2 + static_cast<int>(rng.uniform_int(49));
            Tensor xt({1, 1, 1}), x0({1, 1, 1});
            xt[0] = rng.uniform(-2.0, 2.0);
            x0[0] = rng.uniform(-2.0, 2.0);
            Tensor out = reverse_step(xt, x0, t, sch);
            CHECK(out[0] == doctest::Approx(mu_oracle(xt[0], x0[0], t, sch)).epsilon(1e-12));
        }
    }
    SUBCASE("noise scales with sqrt of beta_tilde") {
        Tensor xt({1, 1, 1}), x0({1, 1, 1}), noise({1, 1, 1});
        xt[0] = 0.3;
        x0[0] = -0.2;
        noise[0] = 1.0;
        int t = 20;
        Tensor without = reverse_step(xt, x0, t, sch);
        Tensor with = reverse_step(xt, x0, t, sch, &noise);
        CHECK(with[0] - without[0] ==
              doctest::Approx(std::sqrt(sch.beta_tilde[t])).epsilon(1e-12));
    }
    SUBCASE("deterministic chain with oracle x0 lands on x0 at t=1") {
        Rng rng(9);
        Tensor x0({1, 1, 1}), xt({1, 1, 1});
        x0[0] = 0.42;
        xt[0] = rng.gauss();
        for (int t = 50; t >= 1; --t) xt = reverse_step(xt, x0, t, sch);
        CHECK(xt[0] == x0[0]);
    }
}

TEST_CASE("training loss") {
    const int64_t J = 2, N = 8, n = 3;
    Tensor pred({J, 3, N}), target({J, 3, N});
    std::vector<bool> mask(static_cast<size_t>(N), true);

    SUBCASE("zero for perfect prediction") {
        CHECK(training_loss(pred, target, mask, n) == 0.0);
    }
    SUBCASE("constant offset gives |delta|") {
        for (int64_t i = 0; i < pred.size(); ++i) pred[i] = target[i] + 0.37;
        CHECK(training_loss(pred, target, mask, n) == doctest::Approx(0.37).epsilon(1e-12));
    }
    SUBCASE("masked frames are excluded, matching a loop oracle") {
        Rng rng(5);
        for (int64_t i = 0; i < pred.size(); ++i) {
            pred[i] = rng.gauss();
            target[i] = rng.gauss();
        }
        for (int64_t f = n; f < N; f += 2) mask[static_cast<size_t>(f)] = false;
        double sum = 0;
        int64_t cnt = 0;
        for (int64_t j = 0; j < J; ++j)
            for (int64_t d = 0; d < 3; ++d)
                for (int64_t f = n; f < N; ++f)
                    if (mask[static_cast<size_t>(f)]) {
                        sum += std::abs(pred.at3(j, d, f) - target.at3(j, d, f));
                        ++cnt;
                    }
        CHECK(training_loss(pred, target, mask, n) ==
              doctest::Approx(sum / static_cast<double>(cnt)).epsilon(1e-12));

        // Invariance to values on masked frames.
        Tensor pred2 = pred;
        for (int64_t j = 0; j < J; ++j)
            for (int64_t d = 0; d < 3; ++d)
                for (int64_t f = 0; f < N; ++f)
                    if (f < n || !mask[static_cast<size_t>(f)]) pred2.at3(j, d, f) = 123.0;
        CHECK(training_loss(pred2, target, mask, n) ==
              training_loss(pred, target, mask, n));
    }
    SUBCASE("fully masked output is an error") {
        std::vector<bool> none(static_cast<size_t>(N), false);
        for (int64_t f = 0; f < n; ++f) none[static_cast<size_t>(f)] = true;
        CHECK_THROWS_AS(training_loss(pred, target, none, n), std::invalid_argument);
    }
}
