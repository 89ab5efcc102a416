#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sast/normalize.hpp"
#include "sast/rng.hpp"
#include "sast/synth.hpp"
#include "sast/windowing.hpp"

using namespace sast;

namespace {

const SkeletonSpec sk = SkeletonSpec::default_spec();
const int LH = sk.left_hip_index;
const int RH = sk.right_hip_index;

Tensor random_pose_seq(Rng& rng, int64_t N = 4) {
    Tensor x({sk.joint_count, 3, N});
    for (int64_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(-4.0, 4.0);
    return x;
}

}  // namespace

TEST_CASE("fit_norm hand cases") {
    SUBCASE("axis-parallel hips: translation only") {
        Tensor x({sk.joint_count, 3, 1});
        x.at3(LH, 0, 0) = 1.0;
        x.at3(LH, 1, 0) = 1.0;
        x.at3(RH, 0, 0) = 3.0;
        x.at3(RH, 1, 0) = 1.0;
        AffineTransform2D t = fit_norm(x, 1, sk);
        CHECK(t.angle == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(t.dx == doctest::Approx(-2.0).epsilon(1e-12));
        CHECK(t.dy == doctest::Approx(-1.0).epsilon(1e-12));
        Tensor nx = apply_norm(t, x);
        CHECK(nx.at3(LH, 0, 0) == doctest::Approx(-1.0));
        CHECK(nx.at3(LH, 1, 0) == doctest::Approx(0.0));
        CHECK(nx.at3(RH, 0, 0) == doctest::Approx(1.0));
    }
    SUBCASE("vertical hips rotate onto the x-axis") {
        Tensor x({sk.joint_count, 3, 1});
        x.at3(LH, 0, 0) = 0.0;
        x.at3(LH, 1, 0) = 0.0;
        x.at3(RH, 0, 0) = 0.0;
        x.at3(RH, 1, 0) = 2.0;
        Tensor nx = apply_norm(fit_norm(x, 1, sk), x);
        CHECK(nx.at3(LH, 0, 0) == doctest::Approx(-1.0).epsilon(1e-9));
        CHECK(nx.at3(LH, 1, 0) == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(nx.at3(RH, 0, 0) == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(nx.at3(RH, 1, 0) == doctest::Approx(0.0).epsilon(1e-9));
    }
    SUBCASE("already normalized sequence gives the identity") {
        Tensor x({sk.joint_count, 3, 1});
        x.at3(LH, 0, 0) = -0.12;
        x.at3(RH, 0, 0) = 0.12;
        AffineTransform2D t = fit_norm(x, 1, sk);
        CHECK(t.is_identity(1e-12));
    }
    SUBCASE("NaN hips are an error") {
        Tensor x({sk.joint_count, 3, 1});
        x.at3(LH, 0, 0) = std::nan("");
        CHECK_THROWS_AS(fit_norm(x, 1, sk), std::invalid_argument);
    }
    SUBCASE("coincident hips: rotation zero, translation only") {
        Tensor x({sk.joint_count, 3, 1});
        x.at3(LH, 0, 0) = x.at3(RH, 0, 0) = 2.0;
        x.at3(LH, 1, 0) = x.at3(RH, 1, 0) = 3.0;
        AffineTransform2D t = fit_norm(x, 1, sk);
        CHECK(t.angle == 0.0);
        CHECK(t.dx == doctest::Approx(-2.0));
        CHECK(t.dy == doctest::Approx(-3.0));
    }
}

TEST_CASE("fit_norm postconditions on 1000 random poses") {
    Rng rng(21);
    for (int rep = 0; rep < 1000; ++rep) {
        Tensor x = random_pose_seq(rng, 2);
        const int64_t n = 2;
        Tensor nx = apply_norm(fit_norm(x, n, sk), x);
        double lx = nx.at3(LH, 0, n - 1), ly = nx.at3(LH, 1, n - 1);
        double rx = nx.at3(RH, 0, n - 1), ry = nx.at3(RH, 1, n - 1);
        CHECK(std::abs(0.5 * (lx + rx)) < 1e-6);       // midpoint at origin
        CHECK(std::abs(0.5 * (ly + ry)) < 1e-6);
        CHECK(std::abs(ly - ry) < 1e-6);               // hips level in y
        CHECK(lx <= rx);                               // left hip at -x
    }
}

TEST_CASE("norm is rigid: distances and z preserved, round-trip identity") {
    Rng rng(22);
    for (int rep = 0; rep < 50; ++rep) {
        Tensor x = random_pose_seq(rng);
        AffineTransform2D t = fit_norm(x, 1, sk);
        Tensor nx = apply_norm(t, x);

        // z bit-identical
        for (int64_t j = 0; j < sk.joint_count; ++j)
            for (int64_t f = 0; f < x.dim(2); ++f) CHECK(nx.at3(j, 2, f) == x.at3(j, 2, f));

        // pairwise planar distances preserved
        for (int64_t j = 1; j < 5; ++j) {
            double dx0 = x.at3(j, 0, 0) - x.at3(0, 0, 0);
            double dy0 = x.at3(j, 1, 0) - x.at3(0, 1, 0);
            double dx1 = nx.at3(j, 0, 0) - nx.at3(0, 0, 0);
            double dy1 = nx.at3(j, 1, 0) - nx.at3(0, 1, 0);
            CHECK(std::hypot(dx1, dy1) == doctest::Approx(std::hypot(dx0, dy0)).epsilon(1e-9));
        }

        // round trip
        Tensor back = invert_norm(t, nx);
        for (int64_t i = 0; i < x.size(); ++i)
            CHECK(back[i] == doctest::Approx(x[i]).epsilon(1e-9));
    }
}

TEST_CASE("rigid pre-transform invariance of the normalized output") {
    Rng rng(23);
    Tensor x = random_pose_seq(rng);
    Tensor nx = apply_norm(fit_norm(x, 1, sk), x);

    AffineTransform2D shift{0.7, 3.0, -2.0};
    Tensor moved = apply_norm(shift, x);
    Tensor nmoved = apply_norm(fit_norm(moved, 1, sk), moved);
    for (int64_t i = 0; i < x.size(); ++i)
        CHECK(nmoved[i] == doctest::Approx(nx[i]).epsilon(1e-9));
}

TEST_CASE("min-max scaler") {
    SUBCASE("endpoint and midpoint mapping") {
        MinMaxScaler sc;
        sc.mins.assign(static_cast<size_t>(sk.joint_count * 3), -1.0);
        sc.maxs.assign(static_cast<size_t>(sk.joint_count * 3), 1.0);
        CHECK(sc.scale_value(1.0, 0) == doctest::Approx(3.0));
        CHECK(sc.scale_value(-1.0, 0) == doctest::Approx(-3.0));
        CHECK(sc.scale_value(0.0, 0) == doctest::Approx(0.0));
    }
    SUBCASE("constant channel maps to zero after widening") {
        Tensor x({sk.joint_count, 3, 4});
        x.fill(0.25);
        MinMaxScaler sc = fit_minmax({x});
        Tensor s = sc.scale(x);
        for (int64_t i = 0; i < s.size(); ++i) CHECK(s[i] == doctest::Approx(0.0).epsilon(1e-9));
    }
    SUBCASE("training data maps into [-3,3] with both endpoints reached") {
        Rng rng(24);
        std::vector<Tensor> train;
        for (int i = 0; i < 5; ++i) train.push_back(random_pose_seq(rng, 6));
        MinMaxScaler sc = fit_minmax(train);
        const int64_t C = sk.joint_count * 3;
        std::vector<double> cmin(static_cast<size_t>(C), 1e300),
            cmax(static_cast<size_t>(C), -1e300);
        for (const auto& x : train) {
            Tensor s = sc.scale(x);
            for (int64_t j = 0; j < sk.joint_count; ++j)
                for (int64_t d = 0; d < 3; ++d)
                    for (int64_t f = 0; f < s.dim(2); ++f) {
                        size_t ch = static_cast<size_t>(j * 3 + d);
                        cmin[ch] = std::min(cmin[ch], s.at3(j, d, f));
                        cmax[ch] = std::max(cmax[ch], s.at3(j, d, f));
                    }
        }
        for (int64_t ch = 0; ch < C; ++ch) {
            CHECK(cmin[static_cast<size_t>(ch)] == doctest::Approx(-3.0).epsilon(1e-9));
            CHECK(cmax[static_cast<size_t>(ch)] == doctest::Approx(3.0).epsilon(1e-9));
        }
    }
    SUBCASE("unscale inverts scale") {
        Rng rng(25);
        std::vector<Tensor> train = {random_pose_seq(rng, 6)};
        MinMaxScaler sc = fit_minmax(train);
        Tensor x = random_pose_seq(rng, 6);
        Tensor back = sc.unscale(sc.scale(x));
        for (int64_t i = 0; i < x.size(); ++i)
            CHECK(back[i] == doctest::Approx(x[i]).epsilon(1e-9));
    }
    SUBCASE("empty training set is an error") {
        CHECK_THROWS_AS(fit_minmax({}), std::invalid_argument);
    }
}

TEST_CASE("build_datapoint") {
    SynthConfig cfg;
    cfg.persons = 3;
    cfg.objects = 3;
    cfg.duration_s = 4.0;
    SceneRecording rec = synth_generate(cfg, 31);
    auto windows = make_windows(rec, 8, 40, 40);
    REQUIRE_FALSE(windows.empty());
    const auto& w = windows[0];
    REQUIRE(w.person_count() == 3);
    BasisPointSet basis = generate_basis(1, 32, 5.0);

    SUBCASE("shapes and frame-n normalization") {
        Datapoint dp = build_datapoint(w, 1, basis);
        CHECK(dp.others.dim(0) == 2);
        CHECK(dp.scene.objects.size() == w.scene_state.size());
        double mx = 0.5 * (dp.x.at3(LH, 0, w.n - 1) + dp.x.at3(RH, 0, w.n - 1));
        double my = 0.5 * (dp.x.at3(LH, 1, w.n - 1) + dp.x.at3(RH, 1, w.n - 1));
        CHECK(std::abs(mx) < 1e-6);
        CHECK(std::abs(my) < 1e-6);
        CHECK(dp.mask == w.presence_mask[1]);
    }
    SUBCASE("invalid person index") {
        CHECK_THROWS_AS(build_datapoint(w, 3, basis), std::invalid_argument);
    }
    SUBCASE("P=1 gives an empty others block") {
        SynthConfig c1 = cfg;
        c1.persons = 1;
        SceneRecording r1 = synth_generate(c1, 31);
        auto w1 = make_windows(r1, 8, 40, 40);
        REQUIRE_FALSE(w1.empty());
        Datapoint dp = build_datapoint(w1[0], 0, basis);
        CHECK(dp.others.dim(0) == 0);
        CHECK(dp.others.dim(1) == sk.joint_count);
    }
}
