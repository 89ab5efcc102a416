#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "sast/checkpoint.hpp"
#include "sast/rng.hpp"
#include "sast/training.hpp"

using namespace sast;
namespace fs = std::filesystem;

namespace {

DenoiserConfig tiny_cfg() {
    DenoiserConfig c = DenoiserConfig::desk();
    c.J = 4;
    c.N = 24;
    c.n_input = 4;
    c.d_obj = 16 + kObjectTypeCount;
    return c;
}

std::vector<TrainExample> tiny_dataset(const DenoiserConfig& cfg, int64_t count,
                                       uint64_t seed) {
    Rng rng(seed);
    std::vector<TrainExample> out;
    for (int64_t e = 0; e < count; ++e) {
        TrainExample ex;
        ex.x_scaled = Tensor({cfg.J, 3, cfg.N});
        for (int64_t i = 0; i < ex.x_scaled.size(); ++i)
            ex.x_scaled[i] = rng.uniform(-3.0, 3.0);
        ex.others_scaled = Tensor({0, cfg.J, 3, cfg.N});
        ex.mask.assign(static_cast<size_t>(cfg.N), true);
        ex.n = cfg.n_input;
        out.push_back(std::move(ex));
    }
    return out;
}

TrainConfig tiny_train_cfg(int64_t steps) {
    TrainConfig tc;
    tc.T = 4;
    tc.total_steps = steps;
    tc.batch_size = 2;
    tc.lr_start = 1e-4;
    tc.lr_end = 1e-3;
    tc.seed = 5;
    tc.log_every = 1;
    return tc;
}

fs::path temp_dir(const std::string& tag) {
    fs::path p = fs::temp_directory_path() / ("sast_train_test_" + tag);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("train config") {
    SUBCASE("validation") {
        TrainConfig c;
        c.total_steps = 0;
        CHECK_THROWS_AS(c.validate(), std::invalid_argument);
        c = TrainConfig{};
        c.lr_start = 1.0;
        c.lr_end = 0.1;
        CHECK_THROWS_AS(c.validate(), std::invalid_argument);
        c = TrainConfig{};
        c.undersample_fraction = 1.5;
        CHECK_THROWS_AS(c.validate(), std::invalid_argument);
        CHECK_NOTHROW(TrainConfig{}.validate());
    }
    SUBCASE("linear learning-rate ramp") {
        TrainConfig c;
        c.lr_start = 2e-7;
        c.lr_end = 5e-5;
        c.total_steps = 1001;
        CHECK(c.lr_at(0) == doctest::Approx(2e-7).epsilon(1e-12));
        CHECK(c.lr_at(1000) == doctest::Approx(5e-5).epsilon(1e-12));
        CHECK(c.lr_at(500) == doctest::Approx(0.5 * (2e-7 + 5e-5)).epsilon(1e-12));
        for (int64_t s = 1; s <= 1000; ++s) CHECK(c.lr_at(s) >= c.lr_at(s - 1));
    }
}

TEST_CASE("loss weights") {
    const int64_t J = 2, N = 6, n = 2;
    SUBCASE("uniform over unmasked output entries, zero elsewhere") {
        std::vector<bool> mask(static_cast<size_t>(N), true);
        mask[4] = false;
        Tensor w = loss_weights(J, N, mask, n);
        const double inv = 1.0 / static_cast<double>(J * 3 * 3);  // frames 2,3,5
        double total = 0;
        for (int64_t c = 0; c < J * 3; ++c)
            for (int64_t f = 0; f < N; ++f) {
                bool active = f >= n && mask[static_cast<size_t>(f)];
                CHECK(w.at2(c, f) == (active ? inv : 0.0));
                total += w.at2(c, f);
            }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("all output frames masked is an error") {
        std::vector<bool> mask(static_cast<size_t>(N), false);
        mask[0] = mask[1] = true;
        CHECK_THROWS_AS(loss_weights(J, N, mask, n), std::invalid_argument);
    }
}

TEST_CASE("AdamW single step matches the closed form") {
    ParamStore params;
    params["w"] = Tensor({2});
    params["w"][0] = 1.0;
    params["w"][1] = -2.0;
    std::map<std::string, Tensor> grads;
    grads["w"] = Tensor({2});
    grads["w"][0] = 0.5;
    grads["w"][1] = -0.25;

    const double lr = 0.01, wd = 0.1, eps = 1e-8;
    AdamW opt;
    opt.step(params, grads, lr, wd);

    for (int64_t i = 0; i < 2; ++i) {
        double p0 = (i == 0) ? 1.0 : -2.0;
        double g = grads["w"][i];
        double m = 0.1 * g, v = 0.001 * g * g;
        double mhat = m / 0.1, vhat = v / 0.001;  // bias correction at t=1
        double expect = p0 - lr * (mhat / (std::sqrt(vhat) + eps) + wd * p0);
        CHECK(params["w"][i] == doctest::Approx(expect).epsilon(1e-12));
    }
    CHECK(opt.t() == 1);

    SUBCASE("parameters without gradients are untouched") {
        params["frozen"] = Tensor({1}, 3.0);
        opt.step(params, grads, lr, wd);
        CHECK(params["frozen"][0] == 3.0);
    }
}

TEST_CASE("training is deterministic and reduces the loss") {
    DenoiserConfig cfg = tiny_cfg();
    DiffusionSchedule sch = cosine_schedule(4);
    auto dataset = tiny_dataset(cfg, 2, 77);
    TrainConfig tc = tiny_train_cfg(25);

    DenoiserModel a = init_denoiser(cfg, 9);
    TrainResult ra = train(a, dataset, tc, sch);
    DenoiserModel b = init_denoiser(cfg, 9);
    TrainResult rb = train(b, dataset, tc, sch);

    SUBCASE("bit-identical across runs") {
        for (const auto& [name, t] : a.params) {
            const Tensor& u = b.params.at(name);
            for (int64_t i = 0; i < t.size(); ++i) CHECK(t[i] == u[i]);
        }
        REQUIRE(ra.history.size() == rb.history.size());
        for (size_t i = 0; i < ra.history.size(); ++i)
            CHECK(ra.history[i].loss == rb.history[i].loss);
    }
    SUBCASE("loss history covers every logged step and trends down") {
        REQUIRE(ra.history.size() == 25);  // log_every = 1
        CHECK(ra.history.front().step == 0);
        CHECK(ra.history.back().step == 24);
        double first = ra.history.front().loss;
        double last = ra.history.back().loss;
        CHECK(last < first);
        for (const auto& r : ra.history) CHECK(std::isfinite(r.loss));
    }
    SUBCASE("empty dataset is an error") {
        DenoiserModel m = init_denoiser(cfg, 9);
        CHECK_THROWS_AS(train(m, {}, tc, sch), std::invalid_argument);
    }
}

TEST_CASE("NaN loss aborts training") {
    DenoiserConfig cfg = tiny_cfg();
    DiffusionSchedule sch = cosine_schedule(4);
    auto dataset = tiny_dataset(cfg, 1, 78);
    TrainConfig tc = tiny_train_cfg(3);
    DenoiserModel model = init_denoiser(cfg, 9);
    model.params["ex.stem.W"][0] = std::nan("");
    CHECK_THROWS_AS(train(model, dataset, tc, sch), std::runtime_error);
}

TEST_CASE("loss CSV") {
    fs::path dir = temp_dir("csv");
    fs::create_directories(dir);
    write_loss_csv(dir / "loss.csv", {{0, 0.5, 1e-4}, {100, 0.25, 2e-4}});
    std::ifstream f(dir / "loss.csv");
    std::string line;
    std::getline(f, line);
    CHECK(line == "step,loss,lr");
    std::getline(f, line);
    CHECK(line == "0,0.5,0.0001");
    std::getline(f, line);
    CHECK(line == "100,0.25,0.0002");
    fs::remove_all(dir);
}

TEST_CASE("checkpoint round trip") {
    DenoiserConfig cfg = tiny_cfg();
    Checkpoint ckpt;
    ckpt.model = init_denoiser(cfg, 21, false);
    ckpt.basis = generate_basis(4, 16, 5.0);
    ckpt.train_cfg = tiny_train_cfg(10);
    ckpt.trained_steps = 7;
    ckpt.scaler.mins.assign(static_cast<size_t>(cfg.J * 3), -2.0);
    ckpt.scaler.maxs.assign(static_cast<size_t>(cfg.J * 3), 2.0);

    fs::path dir = temp_dir("roundtrip");
    save_checkpoint(ckpt, dir);
    Checkpoint back = load_checkpoint(dir);

    SUBCASE("parameters survive at float32 precision") {
        REQUIRE(back.model.params.size() == ckpt.model.params.size());
        for (const auto& [name, t] : ckpt.model.params) {
            const Tensor& u = back.model.params.at(name);
            REQUIRE(u.shape() == t.shape());
            for (int64_t i = 0; i < t.size(); ++i)
                CHECK(u[i] == static_cast<double>(static_cast<float>(t[i])));
        }
    }
    SUBCASE("config, scaler, basis and schedule survive exactly") {
        CHECK(back.model.cfg == cfg);
        CHECK(back.trained_steps == 7);
        CHECK(back.scaler.mins == ckpt.scaler.mins);
        CHECK(back.scaler.maxs == ckpt.scaler.maxs);
        CHECK(back.basis.points == ckpt.basis.points);  // regenerated from seed
        CHECK(back.train_cfg.T == ckpt.train_cfg.T);
        CHECK(back.train_cfg.total_steps == ckpt.train_cfg.total_steps);
    }
    SUBCASE("content hash tracks the parameters") {
        uint64_t h1 = checkpoint_hash(dir);
        CHECK(h1 == checkpoint_hash(dir));
        Checkpoint other = ckpt;
        other.model.params["ex.stem.W"][0] += 1.0;
        fs::path dir2 = temp_dir("roundtrip2");
        save_checkpoint(other, dir2);
        CHECK(checkpoint_hash(dir2) != h1);
        fs::remove_all(dir2);
    }
    SUBCASE("missing checkpoint and tampered schedule fail loudly") {
        CHECK_THROWS_AS(load_checkpoint(temp_dir("missing")), CheckpointError);
        // Flip the declared schedule hash.
        std::ifstream mf(dir / "manifest.json");
        nlohmann::json manifest;
        mf >> manifest;
        mf.close();
        manifest["schedule_hash"] = manifest["schedule_hash"].get<uint64_t>() ^ 1u;
        std::ofstream out(dir / "manifest.json", std::ios::trunc);
        out << manifest.dump(2) << "\n";
        out.close();
        CHECK_THROWS_AS(load_checkpoint(dir), CheckpointError);
    }
    fs::remove_all(dir);
}

TEST_CASE("resume from a checkpoint reproduces the identical continuation") {
    DenoiserConfig cfg = tiny_cfg();
    DiffusionSchedule sch = cosine_schedule(4);
    auto dataset = tiny_dataset(cfg, 2, 79);
    TrainConfig tc = tiny_train_cfg(6);

    // Phase one: three steps, then checkpoint with optimizer state.
    DenoiserModel model = init_denoiser(cfg, 9);
    AdamW opt;
    TrainConfig phase1 = tc;
    phase1.total_steps = 3;
    train(model, dataset, phase1, sch, &opt);

    Checkpoint ckpt;
    ckpt.model = model;
    ckpt.basis = generate_basis(4, 16, 5.0);
    ckpt.train_cfg = tc;
    ckpt.trained_steps = 3;
    ckpt.scaler.mins.assign(static_cast<size_t>(cfg.J * 3), -3.0);
    ckpt.scaler.maxs.assign(static_cast<size_t>(cfg.J * 3), 3.0);
    ckpt.opt_m = opt.m();
    ckpt.opt_v = opt.v();
    ckpt.opt_steps = opt.t();
    fs::path dir = temp_dir("resume");
    save_checkpoint(ckpt, dir);

    auto resume_once = [&]() {
        Checkpoint loaded = load_checkpoint(dir);
        REQUIRE(loaded.opt_steps == 3);
        AdamW ropt;
        ropt.m() = loaded.opt_m;
        ropt.v() = loaded.opt_v;
        ropt.t() = loaded.opt_steps;
        train(loaded.model, dataset, tc, sch, &ropt, loaded.trained_steps);
        return loaded.model;
    };
    DenoiserModel r1 = resume_once();
    DenoiserModel r2 = resume_once();
    for (const auto& [name, t] : r1.params) {
        const Tensor& u = r2.params.at(name);
        for (int64_t i = 0; i < t.size(); ++i) CHECK(t[i] == u[i]);
    }
    // The continuation must actually move the weights.
    double moved = 0;
    Checkpoint loaded = load_checkpoint(dir);
    for (const auto& [name, t] : r1.params)
        for (int64_t i = 0; i < t.size(); ++i)
            moved += std::abs(t[i] - loaded.model.params.at(name)[i]);
    CHECK(moved > 0.0);
    fs::remove_all(dir);
}
