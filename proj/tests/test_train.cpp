#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "hyfluid/config.h"
#include "hyfluid/train.h"

using namespace hyfluid;
namespace fs = std::filesystem;

namespace {

GridConfig tiny(int out_dim) {
    GridConfig c = out_dim == 1 ? GridConfig::density_default() : GridConfig::velocity_default();
    c.base_res = 4;
    c.finest_res = 8;
    c.time_res_cap = 4;
    c.hidden_width = 16;
    return c;
}

// One tiny on-disk dataset, generated once and shared across the suite.
const LoadedDataset& tiny_dataset() {
    static LoadedDataset ds = [] {
        GenConfig g;
        g.sim.res = 8;
        g.sim.num_frames = 3;
        g.sim.dt = 0.5;
        g.extra_frames = 1;
        g.image_size = 12;
        g.num_cameras = 3;
        g.held_out = 1;
        g.samples_per_ray = 16;
        const std::string dir = (fs::temp_directory_path() / "t_train_data").string();
        fs::create_directories(dir);
        generate_dataset(g, dir);
        return load_dataset(dir + "/manifest.json");
    }();
    return ds;
}

TrainConfig tiny_train() {
    TrainConfig cfg;
    cfg.stage1_iters = cfg.stage2_iters = cfg.stage3_iters = 0;
    cfg.ray_batch = 24;
    cfg.point_batch = 32;
    cfg.samples_per_ray = 12;
    cfg.proj_res = 6;
    cfg.vortex.num_particles = 4;
    cfg.checkpoint_interval = 0;
    cfg.log_interval = 1;
    return cfg;
}

// Textbook dense Adam, updating every parameter every step.
void dense_adam(std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                std::vector<double>& v, long long step, double lr, double b1, double b2,
                double eps) {
    for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = b1 * m[i] + (1 - b1) * g[i];
        v[i] = b2 * v[i] + (1 - b2) * g[i] * g[i];
        const double mh = m[i] / (1 - std::pow(b1, (double)step));
        const double vh = v[i] / (1 - std::pow(b2, (double)step));
        p[i] -= lr * mh / (std::sqrt(vh) + eps);
    }
}

}  // namespace

TEST_SUITE("train") {

TEST_CASE("config validation") {
    TrainConfig cfg = tiny_train();
    CHECK_NOTHROW(cfg.validate());  // zero iteration counts are allowed
    cfg.stage1_iters = -1;
    CHECK_THROWS(cfg.validate());
    cfg = tiny_train();
    cfg.ray_batch = 0;
    CHECK_THROWS(cfg.validate());
    cfg = tiny_train();
    cfg.lr = 0.0;
    CHECK_THROWS(cfg.validate());
}

TEST_CASE("adam leaves untouched parameters bitwise unchanged") {
    std::vector<double> p = {1.0, 2.0, 3.0};
    GradBuffer g;
    g.resize(3);
    g.add(1, 0.5);
    AdamState st;
    st.resize(3);
    adam_step(p, g, st, 0.01, 0.9, 0.99, 1e-15);
    CHECK(p[0] == 1.0);
    CHECK(p[2] == 3.0);
    CHECK(p[1] != 2.0);
}

TEST_CASE("first step moves by about -lr * sign(g)") {
    std::vector<double> p = {0.0, 0.0};
    GradBuffer g;
    g.resize(2);
    g.add(0, 3.7);
    g.add(1, -0.002);
    AdamState st;
    st.resize(2);
    adam_step(p, g, st, 0.01, 0.9, 0.99, 1e-15);
    CHECK(p[0] == doctest::Approx(-0.01).epsilon(1e-9));
    CHECK(p[1] == doctest::Approx(0.01).epsilon(1e-9));
}

TEST_CASE("adam minimizes a quadratic") {
    std::vector<double> p = {1.0, -0.8};
    AdamState st;
    st.resize(2);
    for (int it = 0; it < 300; ++it) {
        GradBuffer g;
        g.resize(2);
        g.add(0, 2 * p[0]);
        g.add(1, 2 * p[1]);
        adam_step(p, g, st, 0.01, 0.9, 0.99, 1e-15);
    }
    CHECK(std::fabs(p[0]) < 0.05);
    CHECK(std::fabs(p[1]) < 0.05);
}

TEST_CASE("active-set update is bitwise identical to dense adam") {
    const int n = 20;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> p1(n), p2(n), m(n, 0.0), v(n, 0.0);
    for (int i = 0; i < n; ++i) p1[i] = p2[i] = u(rng);
    AdamState st;
    st.resize(n);
    for (int step = 1; step <= 25; ++step) {
        std::vector<double> dense_g(n, 0.0);
        GradBuffer g;
        g.resize(n);
        for (int i = 0; i < n; ++i) {
            if (u(rng) > 0.0) continue;  // sparse touch pattern
            dense_g[i] = u(rng);
            g.add(i, dense_g[i]);
        }
        adam_step(p1, g, st, 0.01, 0.9, 0.99, 1e-15);
        dense_adam(p2, dense_g, m, v, step, 0.01, 0.9, 0.99, 1e-15);
        for (int i = 0; i < n; ++i) CHECK(p1[i] == p2[i]);
    }
}

TEST_CASE("grad_scale multiplies the gradient") {
    std::vector<double> p1 = {0.5}, p2 = {0.5};
    AdamState s1, s2;
    s1.resize(1);
    s2.resize(1);
    GradBuffer g1, g2;
    g1.resize(1);
    g2.resize(1);
    g1.add(0, 0.25);
    g2.add(0, 0.75);
    adam_step(p1, g1, s1, 0.01, 0.9, 0.99, 1e-15, 3.0);
    adam_step(p2, g2, s2, 0.01, 0.9, 0.99, 1e-15, 1.0);
    CHECK(p1[0] == p2[0]);
}

TEST_CASE("non-finite gradients throw") {
    std::vector<double> p = {1.0};
    GradBuffer g;
    g.resize(1);
    g.add(0, std::nan(""));
    AdamState st;
    st.resize(1);
    CHECK_THROWS(adam_step(p, g, st, 0.01, 0.9, 0.99, 1e-15));
}

TEST_CASE("zero-iteration stages leave every parameter unchanged") {
    const LoadedDataset& ds = tiny_dataset();
    Field4D sigma(tiny(1), 3), vel(tiny(3), 5);
    const std::vector<double> s0 = sigma.params(), v0 = vel.params();
    double rad[3] = {0.5, 0.5, 0.5};
    TrainConfig cfg = tiny_train();
    train_stage1(ds, sigma, rad, cfg);
    train_stage2(ds, sigma, rad, vel, cfg);
    CHECK(sigma.params() == s0);
    CHECK(vel.params() == v0);
    CHECK(rad[0] == 0.5);
}

TEST_CASE("stage 1 reduces the rendering loss") {
    const LoadedDataset& ds = tiny_dataset();
    Field4D sigma(tiny(1), 11);
    double rad[3] = {0.5, 0.5, 0.5};
    TrainConfig cfg = tiny_train();
    cfg.stage1_iters = 60;
    std::vector<LossRow> log;
    train_stage1(ds, sigma, rad, cfg, &log);
    REQUIRE(log.size() >= 2);
    double head = 0.0, tail = 0.0;
    for (int i = 0; i < 5; ++i) {
        head += log[i].render;
        tail += log[log.size() - 1 - i].render;
    }
    CHECK(tail < head);
}

TEST_CASE("stage 2 with physics weights zeroed leaves the velocity untouched") {
    const LoadedDataset& ds = tiny_dataset();
    Field4D sigma(tiny(1), 13), vel(tiny(3), 15);
    const std::vector<double> v0 = vel.params();
    double rad[3] = {0.5, 0.5, 0.5};
    TrainConfig cfg = tiny_train();
    cfg.stage2_iters = 8;
    cfg.weights.density = 0.0;
    cfg.weights.proj = 0.0;
    cfg.weights.laminar = 0.0;
    train_stage2(ds, sigma, rad, vel, cfg);
    CHECK(vel.params() == v0);  // no loss term reaches it
}

TEST_CASE("training is bitwise deterministic in the seed") {
    const LoadedDataset& ds = tiny_dataset();
    TrainConfig cfg = tiny_train();
    cfg.stage1_iters = 12;
    cfg.stage2_iters = 6;
    auto run = [&]() {
        Field4D sigma(tiny(1), 21), vel(tiny(3), 23);
        double rad[3] = {0.5, 0.5, 0.5};
        train_stage1(ds, sigma, rad, cfg);
        train_stage2(ds, sigma, rad, vel, cfg);
        std::vector<double> all = sigma.params();
        all.insert(all.end(), vel.params().begin(), vel.params().end());
        all.insert(all.end(), rad, rad + 3);
        return all;
    };
    CHECK(run() == run());
}

TEST_CASE("stage 3 fits particle intensities without touching the base flow") {
    const LoadedDataset& ds = tiny_dataset();
    Field4D sigma(tiny(1), 31), vel(tiny(3), 33);
    double rad[3] = {0.5, 0.5, 0.5};
    TrainConfig cfg = tiny_train();
    cfg.stage1_iters = 30;
    cfg.stage2_iters = 15;
    cfg.stage3_iters = 10;
    train_stage1(ds, sigma, rad, cfg);
    train_stage2(ds, sigma, rad, vel, cfg);
    const std::vector<double> vel_frozen = vel.params();
    FieldVelocity fv(vel);
    FieldDensity fd(sigma);
    std::mt19937_64 rng(41);
    VortexParticleSet particles =
        seed_particles(fv, &fd, cfg.vortex, ds.manifest.num_frames, rng);
    precompute_trajectories(particles, fv, cfg.vortex);
    train_stage3(ds, sigma, rad, vel, particles, cfg);
    CHECK(vel.params() == vel_frozen);
    bool any_finite = true;
    for (double i : particles.intensity) any_finite = any_finite && std::isfinite(i);
    CHECK(any_finite);
}

TEST_CASE("out_dir receives checkpoints and loss logs") {
    const LoadedDataset& ds = tiny_dataset();
    Field4D sigma(tiny(1), 51);
    double rad[3] = {0.5, 0.5, 0.5};
    TrainConfig cfg = tiny_train();
    cfg.stage1_iters = 4;
    cfg.checkpoint_interval = 2;
    const std::string dir = (fs::temp_directory_path() / "t_train_out").string();
    fs::create_directories(dir);
    cfg.out_dir = dir;
    train_stage1(ds, sigma, rad, cfg);
    CHECK(fs::exists(dir + "/stage1_latest.hyf"));
    CHECK(fs::exists(dir + "/loss_stage1.csv"));
}

TEST_CASE("loss csv header") {
    namespace fss = std::filesystem;
    std::vector<LossRow> rows(1);
    const std::string p = (fss::temp_directory_path() / "t_loss.csv").string();
    write_loss_csv(p, rows);
    std::ifstream is(p);
    std::string line;
    std::getline(is, line);
    CHECK(line == "stage,iteration,render,density,proj,laminar,total,seconds");
}

}  // TEST_SUITE
