#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "hyfluid/reference.h"
#include "hyfluid/vortex.h"

using namespace hyfluid;

namespace {

struct ConstVelocity : VectorField4 {
    Vec3 u;
    explicit ConstVelocity(const Vec3& v) : u(v) {}
    Vec3 velocity(const Vec3&, double) const override { return u; }
};

// Rigid rotation about the vertical axis through (0.5, 0.5): curl = (0,0,2).
struct RigidRotation : VectorField4 {
    Vec3 velocity(const Vec3& x, double) const override {
        return {-(x.y - 0.5), x.x - 0.5, 0.0};
    }
};

// Curl concentrated in a Gaussian bump around `center`.
struct LocalSwirl : VectorField4 {
    Vec3 center{0.3, 0.6, 0.4};
    Vec3 velocity(const Vec3& x, double) const override {
        const Vec3 d = x - center;
        const double g = std::exp(-dot(d, d) / (2 * 0.07 * 0.07));
        return {-d.y * g, d.x * g, 0.0};
    }
};

VortexParticleSet one_particle(int num_frames, const Vec3& x, const Vec3& w, double intensity,
                               double radius) {
    VortexParticleSet s;
    s.num_frames = num_frames;
    s.kernel_radius = radius;
    s.intensity = {intensity};
    s.seed_frame = {0};
    s.position.assign(num_frames, x);
    s.vorticity.assign(num_frames, w);
    return s;
}

}  // namespace

TEST_SUITE("vortex") {

TEST_CASE("kernel peak value and decay") {
    const double r = 0.05;
    const double peak = 1.0 / (r * r * r * std::pow(2.0 * M_PI, 1.5));
    CHECK(vortex_kernel({0, 0, 0}, r) == doctest::Approx(peak).epsilon(1e-12));
    CHECK(vortex_kernel({r, 0, 0}, r) == doctest::Approx(peak * std::exp(-0.5)).epsilon(1e-12));
    CHECK(vortex_kernel({10 * r, 0, 0}, r) < peak * 1e-20);
}

TEST_CASE("hand-computed induced velocity") {
    const double r = 0.1, I = 1.5;
    VortexParticleSet s = one_particle(2, {0.3, 0.4, 0.5}, {0.0, 0.0, 2.0}, I, r);
    const Vec3 x{0.4, 0.4, 0.5};  // +x offset d = 0.1
    const Vec3 u = s.induced_velocity(x, 0.5);
    // N = (-1,0,0), N x (w K) = (0, 2K, 0), K written out long-hand:
    const double K = std::exp(-0.01 / (2 * r * r)) / (r * r * r * std::pow(2.0 * M_PI, 1.5));
    CHECK(u.x == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(u.y == doctest::Approx(I * 2.0 * K).epsilon(1e-9));
    CHECK(u.z == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("matches the serial reference on a random set") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    VortexParticleSet s;
    s.num_frames = 4;
    s.kernel_radius = 0.15;
    for (int p = 0; p < 8; ++p) {
        s.intensity.push_back(u01(rng) * 2 - 1);
        s.seed_frame.push_back(0);
        for (int f = 0; f < 4; ++f) {
            s.position.push_back({u01(rng), u01(rng), u01(rng)});
            s.vorticity.push_back({u01(rng) - 0.5, u01(rng) - 0.5, u01(rng) - 0.5});
        }
    }
    for (int i = 0; i < 20; ++i) {
        const Vec3 x{u01(rng), u01(rng), u01(rng)};
        const double t = u01(rng);
        const Vec3 a = s.induced_velocity(x, t);
        const Vec3 b = ref::induced_velocity(s, x, t);
        for (int c = 0; c < 3; ++c) CHECK(a[c] == doctest::Approx(b[c]).epsilon(1e-12));
    }
}

TEST_CASE("induced velocity is linear in the intensities") {
    VortexParticleSet s = one_particle(2, {0.5, 0.5, 0.5}, {1.0, 0.5, -0.3}, 0.7, 0.2);
    s.intensity.push_back(-1.2);
    s.seed_frame.push_back(0);
    s.position.insert(s.position.end(), 2, Vec3{0.6, 0.4, 0.5});
    s.vorticity.insert(s.vorticity.end(), 2, Vec3{0.0, 1.0, 0.0});
    const Vec3 x{0.55, 0.52, 0.48};
    const Vec3 u = s.induced_velocity(x, 0.5);
    Vec3 sum{0, 0, 0};
    for (int p = 0; p < s.size(); ++p) sum += s.intensity[p] * s.intensity_basis(x, 0.5, p);
    for (int c = 0; c < 3; ++c) CHECK(u[c] == doctest::Approx(sum[c]).epsilon(1e-14));
}

TEST_CASE("basis vanishes at the particle center") {
    VortexParticleSet s = one_particle(2, {0.5, 0.5, 0.5}, {0, 0, 1}, 1.0, 0.1);
    const Vec3 b = s.intensity_basis({0.5, 0.5, 0.5}, 0.0, 0);
    CHECK(b.x == 0.0);
    CHECK(b.y == 0.0);
    CHECK(b.z == 0.0);
}

TEST_CASE("scaling intensities scales the induced field") {
    VortexParticleSet s = one_particle(3, {0.4, 0.5, 0.6}, {0.2, -1.0, 0.4}, 0.9, 0.12);
    const Vec3 x{0.5, 0.45, 0.6};
    const Vec3 before = s.induced_velocity(x, 0.5);
    s.scale_intensities(4.0);
    const Vec3 after = s.induced_velocity(x, 0.5);
    for (int c = 0; c < 3; ++c) CHECK(after[c] == doctest::Approx(4.0 * before[c]).epsilon(1e-12));
    CHECK_THROWS(s.scale_intensities(std::nan("")));
}

TEST_CASE("curl and jacobian stencils recover analytic values") {
    RigidRotation rot;
    const Vec3 w = curl_of(rot, {0.62, 0.41, 0.5}, 0.0, 1e-3);
    CHECK(w.x == doctest::Approx(0.0).epsilon(1e-8));
    CHECK(w.y == doctest::Approx(0.0).epsilon(1e-8));
    CHECK(w.z == doctest::Approx(2.0).epsilon(1e-8));
    double J[3][3];
    velocity_jacobian(rot, {0.5, 0.5, 0.5}, 0.0, 1e-3, J);
    CHECK(J[0][1] == doctest::Approx(-1.0).epsilon(1e-8));
    CHECK(J[1][0] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(J[2][2] == doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("seeding picks high-curl locations and keeps particles separated") {
    LocalSwirl swirl;
    VortexConfig cfg;
    cfg.num_particles = 12;
    cfg.kernel_radius = 0.06;
    std::mt19937_64 rng(7);
    VortexParticleSet s = seed_particles(swirl, nullptr, cfg, 5, rng);
    REQUIRE(s.size() > 0);
    CHECK(s.size() <= 12);
    for (int p = 0; p < s.size(); ++p) {
        const Vec3 x = s.position[(std::size_t)p * 5 + s.seed_frame[p]];
        CHECK((x - swirl.center).norm() < 0.3);  // curl lives in the bump
    }
    const double min_sep = cfg.kernel_radius / 2;
    for (int p = 0; p < s.size(); ++p)
        for (int q = p + 1; q < s.size(); ++q) {
            const Vec3 a = s.position[(std::size_t)p * 5 + s.seed_frame[p]];
            const Vec3 b = s.position[(std::size_t)q * 5 + s.seed_frame[q]];
            CHECK((a - b).norm() >= min_sep - 1e-12);
        }
}

TEST_CASE("seeding falls back gracefully when the flow is curl free") {
    ConstVelocity still({0, 0, 0});
    VortexConfig cfg;
    cfg.num_particles = 4;
    std::mt19937_64 rng(11);
    VortexParticleSet s = seed_particles(still, nullptr, cfg, 3, rng);
    CHECK(s.size() > 0);  // degenerate input still yields particles
}

TEST_CASE("trajectories under uniform translation are straight lines") {
    ConstVelocity flow({0.2, 0.1, -0.05});
    const int F = 6;
    VortexParticleSet s = one_particle(F, {0.3, 0.4, 0.6}, {0, 0, 1}, 1.0, 0.1);
    VortexConfig cfg;
    precompute_trajectories(s, flow, cfg);
    const double dt = 1.0 / (F - 1);
    for (int f = 0; f < F; ++f) {
        const Vec3 want = Vec3{0.3, 0.4, 0.6} + flow.u * (dt * f);
        const Vec3 got = s.position[(std::size_t)f];
        for (int c = 0; c < 3; ++c) CHECK(got[c] == doctest::Approx(want[c]).epsilon(1e-12));
    }
    CHECK(!s.left_domain);
}

TEST_CASE("rigid rotation radius drift shrinks at second order in dt") {
    RigidRotation rot;
    auto final_radius_error = [&](int F) {
        VortexParticleSet s = one_particle(F, {0.7, 0.5, 0.5}, {0, 0, 2}, 1.0, 0.1);
        s.seed_frame = {0};
        VortexConfig cfg;
        precompute_trajectories(s, rot, cfg);
        const Vec3 x = s.position[(std::size_t)F - 1];
        const double r = std::hypot(x.x - 0.5, x.y - 0.5);
        return std::fabs(r - 0.2);
    };
    const double e1 = final_radius_error(11);   // dt = 0.1
    const double e2 = final_radius_error(21);   // dt = 0.05
    CHECK(e1 > 0.0);
    CHECK(e1 / e2 > 2.5);  // second order: ratio near 4
}

TEST_CASE("stretching preserves vorticity in a planar rotation") {
    RigidRotation rot;
    const int F = 8;
    VortexParticleSet s = one_particle(F, {0.6, 0.5, 0.5}, {0, 0, 2}, 1.0, 0.1);
    VortexConfig cfg;
    precompute_trajectories(s, rot, cfg);
    for (int f = 0; f < F; ++f) {
        const Vec3 w = s.vorticity[(std::size_t)f];
        CHECK(w.z == doctest::Approx(2.0).epsilon(1e-6));
        CHECK(std::fabs(w.x) < 1e-8);
    }
}

TEST_CASE("least-squares intensity fit recovers the true coefficients") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u01(0.2, 0.8);
    VortexParticleSet s;
    s.num_frames = 2;
    s.kernel_radius = 0.2;
    std::vector<double> truth;
    for (int p = 0; p < 5; ++p) {
        truth.push_back(u01(rng) * 2 - 1);
        s.intensity.push_back(truth.back());
        s.seed_frame.push_back(0);
        const Vec3 x{u01(rng), u01(rng), u01(rng)};
        s.position.insert(s.position.end(), 2, x);
        s.vorticity.insert(s.vorticity.end(), 2, Vec3{u01(rng), u01(rng), u01(rng)});
    }
    std::vector<Vec3> probes;
    std::vector<double> times;
    std::vector<Vec3> targets;
    for (int n = 0; n < 60; ++n) {
        probes.push_back({u01(rng), u01(rng), u01(rng)});
        times.push_back(0.5);
        targets.push_back(s.induced_velocity(probes.back(), 0.5));
    }
    std::vector<double> fit = fit_intensities_mse(s, probes, times, targets);
    REQUIRE((int)fit.size() == 5);
    for (int p = 0; p < 5; ++p) CHECK(fit[p] == doctest::Approx(truth[p]).epsilon(1e-6));
}

TEST_CASE("particle file round-trips") {
    namespace fs = std::filesystem;
    VortexParticleSet s = one_particle(3, {0.25, 0.5, 0.75}, {0.5, -0.25, 0.125}, 0.5, 0.0625);
    s.eps_singularity = 1.0 / 1024;
    const std::string p = (fs::temp_directory_path() / "t_vortex.vtx").string();
    s.save(p);
    VortexParticleSet back = VortexParticleSet::load(p);
    CHECK(back.num_frames == 3);
    CHECK(back.kernel_radius == s.kernel_radius);
    CHECK(back.eps_singularity == s.eps_singularity);
    REQUIRE(back.size() == 1);
    CHECK(back.intensity[0] == 0.5);
    for (int f = 0; f < 3; ++f)
        for (int c = 0; c < 3; ++c) {
            CHECK(back.position[f][c] == s.position[f][c]);
            CHECK(back.vorticity[f][c] == s.vorticity[f][c]);
        }
}

}  // TEST_SUITE
