#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "hyfluid/field4d.h"
#include "hyfluid/reference.h"
#include "hyfluid/train.h"

using namespace hyfluid;

namespace {

GridConfig tiny_density() {
    GridConfig c = GridConfig::density_default();
    c.base_res = 4;
    c.finest_res = 8;
    c.time_res_cap = 4;
    c.hidden_width = 16;
    return c;
}

void randomize_features(Field4D& f, std::uint64_t seed, double amp = 0.5) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-amp, amp);
    for (std::size_t i = 0; i < f.feature_param_count(); ++i) f.params()[i] = u(rng);
}

}  // namespace

TEST_SUITE("field") {

TEST_CASE("all parameters zero decode to softplus(0) = log 2") {
    Field4D f(tiny_density(), 1);
    std::fill(f.params().begin(), f.params().end(), 0.0);
    double out;
    f.query({0.3, 0.7, 0.2}, 0.5, &out);
    CHECK(out == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("zeroed features decode exactly to the configured output bias") {
    Field4D f(tiny_density(), 7);  // bias -2 pre-head
    zero_features(f);
    double out;
    for (double t : {0.0, 0.33, 1.0}) {
        f.query({0.1, 0.9, 0.5}, t, &out);
        CHECK(out == doctest::Approx(std::log1p(std::exp(-2.0))).epsilon(1e-12));
    }
}

TEST_CASE("query matches the independent interpolation + decode oracle") {
    Field4D f(tiny_density(), 3);
    randomize_features(f, 13);
    double a, b;
    f.query({0.37, 0.41, 0.52}, 0.5, &a);
    ref::field_query(f, {0.37, 0.41, 0.52}, 0.5, &b);
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 50; ++i) {
        const Vec3 x{u(rng), u(rng), u(rng)};
        const double t = u(rng);
        f.query(x, t, &a);
        ref::field_query(f, x, t, &b);
        CHECK(a == doctest::Approx(b).epsilon(1e-12));
    }
}

TEST_CASE("vector field matches the oracle too") {
    GridConfig c = GridConfig::velocity_default();
    c.base_res = 4;
    c.finest_res = 8;
    c.time_res_cap = 4;
    c.hidden_width = 16;
    Field4D f(c, 5);
    randomize_features(f, 17);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double a[3], b[3];
    for (int i = 0; i < 20; ++i) {
        const Vec3 x{u(rng), u(rng), u(rng)};
        const double t = u(rng);
        f.query(x, t, a);
        ref::field_query(f, x, t, b);
        for (int o = 0; o < 3; ++o) CHECK(a[o] == doctest::Approx(b[o]).epsilon(1e-12));
    }
}

TEST_CASE("density is non-negative everywhere") {
    Field4D f(tiny_density(), 21);
    randomize_features(f, 23, 3.0);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-0.5, 1.5);
    double out;
    for (int i = 0; i < 200; ++i) {
        f.query({u(rng), u(rng), u(rng)}, u(rng), &out);
        CHECK(out >= 0.0);
    }
}

TEST_CASE("out-of-domain queries clamp to the boundary") {
    Field4D f(tiny_density(), 2);
    randomize_features(f, 29);
    double inside, outside;
    f.query({0.0, 1.0, 0.5}, 0.0, &inside);
    f.query({-3.0, 7.5, 0.5}, -2.0, &outside);
    CHECK(inside == outside);
    CHECK_THROWS(f.query({std::nan(""), 0.5, 0.5}, 0.5, &inside));
}

TEST_CASE("single-level vertex query touches only that vertex's features") {
    GridConfig c = tiny_density();
    c.base_res = c.finest_res = 4;
    Field4D f(c, 9);
    randomize_features(f, 31);
    // lattice vertex (1,2,3) at time node 1 of a 4^4 level
    const Vec3 x{1.0 / 3, 2.0 / 3, 1.0};
    const double t = 1.0 / 3;
    GradBuffer g;
    g.resize(f.num_params());
    const double d = 1.0;
    f.backprop(x, t, &d, g);
    const std::size_t slot = f.vertex_slot(0, 1, 2, 3, 1);
    const int F = c.features_per_vertex;
    for (std::size_t i : g.touched) {
        if (i >= f.feature_param_count()) continue;  // decoder params
        CHECK(i >= slot * F);
        CHECK(i < (slot + 1) * F);
    }
}

TEST_CASE("backprop matches central finite differences") {
    Field4D f(tiny_density(), 41);
    randomize_features(f, 43);
    const Vec3 x{0.21, 0.68, 0.44};
    const double t = 0.37;
    GradBuffer g;
    g.resize(f.num_params());
    const double dL = 1.7;
    f.backprop(x, t, &dL, g);
    CHECK(g.touched.size() > 0);
    std::mt19937_64 rng(47);
    std::vector<std::size_t> probes(g.touched);
    std::shuffle(probes.begin(), probes.end(), rng);
    probes.resize(std::min<std::size_t>(probes.size(), 50));
    int checked = 0;
    for (std::size_t i : probes) {
        const double analytic = g.get(i);
        if (std::fabs(analytic) < 1e-6) continue;
        const double h = 1e-4;
        const double saved = f.params()[i];
        double lo, hi;
        f.params()[i] = saved + h;
        f.query(x, t, &hi);
        f.params()[i] = saved - h;
        f.query(x, t, &lo);
        f.params()[i] = saved;
        const double fd = dL * (hi - lo) / (2 * h);
        CHECK(analytic == doctest::Approx(fd).epsilon(1e-3));
        ++checked;
    }
    CHECK(checked > 10);
}

TEST_CASE("zero output gradient leaves the buffer untouched") {
    Field4D f(tiny_density(), 51);
    GradBuffer g;
    g.resize(f.num_params());
    const double d = 0.0;
    f.backprop({0.5, 0.5, 0.5}, 0.5, &d, g);
    CHECK(g.touched.empty());
}

TEST_CASE("partials vanish on a constant field") {
    Field4D f(tiny_density(), 61);
    zero_features(f);
    double p[4][3];
    f.query_partials({0.4, 0.6, 0.3}, 0.5, f.default_spatial_step(), f.default_time_step(), p);
    for (int a = 0; a < 4; ++a) CHECK(std::fabs(p[a][0]) < 1e-10);
}

TEST_CASE("stencil partials are Richardson consistent") {
    Field4D f(tiny_density(), 71);
    randomize_features(f, 73);
    const Vec3 x{0.52, 0.47, 0.55};
    const double t = 0.5, h = 0.02;
    double p1[4][3], p2[4][3], p4[4][3];
    f.query_partials(x, t, h, h, p1);
    f.query_partials(x, t, h / 2, h / 2, p2);
    f.query_partials(x, t, h / 4, h / 4, p4);
    for (int a = 0; a < 4; ++a) {
        const double d12 = std::fabs(p1[a][0] - p2[a][0]);
        const double d24 = std::fabs(p2[a][0] - p4[a][0]);
        if (d24 < 1e-10) continue;  // effectively converged
        CHECK(d12 / d24 > 2.0);  // second-order stencil: ratio near 4
    }
}

TEST_CASE("backprop_partials matches finite differences of a stencil loss") {
    Field4D f(tiny_density(), 81);
    randomize_features(f, 83);
    const Vec3 x{0.31, 0.59, 0.42};
    const double t = 0.45, hs = 0.01, ht = 0.01;
    const double coeff[4][3] = {{0.7, 0, 0}, {-1.1, 0, 0}, {0.4, 0, 0}, {2.0, 0, 0}};
    auto loss = [&]() {
        double p[4][3];
        f.query_partials(x, t, hs, ht, p);
        double L = 0.0;
        for (int a = 0; a < 4; ++a) L += coeff[a][0] * p[a][0];
        return L;
    };
    GradBuffer g;
    g.resize(f.num_params());
    f.backprop_partials(x, t, hs, ht, coeff, g);
    std::mt19937_64 rng(87);
    std::vector<std::size_t> probes(g.touched);
    std::shuffle(probes.begin(), probes.end(), rng);
    probes.resize(std::min<std::size_t>(probes.size(), 30));
    int checked = 0;
    for (std::size_t i : probes) {
        const double analytic = g.get(i);
        if (std::fabs(analytic) < 1e-6) continue;
        const double h = 1e-4, saved = f.params()[i];
        f.params()[i] = saved + h;
        const double hi = loss();
        f.params()[i] = saved - h;
        const double lo = loss();
        f.params()[i] = saved;
        CHECK(analytic == doctest::Approx((hi - lo) / (2 * h)).epsilon(1e-3));
        ++checked;
    }
    CHECK(checked > 5);
}

TEST_CASE("capped-hash mode shrinks storage and still evaluates") {
    GridConfig c = tiny_density();
    c.hash_cap = 64;
    Field4D hashed(c, 91);
    GridConfig dense_cfg = tiny_density();
    Field4D dense(dense_cfg, 91);
    CHECK(hashed.num_params() < dense.num_params());
    for (const Level4D& l : hashed.levels()) CHECK(l.table_size <= std::max<std::size_t>(64, 0));
    randomize_features(hashed, 93);
    double out;
    hashed.query({0.3, 0.3, 0.9}, 0.7, &out);
    CHECK(std::isfinite(out));
    GradBuffer g;
    g.resize(hashed.num_params());
    const double d = 1.0;
    hashed.backprop({0.3, 0.3, 0.9}, 0.7, &d, g);
    CHECK(!g.touched.empty());
}

TEST_CASE("save/load round-trips and re-saves identical bytes") {
    Field4D f(tiny_density(), 95);
    randomize_features(f, 97);
    std::stringstream s1;
    f.save(s1);
    Field4D g(tiny_density(), 0);
    std::stringstream in(s1.str());
    g.load(in);
    std::stringstream s2;
    g.save(s2);
    CHECK(s1.str() == s2.str());
}

TEST_CASE("checkpoint container round-trips") {
    namespace fs = std::filesystem;
    Field4D sigma(tiny_density(), 1);
    Field4D vel(placeholder_velocity_config(), 2);
    randomize_features(sigma, 3);
    double rad[3] = {0.25, 0.5, 0.75};
    const std::string p = (fs::temp_directory_path() / "t_field.hyf").string();
    save_checkpoint(p, sigma, vel, rad);
    Field4D sigma2(tiny_density(), 0);
    Field4D vel2(placeholder_velocity_config(), 0);
    double rad2[3];
    load_checkpoint(p, sigma2, vel2, rad2);
    for (int c = 0; c < 3; ++c) CHECK(rad2[c] == doctest::Approx(rad[c]));
    const std::string p2 = (fs::temp_directory_path() / "t_field2.hyf").string();
    save_checkpoint(p2, sigma2, vel2, rad2);
    std::ifstream a(p, std::ios::binary), b(p2, std::ios::binary);
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());
    // shape mismatch rejected
    GridConfig other = tiny_density();
    other.finest_res = 16;
    Field4D wrong(other, 0);
    CHECK_THROWS(load_checkpoint(p, wrong, vel2, rad2));
}

TEST_CASE("sample_to_mac equals per-point queries") {
    GridConfig c = GridConfig::velocity_default();
    c.base_res = 4;
    c.finest_res = 8;
    c.time_res_cap = 4;
    c.hidden_width = 16;
    Field4D f(c, 103);
    randomize_features(f, 105);
    FieldVelocity fv(f);
    MacGrid a(6, 6, 6), b(6, 6, 6);
    sample_to_mac(fv, 0.4, a);
    ref::sample_to_mac(fv, 0.4, b);
    for (std::size_t i = 0; i < a.u.size(); ++i) CHECK(a.u[i] == b.u[i]);
    for (std::size_t i = 0; i < a.v.size(); ++i) CHECK(a.v[i] == b.v[i]);
    for (std::size_t i = 0; i < a.w.size(); ++i) CHECK(a.w[i] == b.w[i]);
}

}  // TEST_SUITE
