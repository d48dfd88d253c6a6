#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

#include "hyfluid/parallel.h"
#include "hyfluid/reference.h"
#include "hyfluid/render.h"
#include "hyfluid/sim.h"

using namespace hyfluid;

namespace {

double now() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

template <typename F>
double time_best(F&& f, int reps = 3) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const double t0 = now();
        f();
        best = std::min(best, now() - t0);
    }
    return best;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

void report(const char* name, double serial, double parallel, double diff) {
    std::printf("%-24s serial %8.2f ms   parallel %8.2f ms   speedup %5.2fx   max|diff| %.3g\n",
                name, serial * 1e3, parallel * 1e3, serial / parallel, diff);
}

}  // namespace

int main() {
    std::printf("threads: %d\n", num_threads());
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u01(-1.0, 1.0);

    const int n = 96;
    MacGrid vel(n, n, n);
    for (double& x : vel.u) x = 0.2 * u01(rng);
    for (double& x : vel.v) x = 0.2 * u01(rng);
    for (double& x : vel.w) x = 0.2 * u01(rng);
    CellGrid phi(n, n, n);
    for (double& x : phi.data) x = u01(rng) + 1.0;

    {
        CellGrid a, b;
        const double ts = time_best([&] { a = ref::divergence(vel); });
        const double tp = time_best([&] { b = divergence(vel); });
        report("divergence", ts, tp, max_diff(a.data, b.data));
    }
    {
        CellGrid a, b;
        const double dt = 0.01;
        const double ts = time_best([&] { a = ref::advect_semi_lagrangian(phi, vel, dt); });
        const double tp = time_best([&] { b = advect_semi_lagrangian(phi, vel, dt); });
        report("advect_semi_lagrangian", ts, tp, max_diff(a.data, b.data));
    }
    {
        GridConfig gc = GridConfig::velocity_default();
        gc.base_res = 8;
        gc.finest_res = 32;
        gc.time_res_cap = 8;
        Field4D field(gc, 11);
        for (std::size_t i = 0; i < field.feature_param_count(); ++i)
            field.params()[i] = 0.05 * u01(rng);
        FieldVelocity fv(field);
        MacGrid a(48, 48, 48), b(48, 48, 48);
        const double ts = time_best([&] { ref::sample_to_mac(fv, 0.5, a); });
        const double tp = time_best([&] { sample_to_mac(fv, 0.5, b); });
        double d = std::max({max_diff(a.u, b.u), max_diff(a.v, b.v), max_diff(a.w, b.w)});
        report("sample_to_mac", ts, tp, d);
    }
    {
        GridConfig gc = GridConfig::density_default();
        gc.base_res = 8;
        gc.finest_res = 32;
        gc.time_res_cap = 8;
        Field4D field(gc, 13);
        for (std::size_t i = 0; i < field.feature_param_count(); ++i)
            field.params()[i] = 0.1 * u01(rng);
        FieldDensity fd(field);
        const double rad[3] = {0.8, 0.8, 0.8};
        Camera cam = look_at({0.5, 0.5, -1.8}, {0.5, 0.5, 0.5}, {0, 1, 0}, 0.8, 64, 64, 0.5, 4.5);
        RenderConfig rc;
        rc.samples_per_ray = 96;
        rc.jitter = false;
        Image a(64, 64, 3), b;
        const double ts = time_best([&] {
            for (int y = 0; y < 64; ++y)
                for (int x = 0; x < 64; ++x) {
                    Ray r;
                    r.px = x + 0.5;
                    r.py = y + 0.5;
                    r.origin = cam.position;
                    r.dir = cam.pixel_ray_dir(r.px, r.py);
                    r.t_frame = 0.5;
                    r.t_near = cam.t_near;
                    r.t_far = cam.t_far;
                    const Vec3 rgb = ref::render_ray(r, fd, rad, rc);
                    for (int c = 0; c < 3; ++c) a.at(y, x, c) = (float)rgb[c];
                }
        }, 1);
        const double tp = time_best([&] { b = render_image(cam, 0.5, fd, rad, rc); }, 1);
        double d = 0.0;
        for (std::size_t i = 0; i < a.data.size(); ++i)
            d = std::max(d, (double)std::fabs(a.data[i] - b.data[i]));
        report("render_image", ts, tp, d);
    }
    return 0;
}
