#include "hyfluid/reference.h"

#include <cmath>

namespace hyfluid {
namespace ref {

CellGrid divergence(const MacGrid& vel) {
    CellGrid out(vel.nx, vel.ny, vel.nz);
    for (int k = 0; k < vel.nz; ++k)
        for (int j = 0; j < vel.ny; ++j)
            for (int i = 0; i < vel.nx; ++i) {
                const double du = vel.u[vel.uidx(i + 1, j, k)] - vel.u[vel.uidx(i, j, k)];
                const double dv = vel.v[vel.vidx(i, j + 1, k)] - vel.v[vel.vidx(i, j, k)];
                const double dw = vel.w[vel.widx(i, j, k + 1)] - vel.w[vel.widx(i, j, k)];
                out.at(i, j, k) = (du + dv + dw) / vel.h();
            }
    return out;
}

namespace {

double lerp(double a, double b, double f) { return a + f * (b - a); }

void locate_axis(double x, double h, double offset, int n, int& i0, int& i1, double& f) {
    double c = x / h - offset;
    if (c <= 0.0) c = 0.0;
    if (c >= n - 1) c = (double)(n - 1);
    i0 = (int)std::floor(c);
    if (i0 > n - 2) i0 = n - 2;
    if (i0 < 0) i0 = 0;
    f = c - i0;
    i1 = i0 + 1 < n ? i0 + 1 : i0;
    if (f < 0) f = 0;
    if (f > 1) f = 1;
}

}  // namespace

double sample_cell(const CellGrid& g, const Vec3& p) {
    int i0, i1, j0, j1, k0, k1;
    double fx, fy, fz;
    locate_axis(p.x, g.hx(), 0.5, g.nx, i0, i1, fx);
    locate_axis(p.y, g.hy(), 0.5, g.ny, j0, j1, fy);
    locate_axis(p.z, g.hz(), 0.5, g.nz, k0, k1, fz);
    const double c00 = lerp(g.at(i0, j0, k0), g.at(i1, j0, k0), fx);
    const double c10 = lerp(g.at(i0, j1, k0), g.at(i1, j1, k0), fx);
    const double c01 = lerp(g.at(i0, j0, k1), g.at(i1, j0, k1), fx);
    const double c11 = lerp(g.at(i0, j1, k1), g.at(i1, j1, k1), fx);
    return lerp(lerp(c00, c10, fy), lerp(c01, c11, fy), fz);
}

void field_query(const Field4D& f, const Vec3& x, double t, double* out) {
    const GridConfig& cfg = f.config();
    const int F = cfg.features_per_vertex;
    const auto& levels = f.levels();
    const auto& P = f.params();
    const Vec3 p = clamp01(x);
    const double tc = clampd(t, 0.0, 1.0);

    std::vector<double> feat((std::size_t)F * levels.size(), 0.0);
    for (std::size_t l = 0; l < levels.size(); ++l) {
        const Level4D& lvl = levels[l];
        auto node = [](double c, int res, int& a, int& b, double& fr) {
            double u = c * (res - 1);
            if (u < 0) u = 0;
            if (u > res - 1) u = res - 1;
            a = (int)u;
            if (a > res - 2) a = res - 2;
            fr = u - a;
            b = a + 1;
        };
        int ia, ib, ja, jb, ka, kb, ta, tb;
        double fx, fy, fz, ft;
        node(p.x, lvl.nx, ia, ib, fx);
        node(p.y, lvl.ny, ja, jb, fy);
        node(p.z, lvl.nz, ka, kb, fz);
        node(tc, lvl.nt, ta, tb, ft);
        for (int ff = 0; ff < F; ++ff) {
            auto val = [&](int i, int j, int k, int tt) {
                return P[lvl.param_offset + f.vertex_slot((int)l, i, j, k, tt) * F + ff];
            };
            // quadrilinear interpolation expanded axis by axis
            auto tri = [&](int tt) {
                const double c00 = lerp(val(ia, ja, ka, tt), val(ib, ja, ka, tt), fx);
                const double c10 = lerp(val(ia, jb, ka, tt), val(ib, jb, ka, tt), fx);
                const double c01 = lerp(val(ia, ja, kb, tt), val(ib, ja, kb, tt), fx);
                const double c11 = lerp(val(ia, jb, kb, tt), val(ib, jb, kb, tt), fx);
                return lerp(lerp(c00, c10, fy), lerp(c01, c11, fy), fz);
            };
            feat[l * F + ff] = lerp(tri(ta), tri(tb), ft);
        }
    }
    const int in = (int)feat.size(), hid = cfg.hidden_width, od = cfg.output_dim;
    std::vector<double> act(hid);
    for (int h = 0; h < hid; ++h) {
        double a = P[f.b1_offset() + h];
        for (int i = 0; i < in; ++i) a += P[f.w1_offset() + (std::size_t)h * in + i] * feat[i];
        act[h] = a > 30.0 ? a : std::log1p(std::exp(a));
    }
    for (int o = 0; o < od; ++o) {
        double a = P[f.b2_offset() + o];
        for (int h = 0; h < hid; ++h) a += P[f.w2_offset() + (std::size_t)o * hid + h] * act[h];
        out[o] = cfg.density_head ? (a > 30.0 ? a : std::log1p(std::exp(a))) : a;
    }
}

CellGrid advect_semi_lagrangian(const CellGrid& phi, const MacGrid& vel, double dt) {
    CellGrid out(phi.nx, phi.ny, phi.nz);
    for (int k = 0; k < phi.nz; ++k)
        for (int j = 0; j < phi.ny; ++j)
            for (int i = 0; i < phi.nx; ++i) {
                const Vec3 x = phi.cell_center(i, j, k);
                const Vec3 mid = clamp01(x - 0.5 * dt * vel.sample(x));
                const Vec3 xd = clamp01(x - dt * vel.sample(mid));
                out.at(i, j, k) = sample_cell(phi, xd);
            }
    return out;
}

void sample_to_mac(const VectorField4& field, double t, MacGrid& out) {
    for (int k = 0; k < out.nz; ++k)
        for (int j = 0; j < out.ny; ++j)
            for (int i = 0; i <= out.nx; ++i)
                out.u[out.uidx(i, j, k)] = field.velocity(out.uface_center(i, j, k), t).x;
    for (int k = 0; k < out.nz; ++k)
        for (int j = 0; j <= out.ny; ++j)
            for (int i = 0; i < out.nx; ++i)
                out.v[out.vidx(i, j, k)] = field.velocity(out.vface_center(i, j, k), t).y;
    for (int k = 0; k <= out.nz; ++k)
        for (int j = 0; j < out.ny; ++j)
            for (int i = 0; i < out.nx; ++i)
                out.w[out.widx(i, j, k)] = field.velocity(out.wface_center(i, j, k), t).z;
}

Vec3 render_ray(const Ray& ray, const ScalarField4& density, const double radiance[3],
                const RenderConfig& cfg) {
    // midpoint quadrature with the transmittance written as an explicit
    // exponential of the accumulated optical depth
    double t0 = ray.t_near, t1 = ray.t_far;
    for (int a = 0; a < 3; ++a) {
        const double o = ray.origin[a], d = ray.dir[a];
        if (std::fabs(d) < 1e-12) {
            if (o < 0.0 || o > 1.0) return {0, 0, 0};
            continue;
        }
        double ta = (0.0 - o) / d, tb = (1.0 - o) / d;
        if (ta > tb) std::swap(ta, tb);
        if (ta > t0) t0 = ta;
        if (tb < t1) t1 = tb;
    }
    if (!(t1 > t0)) return {0, 0, 0};
    const int n = cfg.samples_per_ray;
    const double delta = (t1 - t0) / n;
    std::vector<double> sig(n);
    for (int i = 0; i < n; ++i) {
        const Vec3 p = ray.origin + (t0 + (i + 0.5) * delta) * ray.dir;
        sig[i] = density.density(p, ray.t_frame);
    }
    double alpha_total = 0.0;
    for (int i = 0; i < n; ++i) {
        double depth = 0.0;
        for (int j = 0; j < i; ++j) depth += sig[j] * delta;
        alpha_total += std::exp(-depth) * (1.0 - std::exp(-sig[i] * delta));
    }
    return {radiance[0] * alpha_total, radiance[1] * alpha_total, radiance[2] * alpha_total};
}

Vec3 induced_velocity(const VortexParticleSet& set, const Vec3& x, double t) {
    Vec3 u{0, 0, 0};
    const double r = set.kernel_radius;
    const double frame_coord = clampd(t, 0.0, 1.0) * (set.num_frames - 1);
    for (int p = 0; p < set.size(); ++p) {
        const Vec3 xp = set.pos_at(p, frame_coord);
        const Vec3 wp = set.vort_at(p, frame_coord);
        const Vec3 dx = x - xp;
        const double dist = dx.norm();
        if (dist < set.eps_singularity) continue;
        const Vec3 N = (-1.0 / dist) * dx;
        const double K =
            std::exp(-dx.norm2() / (2.0 * r * r)) / (r * r * r * std::pow(2.0 * M_PI, 1.5));
        u += set.intensity[p] * K * cross(N, wp);
    }
    return u;
}

}  // namespace ref
}  // namespace hyfluid
