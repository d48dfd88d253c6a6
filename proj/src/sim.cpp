#include "hyfluid/sim.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "hyfluid/io.h"
#include "hyfluid/parallel.h"
#include "hyfluid/rng.h"

namespace hyfluid {

namespace {

inline void locate(double x, double h, double offset, int n, int& i0, double& f) {
    double c = x / h - offset;
    if (c <= 0.0) { i0 = 0; f = 0.0; return; }
    if (c >= n - 1) { i0 = n - 2 >= 0 ? n - 2 : 0; f = n >= 2 ? 1.0 : 0.0; return; }
    i0 = (int)std::floor(c);
    f = c - i0;
}

// trilinear sample of a lattice (getter over node indices), also reporting the
// min/max over the 8 stencil nodes
template <typename Get>
double sample_bounds(const Get& get, const Vec3& p, double hx, double hy, double hz, double ox,
                     double oy, double oz, int nx, int ny, int nz, double* mn, double* mx) {
    int i0, j0, k0;
    double fx, fy, fz;
    locate(p.x, hx, ox, nx, i0, fx);
    locate(p.y, hy, oy, ny, j0, fy);
    locate(p.z, hz, oz, nz, k0, fz);
    const int i1 = std::min(i0 + 1, nx - 1), j1 = std::min(j0 + 1, ny - 1),
              k1 = std::min(k0 + 1, nz - 1);
    double lo = 1e300, hi = -1e300, val = 0.0;
    const int is[2] = {i0, i1}, js[2] = {j0, j1}, ks[2] = {k0, k1};
    const double wx[2] = {1 - fx, fx}, wy[2] = {1 - fy, fy}, wz[2] = {1 - fz, fz};
    for (int c = 0; c < 8; ++c) {
        const int di = c & 1, dj = (c >> 1) & 1, dk = (c >> 2) & 1;
        const double v = get(is[di], js[dj], ks[dk]);
        val += v * wx[di] * wy[dj] * wz[dk];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (mn) *mn = lo;
    if (mx) *mx = hi;
    return val;
}

inline Vec3 backtrace(const MacGrid& vel, const Vec3& x, double dt) {
    const Vec3 mid = clamp01(x - 0.5 * dt * vel.sample(x));
    return clamp01(x - dt * vel.sample(mid));
}

}  // namespace

CellGrid advect_semi_lagrangian(const CellGrid& phi, const MacGrid& vel, double dt,
                                CellGrid* stencil_min, CellGrid* stencil_max) {
    CellGrid out(phi.nx, phi.ny, phi.nz);
    if (stencil_min) stencil_min->resize(phi.nx, phi.ny, phi.nz);
    if (stencil_max) stencil_max->resize(phi.nx, phi.ny, phi.nz);
    auto get = [&](int i, int j, int k) { return phi.at(i, j, k); };
#pragma omp parallel for schedule(static) num_threads(num_threads())
    for (int k = 0; k < phi.nz; ++k)
        for (int j = 0; j < phi.ny; ++j)
            for (int i = 0; i < phi.nx; ++i) {
                const Vec3 xd = backtrace(vel, phi.cell_center(i, j, k), dt);
                double mn, mx;
                const double v = sample_bounds(get, xd, phi.hx(), phi.hy(), phi.hz(), 0.5, 0.5,
                                               0.5, phi.nx, phi.ny, phi.nz, &mn, &mx);
                out.at(i, j, k) = v;
                if (stencil_min) stencil_min->at(i, j, k) = mn;
                if (stencil_max) stencil_max->at(i, j, k) = mx;
            }
    return out;
}

MacGrid advect_mac_semi_lagrangian(const MacGrid& field, const MacGrid& vel, double dt,
                                   MacGrid* stencil_min, MacGrid* stencil_max) {
    MacGrid out(field.nx, field.ny, field.nz);
    if (stencil_min) stencil_min->resize(field.nx, field.ny, field.nz);
    if (stencil_max) stencil_max->resize(field.nx, field.ny, field.nz);
    const int nx = field.nx, ny = field.ny, nz = field.nz;
    auto getu = [&](int i, int j, int k) { return field.u[field.uidx(i, j, k)]; };
    auto getv = [&](int i, int j, int k) { return field.v[field.vidx(i, j, k)]; };
    auto getw = [&](int i, int j, int k) { return field.w[field.widx(i, j, k)]; };
#pragma omp parallel for schedule(static) num_threads(num_threads())
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i <= nx; ++i) {
                const Vec3 xd = backtrace(vel, field.uface_center(i, j, k), dt);
                double mn, mx;
                const double v = sample_bounds(getu, xd, field.hx(), field.hy(), field.hz(), 0.0,
                                               0.5, 0.5, nx + 1, ny, nz, &mn, &mx);
                out.u[out.uidx(i, j, k)] = v;
                if (stencil_min) stencil_min->u[out.uidx(i, j, k)] = mn;
                if (stencil_max) stencil_max->u[out.uidx(i, j, k)] = mx;
            }
#pragma omp parallel for schedule(static) num_threads(num_threads())
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j <= ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const Vec3 xd = backtrace(vel, field.vface_center(i, j, k), dt);
                double mn, mx;
                const double v = sample_bounds(getv, xd, field.hx(), field.hy(), field.hz(), 0.5,
                                               0.0, 0.5, nx, ny + 1, nz, &mn, &mx);
                out.v[out.vidx(i, j, k)] = v;
                if (stencil_min) stencil_min->v[out.vidx(i, j, k)] = mn;
                if (stencil_max) stencil_max->v[out.vidx(i, j, k)] = mx;
            }
#pragma omp parallel for schedule(static) num_threads(num_threads())
    for (int k = 0; k <= nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const Vec3 xd = backtrace(vel, field.wface_center(i, j, k), dt);
                double mn, mx;
                const double v = sample_bounds(getw, xd, field.hx(), field.hy(), field.hz(), 0.5,
                                               0.5, 0.0, nx, ny, nz + 1, &mn, &mx);
                out.w[out.widx(i, j, k)] = v;
                if (stencil_min) stencil_min->w[out.widx(i, j, k)] = mn;
                if (stencil_max) stencil_max->w[out.widx(i, j, k)] = mx;
            }
    return out;
}

CellGrid advect_maccormack(const CellGrid& phi, const MacGrid& vel, double dt) {
    CellGrid mn, mx;
    CellGrid fwd = advect_semi_lagrangian(phi, vel, dt, &mn, &mx);
    CellGrid back = advect_semi_lagrangian(fwd, vel, -dt);
#pragma omp parallel for schedule(static) num_threads(num_threads())
    for (long long i = 0; i < (long long)fwd.size(); ++i) {
        double v = fwd.data[i] + 0.5 * (phi.data[i] - back.data[i]);
        fwd.data[i] = std::clamp(v, mn.data[i], mx.data[i]);
    }
    return fwd;
}

MacGrid advect_mac_maccormack(const MacGrid& field, const MacGrid& vel, double dt) {
    MacGrid mn, mx;
    MacGrid fwd = advect_mac_semi_lagrangian(field, vel, dt, &mn, &mx);
    MacGrid back = advect_mac_semi_lagrangian(fwd, vel, -dt);
    auto combine = [](std::vector<double>& f, const std::vector<double>& orig,
                      const std::vector<double>& b, const std::vector<double>& lo,
                      const std::vector<double>& hi) {
#pragma omp parallel for schedule(static) num_threads(num_threads())
        for (long long i = 0; i < (long long)f.size(); ++i)
            f[i] = std::clamp(f[i] + 0.5 * (orig[i] - b[i]), lo[i], hi[i]);
    };
    combine(fwd.u, field.u, back.u, mn.u, mx.u);
    combine(fwd.v, field.v, back.v, mn.v, mx.v);
    combine(fwd.w, field.w, back.w, mn.w, mx.w);
    return fwd;
}

double cfl_number(const MacGrid& vel, double dt) { return vel.max_abs() * dt / vel.h(); }

namespace {

void diffuse(CellGrid& g, double coeff) {
    if (coeff <= 0.0) return;
    CellGrid src = g;
#pragma omp parallel for schedule(static) num_threads(num_threads())
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                auto v = [&](int a, int b, int c) {
                    a = std::clamp(a, 0, g.nx - 1);
                    b = std::clamp(b, 0, g.ny - 1);
                    c = std::clamp(c, 0, g.nz - 1);
                    return src.at(a, b, c);
                };
                const double lap = v(i - 1, j, k) + v(i + 1, j, k) + v(i, j - 1, k) +
                                   v(i, j + 1, k) + v(i, j, k - 1) + v(i, j, k + 1) -
                                   6.0 * src.at(i, j, k);
                g.at(i, j, k) += coeff * lap;
            }
}

}  // namespace

std::pair<DensitySequence, std::vector<MacGrid>> simulate_plume(const SimConfig& cfg) {
    const int n = cfg.res;
    CellGrid density(n, n, n);
    MacGrid vel(n, n, n);
    DensitySequence seq;
    seq.dt = cfg.dt;
    std::vector<MacGrid> vels;
    SplitMix64 perturb(cfg.seed);

    for (int f = 0; f < cfg.num_frames; ++f) {
        // deterministic lateral wobble inside the source keeps the plume from
        // being perfectly axisymmetric
        const double jx = cfg.inflow.turbulence * (perturb.uniform() - 0.5);
        const double jz = cfg.inflow.turbulence * (perturb.uniform() - 0.5);
        const double r2 = cfg.inflow.radius * cfg.inflow.radius;
        for (int k = 0; k < n; ++k)
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < n; ++i) {
                    if ((density.cell_center(i, j, k) - cfg.inflow.center).norm2() > r2) continue;
                    density.at(i, j, k) += cfg.inflow.density_rate * cfg.dt;
                }
        for (int k = 0; k < n; ++k)
            for (int j = 0; j <= n; ++j)
                for (int i = 0; i < n; ++i) {
                    if ((vel.vface_center(i, j, k) - cfg.inflow.center).norm2() > r2) continue;
                    vel.v[vel.vidx(i, j, k)] = cfg.inflow.seed_velocity;
                    if (i + 1 <= n) vel.u[vel.uidx(i, j < n ? j : n - 1, k)] += jx * cfg.dt;
                    vel.w[vel.widx(i, j < n ? j : n - 1, k)] += jz * cfg.dt;
                }

        if (f > 0) {
            density = advect_maccormack(density, vel, cfg.dt);
            vel = advect_mac_maccormack(vel, vel, cfg.dt);
        }
        for (double& d : density.data) d = std::max(d, 0.0);

        // buoyancy: upward force proportional to local density
        for (int k = 0; k < n; ++k)
            for (int j = 1; j < n; ++j)
                for (int i = 0; i < n; ++i)
                    vel.v[vel.vidx(i, j, k)] +=
                        cfg.buoyancy * cfg.dt *
                        0.5 * (density.at(i, j, k) + density.at(i, j - 1, k));

        if (cfg.diffusion > 0.0) diffuse(density, cfg.diffusion);

        vel = project(vel, cfg.solver, cfg.bc);
        seq.frames.push_back(density);
        vels.push_back(vel);
    }
    return {std::move(seq), std::move(vels)};
}

DensitySequence resimulate(const ScalarField4& sigma, const VectorField4& velocity,
                           const SimConfig& cfg, double source_height) {
    const int n = cfg.res;
    DensitySequence seq;
    seq.dt = cfg.dt;
    CellGrid d(n, n, n);
#pragma omp parallel for schedule(static) num_threads(num_threads())
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) d.at(i, j, k) = sigma.density(d.cell_center(i, j, k), 0.0);
    seq.frames.push_back(d);
    MacGrid vel(n, n, n);
    for (int f = 1; f < cfg.num_frames; ++f) {
        const double t_prev = (double)(f - 1) / (cfg.num_frames - 1);
        const double t_now = (double)f / (cfg.num_frames - 1);
        sample_to_mac(velocity, t_prev, vel);
        d = advect_maccormack(d, vel, cfg.dt);
        for (double& v : d.data) v = std::max(v, 0.0);
        // refresh the bottom slab from the reconstructed field (fluid source)
        const int j_max = std::max(1, (int)std::floor(source_height * n));
#pragma omp parallel for schedule(static) num_threads(num_threads())
        for (int k = 0; k < n; ++k)
            for (int j = 0; j < j_max; ++j)
                for (int i = 0; i < n; ++i)
                    d.at(i, j, k) = sigma.density(d.cell_center(i, j, k), t_now);
        seq.frames.push_back(d);
    }
    return seq;
}

std::pair<DensitySequence, std::vector<MacGrid>> predict_future(const MacGrid& vel0,
                                                                const CellGrid& sigma0,
                                                                int num_steps, const SimConfig& cfg,
                                                                bool buoyancy) {
    DensitySequence seq;
    seq.dt = cfg.dt;
    std::vector<MacGrid> vels;
    MacGrid vel = vel0;
    CellGrid d = sigma0;
    seq.frames.push_back(d);  // frame 0 = the start state
    vels.push_back(vel);
    for (int s = 0; s < num_steps; ++s) {
        vel = advect_mac_maccormack(vel, vel, cfg.dt);
        if (buoyancy)
            for (int k = 0; k < cfg.res; ++k)
                for (int j = 1; j < cfg.res; ++j)
                    for (int i = 0; i < cfg.res; ++i)
                        vel.v[vel.vidx(i, j, k)] +=
                            cfg.buoyancy * cfg.dt * 0.5 * (d.at(i, j, k) + d.at(i, j - 1, k));
        vel = project(vel, cfg.solver, cfg.bc);
        d = advect_maccormack(d, vel, cfg.dt);
        for (double& v : d.data) v = std::max(v, 0.0);
        seq.frames.push_back(d);
        vels.push_back(vel);
    }
    return {std::move(seq), std::move(vels)};
}

namespace fs = std::filesystem;

void save_density_sequence(const std::string& dir, const std::string& prefix,
                           const DensitySequence& seq) {
    fs::create_directories(dir);
    std::ofstream manifest(fs::path(dir) / (prefix + "_manifest.txt"));
    if (!manifest.good()) throw std::runtime_error("cannot write manifest in " + dir);
    manifest << "dt " << seq.dt << "\n";
    for (std::size_t f = 0; f < seq.frames.size(); ++f) {
        char name[64];
        std::snprintf(name, sizeof(name), "%s_%04zu.grd", prefix.c_str(), f);
        write_grd((fs::path(dir) / name).string(), seq.frames[f]);
        manifest << name << "\n";
    }
}

DensitySequence load_density_sequence(const std::string& manifest_path) {
    std::ifstream is(manifest_path);
    if (!is.good()) throw std::runtime_error("cannot read manifest: " + manifest_path);
    std::string key;
    DensitySequence seq;
    is >> key >> seq.dt;
    if (key != "dt") throw std::runtime_error("bad manifest header: " + manifest_path);
    const fs::path dir = fs::path(manifest_path).parent_path();
    std::string line;
    while (is >> line) seq.frames.push_back(read_grd_cell((dir / line).string()));
    return seq;
}

void save_velocity_sequence(const std::string& dir, const std::string& prefix,
                            const std::vector<MacGrid>& vels, double dt) {
    fs::create_directories(dir);
    std::ofstream manifest(fs::path(dir) / (prefix + "_manifest.txt"));
    if (!manifest.good()) throw std::runtime_error("cannot write manifest in " + dir);
    manifest << "dt " << dt << "\n";
    for (std::size_t f = 0; f < vels.size(); ++f) {
        char name[64];
        std::snprintf(name, sizeof(name), "%s_%04zu.grd", prefix.c_str(), f);
        write_grd((fs::path(dir) / name).string(), vels[f]);
        manifest << name << "\n";
    }
}

std::vector<MacGrid> load_velocity_sequence(const std::string& manifest_path, double* dt) {
    std::ifstream is(manifest_path);
    if (!is.good()) throw std::runtime_error("cannot read manifest: " + manifest_path);
    std::string key;
    double d;
    is >> key >> d;
    if (key != "dt") throw std::runtime_error("bad manifest header: " + manifest_path);
    if (dt) *dt = d;
    const fs::path dir = fs::path(manifest_path).parent_path();
    std::vector<MacGrid> vels;
    std::string line;
    while (is >> line) vels.push_back(read_grd_mac((dir / line).string()));
    return vels;
}

double GridSequenceDensity::density(const Vec3& x, double t) const {
    const int F = (int)seq_->frames.size();
    const double fc = clampd(t, 0.0, 1.0) * (F - 1);
    const int f0 = std::min((int)fc, F - 1);
    const int f1 = std::min(f0 + 1, F - 1);
    const double a = fc - f0;
    const Vec3 p = clamp01(x);
    return scale_ * ((1.0 - a) * seq_->frames[f0].sample(p) + a * seq_->frames[f1].sample(p));
}

Vec3 GridSequenceVelocity::velocity(const Vec3& x, double t) const {
    const int F = (int)vels_->size();
    const double fc = clampd(t, 0.0, 1.0) * (F - 1);
    const int f0 = std::min((int)fc, F - 1);
    const int f1 = std::min(f0 + 1, F - 1);
    const double a = fc - f0;
    const Vec3 p = clamp01(x);
    return (1.0 - a) * (*vels_)[f0].sample(p) + a * (*vels_)[f1].sample(p);
}

}  // namespace hyfluid
