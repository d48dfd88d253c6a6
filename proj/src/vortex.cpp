#include "hyfluid/vortex.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "hyfluid/io.h"
#include "hyfluid/parallel.h"

namespace hyfluid {

double vortex_kernel(const Vec3& dx, double r) {
    const double r2 = r * r;
    return std::exp(-dx.norm2() / (2.0 * r2)) / (r * r2 * std::pow(2.0 * M_PI, 1.5));
}

Vec3 VortexParticleSet::pos_at(int p, double fc) const {
    const int f0 = std::clamp((int)fc, 0, num_frames - 1);
    const int f1 = std::min(f0 + 1, num_frames - 1);
    const double a = std::clamp(fc - f0, 0.0, 1.0);
    const Vec3& x0 = position[(std::size_t)p * num_frames + f0];
    const Vec3& x1 = position[(std::size_t)p * num_frames + f1];
    return x0 * (1.0 - a) + x1 * a;
}

Vec3 VortexParticleSet::vort_at(int p, double fc) const {
    const int f0 = std::clamp((int)fc, 0, num_frames - 1);
    const int f1 = std::min(f0 + 1, num_frames - 1);
    const double a = std::clamp(fc - f0, 0.0, 1.0);
    const Vec3& w0 = vorticity[(std::size_t)p * num_frames + f0];
    const Vec3& w1 = vorticity[(std::size_t)p * num_frames + f1];
    return w0 * (1.0 - a) + w1 * a;
}

Vec3 VortexParticleSet::intensity_basis(const Vec3& x, double t, int p) const {
    const double fc = clampd(t, 0.0, 1.0) * (num_frames - 1);
    const Vec3 xp = pos_at(p, fc);
    const Vec3 dx = xp - x;
    const double d = dx.norm();
    if (d < eps_singularity) return {0, 0, 0};  // N undefined at the particle center
    const Vec3 n = dx / d;
    const Vec3 wt = vort_at(p, fc) * vortex_kernel(x - xp, kernel_radius);
    return cross(n, wt);
}

Vec3 VortexParticleSet::induced_velocity(const Vec3& x, double t) const {
    Vec3 u{0, 0, 0};
    for (int p = 0; p < size(); ++p) {
        if (intensity[p] == 0.0) continue;
        u += intensity[p] * intensity_basis(x, t, p);
    }
    return u;
}

void VortexParticleSet::scale_intensities(double factor) {
    if (!std::isfinite(factor)) throw std::invalid_argument("non-finite intensity scale");
    for (double& i : intensity) i *= factor;
}

Vec3 curl_of(const VectorField4& u, const Vec3& x, double t, double h) {
    double J[3][3];
    velocity_jacobian(u, x, t, h, J);
    return {J[2][1] - J[1][2], J[0][2] - J[2][0], J[1][0] - J[0][1]};
}

void velocity_jacobian(const VectorField4& u, const Vec3& x, double t, double h, double J[3][3]) {
    for (int a = 0; a < 3; ++a) {
        Vec3 xp = x, xm = x;
        xp[a] += h;
        xm[a] -= h;
        const Vec3 up = u.velocity(xp, t), um = u.velocity(xm, t);
        for (int i = 0; i < 3; ++i) J[i][a] = (up[i] - um[i]) / (2.0 * h);
    }
}

VortexParticleSet seed_particles(const VectorField4& u_base, const ScalarField4* density,
                                 const VortexConfig& cfg, int num_frames, std::mt19937_64& rng) {
    if (cfg.kernel_radius <= 0.0 || cfg.num_particles <= 0 || num_frames < 2)
        throw std::invalid_argument("bad vortex config");
    const int M = cfg.pool();
    if (cfg.num_particles > M) throw std::invalid_argument("pool smaller than particle count");

    struct Candidate {
        Vec3 x;
        double t;
        double score;
        Vec3 curl;
    };
    std::vector<Candidate> cands(M);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int m = 0; m < M; ++m) {
        cands[m].x = {u01(rng), u01(rng), u01(rng)};
        cands[m].t = u01(rng);
    }
#pragma omp parallel for schedule(static) num_threads(num_threads())
    for (int m = 0; m < M; ++m) {
        cands[m].curl = curl_of(u_base, cands[m].x, cands[m].t, cfg.stencil_h);
        cands[m].score = cands[m].curl.norm();
    }

    double max_curl = 0.0;
    for (const Candidate& c : cands) max_curl = std::max(max_curl, c.score);
    const bool degenerate = max_curl < 1e-12;
    if (degenerate) {
        std::fprintf(stderr,
                     "hyfluid: all candidate curls are zero, seeding at highest density\n");
        for (Candidate& c : cands)
            c.score = density ? density->density(c.x, c.t) : 0.0;
    }

    std::vector<int> order(M);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return cands[a].score > cands[b].score; });

    VortexParticleSet set;
    set.num_frames = num_frames;
    set.kernel_radius = cfg.kernel_radius;
    set.eps_singularity = cfg.eps_singularity;
    const double min_sep = cfg.kernel_radius * 0.5;
    std::vector<Vec3> chosen;
    for (int idx : order) {
        if ((int)chosen.size() >= cfg.num_particles) break;
        bool ok = true;
        for (const Vec3& c : chosen)
            if ((c - cands[idx].x).norm() < min_sep) { ok = false; break; }
        if (!ok) continue;
        chosen.push_back(cands[idx].x);
        set.intensity.push_back(0.0);
        set.seed_frame.push_back(
            std::clamp((int)std::lround(cands[idx].t * (num_frames - 1)), 0, num_frames - 1));
        // seed-time state; the rest of the trajectory is filled by precompute
        for (int f = 0; f < num_frames; ++f) {
            set.position.push_back(cands[idx].x);
            set.vorticity.push_back(degenerate ? Vec3{0, 0, 0} : cands[idx].curl);
        }
    }
    return set;
}

namespace {

struct ParticleState {
    Vec3 x;
    Vec3 w;
};

ParticleState rk2_step(const VectorField4& u, const ParticleState& s, double t, double dt,
                       double h, bool* clamped) {
    double J[3][3];
    const Vec3 k1x = u.velocity(s.x, t);
    velocity_jacobian(u, s.x, t, h, J);
    Vec3 k1w{J[0][0] * s.w.x + J[0][1] * s.w.y + J[0][2] * s.w.z,
             J[1][0] * s.w.x + J[1][1] * s.w.y + J[1][2] * s.w.z,
             J[2][0] * s.w.x + J[2][1] * s.w.y + J[2][2] * s.w.z};
    ParticleState mid{s.x + 0.5 * dt * k1x, s.w + 0.5 * dt * k1w};
    const double tm = t + 0.5 * dt;
    const Vec3 k2x = u.velocity(mid.x, tm);
    velocity_jacobian(u, mid.x, tm, h, J);
    Vec3 k2w{J[0][0] * mid.w.x + J[0][1] * mid.w.y + J[0][2] * mid.w.z,
             J[1][0] * mid.w.x + J[1][1] * mid.w.y + J[1][2] * mid.w.z,
             J[2][0] * mid.w.x + J[2][1] * mid.w.y + J[2][2] * mid.w.z};
    ParticleState out{s.x + dt * k2x, s.w + dt * k2w};
    Vec3 clampedx = clamp01(out.x);
    if ((clampedx - out.x).norm() > 0.0) *clamped = true;
    out.x = clampedx;
    return out;
}

}  // namespace

void precompute_trajectories(VortexParticleSet& set, const VectorField4& u_base,
                             const VortexConfig& cfg) {
    const int F = set.num_frames;
    const double dt = 1.0 / (F - 1);
    bool clamped = false;
#pragma omp parallel for schedule(static) num_threads(num_threads()) reduction(|| : clamped)
    for (int p = 0; p < set.size(); ++p) {
        const int s = set.seed_frame[p];
        const std::size_t base = (std::size_t)p * F;
        ParticleState st{set.position[base + s], set.vorticity[base + s]};
        ParticleState cur = st;
        for (int f = s; f + 1 < F; ++f) {
            cur = rk2_step(u_base, cur, f * dt, dt, cfg.stencil_h, &clamped);
            set.position[base + f + 1] = cur.x;
            set.vorticity[base + f + 1] = cur.w;
        }
        cur = st;
        for (int f = s; f > 0; --f) {
            cur = rk2_step(u_base, cur, f * dt, -dt, cfg.stencil_h, &clamped);
            set.position[base + f - 1] = cur.x;
            set.vorticity[base + f - 1] = cur.w;
        }
    }
    set.left_domain = clamped;
}

std::vector<double> fit_intensities_mse(const VortexParticleSet& set,
                                        const std::vector<Vec3>& probes,
                                        const std::vector<double>& times,
                                        const std::vector<Vec3>& targets) {
    const int P = set.size();
    const int N = (int)probes.size();
    // normal equations A^T A I = A^T b over 3N scalar rows
    std::vector<double> AtA((std::size_t)P * P, 0.0), Atb(P, 0.0);
    std::vector<Vec3> basis(P);
    for (int n = 0; n < N; ++n) {
        for (int p = 0; p < P; ++p) basis[p] = set.intensity_basis(probes[n], times[n], p);
        for (int p = 0; p < P; ++p) {
            for (int q = p; q < P; ++q) {
                const double v = dot(basis[p], basis[q]);
                AtA[(std::size_t)p * P + q] += v;
                if (q != p) AtA[(std::size_t)q * P + p] += v;
            }
            Atb[p] += dot(basis[p], targets[n]);
        }
    }
    for (int p = 0; p < P; ++p) AtA[(std::size_t)p * P + p] += 1e-12;  // ridge for null rows
    // Cholesky-free Gaussian elimination with partial pivoting (P is small)
    std::vector<double> I(Atb);
    std::vector<double> A(AtA);
    for (int c = 0; c < P; ++c) {
        int piv = c;
        for (int r2 = c + 1; r2 < P; ++r2)
            if (std::fabs(A[(std::size_t)r2 * P + c]) > std::fabs(A[(std::size_t)piv * P + c]))
                piv = r2;
        if (piv != c) {
            for (int k = 0; k < P; ++k) std::swap(A[(std::size_t)c * P + k], A[(std::size_t)piv * P + k]);
            std::swap(I[c], I[piv]);
        }
        const double d = A[(std::size_t)c * P + c];
        for (int r2 = c + 1; r2 < P; ++r2) {
            const double f = A[(std::size_t)r2 * P + c] / d;
            if (f == 0.0) continue;
            for (int k = c; k < P; ++k) A[(std::size_t)r2 * P + k] -= f * A[(std::size_t)c * P + k];
            I[r2] -= f * I[c];
        }
    }
    for (int c = P - 1; c >= 0; --c) {
        double s = I[c];
        for (int k = c + 1; k < P; ++k) s -= A[(std::size_t)c * P + k] * I[k];
        I[c] = s / A[(std::size_t)c * P + c];
    }
    return I;
}

Vec3 VelocityModel::eval(const Vec3& x, double t) const {
    Vec3 u{0, 0, 0};
    if (base) {
        double v[3];
        base->query(x, t, v);
        u = {v[0], v[1], v[2]};
    }
    if (vortex) u += vortex->induced_velocity(x, t);
    return u;
}

void VelocityModel::backprop(const Vec3& x, double t, const Vec3& dL_du, GradBuffer* base_grads,
                             std::vector<double>* dI) const {
    if (base && base_grads) {
        const double d[3] = {dL_du.x, dL_du.y, dL_du.z};
        base->backprop(x, t, d, *base_grads);
    }
    if (vortex && dI) {
        for (int p = 0; p < vortex->size(); ++p)
            (*dI)[p] += dot(dL_du, vortex->intensity_basis(x, t, p));
    }
}

void VortexParticleSet::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os.good()) throw std::runtime_error("cannot write particles: " + path);
    os.write("VTX1", 4);
    write_u32(os, (std::uint32_t)size());
    write_u32(os, (std::uint32_t)num_frames);
    write_f32(os, (float)kernel_radius);
    write_f32(os, (float)eps_singularity);
    for (int p = 0; p < size(); ++p) {
        write_f32(os, (float)intensity[p]);
        for (int f = 0; f < num_frames; ++f) {
            const Vec3& x = position[(std::size_t)p * num_frames + f];
            const Vec3& w = vorticity[(std::size_t)p * num_frames + f];
            for (int c = 0; c < 3; ++c) write_f32(os, (float)x[c]);
            for (int c = 0; c < 3; ++c) write_f32(os, (float)w[c]);
        }
    }
    if (!os.good()) throw std::runtime_error("particle write failed: " + path);
}

VortexParticleSet VortexParticleSet::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is.good()) throw std::runtime_error("cannot read particles: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is.good() || std::string(magic, 4) != "VTX1")
        throw std::runtime_error("bad particle magic: " + path);
    VortexParticleSet set;
    const int P = (int)read_u32(is);
    set.num_frames = (int)read_u32(is);
    set.kernel_radius = read_f32(is);
    set.eps_singularity = read_f32(is);
    set.intensity.resize(P);
    set.seed_frame.assign(P, 0);
    set.position.resize((std::size_t)P * set.num_frames);
    set.vorticity.resize((std::size_t)P * set.num_frames);
    for (int p = 0; p < P; ++p) {
        set.intensity[p] = read_f32(is);
        for (int f = 0; f < set.num_frames; ++f) {
            Vec3 x, w;
            for (int c = 0; c < 3; ++c) x[c] = read_f32(is);
            for (int c = 0; c < 3; ++c) w[c] = read_f32(is);
            set.position[(std::size_t)p * set.num_frames + f] = x;
            set.vorticity[(std::size_t)p * set.num_frames + f] = w;
        }
    }
    if (!is.good()) throw std::runtime_error("truncated particle file: " + path);
    return set;
}

}  // namespace hyfluid
