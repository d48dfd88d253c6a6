#include "hyfluid/field4d.h"

#include <cassert>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include "hyfluid/io.h"
#include "hyfluid/parallel.h"

namespace hyfluid {

namespace {

inline double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// clamp-to-edge lattice location: res nodes spanning [0,1]
inline void locate(double x, int res, int& i0, double& f) {
    double c = x * (res - 1);
    if (c <= 0.0) { i0 = 0; f = 0.0; return; }
    if (c >= res - 1) { i0 = res - 2; f = 1.0; return; }
    i0 = (int)c;
    f = c - i0;
}

inline std::size_t hash4(int i, int j, int k, int t) {
    std::uint64_t h = (std::uint64_t)(std::uint32_t)i;
    h ^= (std::uint64_t)(std::uint32_t)j * 2654435761ull;
    h ^= (std::uint64_t)(std::uint32_t)k * 805459861ull;
    h ^= (std::uint64_t)(std::uint32_t)t * 3674653429ull;
    return (std::size_t)h;
}

}  // namespace

Field4D::Field4D(const GridConfig& cfg, std::uint64_t init_seed) : cfg_(cfg) {
    if (cfg.base_res < 2 || cfg.finest_res < cfg.base_res || cfg.time_res_cap < 2)
        throw std::invalid_argument("bad grid config");
    std::size_t offset = 0;
    int res = cfg.base_res;
    int max_nt = 2;
    while (true) {
        Level4D lvl;
        lvl.nx = lvl.ny = lvl.nz = res;
        lvl.nt = std::min(res, cfg.time_res_cap);
        max_nt = std::max(max_nt, lvl.nt);
        std::size_t dense = (std::size_t)lvl.nx * lvl.ny * lvl.nz * lvl.nt;
        lvl.table_size = dense;
        if (cfg.hash_cap > 0 && dense > cfg.hash_cap) {
            lvl.table_size = cfg.hash_cap;
            lvl.hashed = true;
        }
        lvl.param_offset = offset;
        offset += lvl.table_size * cfg.features_per_vertex;
        levels_.push_back(lvl);
        if ((int)levels_.size() > kMaxLevels) throw std::invalid_argument("too many levels");
        if (res >= cfg.finest_res) break;
        res = std::min(res * 2, cfg.finest_res);
    }
    feature_count_ = offset;
    const int in = feature_dim(), hid = cfg.hidden_width, out = cfg.output_dim;
    if (in > kMaxFeat || hid > kMaxHidden) throw std::invalid_argument("decoder too wide");
    w1_ = offset; offset += (std::size_t)hid * in;
    b1_ = offset; offset += hid;
    w2_ = offset; offset += (std::size_t)out * hid;
    b2_ = offset; offset += out;
    params_.assign(offset, 0.0);

    std::mt19937_64 rng(init_seed);
    std::uniform_real_distribution<double> feat_d(-1e-4, 1e-4);
    std::uniform_real_distribution<double> w_d(-0.1, 0.1);
    for (std::size_t i = 0; i < feature_count_; ++i) params_[i] = feat_d(rng);
    for (std::size_t i = 0; i < (std::size_t)hid * in; ++i) params_[w1_ + i] = w_d(rng);
    for (std::size_t i = 0; i < (std::size_t)out * hid; ++i) params_[w2_ + i] = w_d(rng);
    // choose output biases so the all-zero-feature field decodes to output_bias exactly
    const double h0 = softplus(0.0);
    for (int o = 0; o < out; ++o) {
        double s = 0.0;
        for (int h = 0; h < hid; ++h) s += params_[w2_ + (std::size_t)o * hid + h] * h0;
        params_[b2_ + o] = cfg.output_bias - s;
    }

    hs_default_ = 0.5 / (cfg.finest_res - 1);
    ht_default_ = 0.5 / (max_nt - 1);
}

std::size_t Field4D::vertex_slot(int level, int i, int j, int k, int t) const {
    const Level4D& l = levels_[level];
    if (!l.hashed)
        return (((std::size_t)t * l.nz + k) * (std::size_t)l.ny + j) * l.nx + i;
    return hash4(i, j, k, t) % l.table_size;
}

void Field4D::forward(const Vec3& x, double t, Scratch& s) const {
    if (!std::isfinite(x.x) || !std::isfinite(x.y) || !std::isfinite(x.z) || !std::isfinite(t))
        throw std::invalid_argument("non-finite field query");
    const int F = cfg_.features_per_vertex;
    const int L = (int)levels_.size();
    const Vec3 p = clamp01(x);
    const double tc = clampd(t, 0.0, 1.0);
    for (int f = 0; f < F * L; ++f) s.feat[f] = 0.0;
    for (int l = 0; l < L; ++l) {
        const Level4D& lvl = levels_[l];
        int i0, j0, k0, t0;
        double fx, fy, fz, ft;
        locate(p.x, lvl.nx, i0, fx);
        locate(p.y, lvl.ny, j0, fy);
        locate(p.z, lvl.nz, k0, fz);
        locate(tc, lvl.nt, t0, ft);
        const double wx[2] = {1 - fx, fx}, wy[2] = {1 - fy, fy};
        const double wz[2] = {1 - fz, fz}, wt[2] = {1 - ft, ft};
        int c = 0;
        for (int dt = 0; dt < 2; ++dt)
            for (int dk = 0; dk < 2; ++dk)
                for (int dj = 0; dj < 2; ++dj)
                    for (int di = 0; di < 2; ++di, ++c) {
                        const double w = wx[di] * wy[dj] * wz[dk] * wt[dt];
                        const std::size_t slot =
                            vertex_slot(l, i0 + di, j0 + dj, k0 + dk, t0 + dt);
                        const std::size_t base = lvl.param_offset + slot * F;
                        s.corner[16 * l + c] = base;
                        s.weight[16 * l + c] = w;
                        for (int f = 0; f < F; ++f) s.feat[l * F + f] += w * params_[base + f];
                    }
    }
    const int in = F * L, hid = cfg_.hidden_width, out = cfg_.output_dim;
    const double* W1 = &params_[w1_];
    const double* B1 = &params_[b1_];
    const double* W2 = &params_[w2_];
    const double* B2 = &params_[b2_];
    for (int h = 0; h < hid; ++h) {
        double a = B1[h];
        const double* row = W1 + (std::size_t)h * in;
        for (int f = 0; f < in; ++f) a += row[f] * s.feat[f];
        s.pre[h] = a;
        s.act[h] = softplus(a);
    }
    for (int o = 0; o < out; ++o) {
        double a = B2[o];
        const double* row = W2 + (std::size_t)o * hid;
        for (int h = 0; h < hid; ++h) a += row[h] * s.act[h];
        s.out[o] = a;
    }
}

void Field4D::query(const Vec3& x, double t, double* out) const {
    Scratch s;
    query(x, t, out, s);
}

void Field4D::query(const Vec3& x, double t, double* out, Scratch& s) const {
    forward(x, t, s);
    for (int o = 0; o < cfg_.output_dim; ++o)
        out[o] = cfg_.density_head ? softplus(s.out[o]) : s.out[o];
}

void Field4D::backprop(const Vec3& x, double t, const double* dL_dout, GradBuffer& grads) const {
    Scratch s;
    backprop(x, t, dL_dout, grads, s);
}

void Field4D::backprop(const Vec3& x, double t, const double* dL_dout, GradBuffer& grads,
                       Scratch& s) const {
    bool any = false;
    for (int o = 0; o < cfg_.output_dim; ++o) any = any || dL_dout[o] != 0.0;
    if (!any) return;
    forward(x, t, s);
    const int F = cfg_.features_per_vertex;
    const int L = (int)levels_.size();
    const int in = F * L, hid = cfg_.hidden_width, out = cfg_.output_dim;
    const double* W1 = &params_[w1_];
    const double* W2 = &params_[w2_];

    double dout[3];
    for (int o = 0; o < out; ++o)
        dout[o] = cfg_.density_head ? dL_dout[o] * sigmoid(s.out[o]) : dL_dout[o];

    double dact[kMaxHidden] = {0};
    for (int o = 0; o < out; ++o) {
        const double g = dout[o];
        if (g == 0.0) continue;
        const std::size_t row = w2_ + (std::size_t)o * hid;
        for (int h = 0; h < hid; ++h) {
            grads.add(row + h, g * s.act[h]);
            dact[h] += g * W2[(std::size_t)o * hid + h];
        }
        grads.add(b2_ + o, g);
    }
    double dfeat[kMaxFeat] = {0};
    for (int h = 0; h < hid; ++h) {
        const double dpre = dact[h] * sigmoid(s.pre[h]);
        if (dpre == 0.0) continue;
        const std::size_t row = w1_ + (std::size_t)h * in;
        for (int f = 0; f < in; ++f) {
            grads.add(row + f, dpre * s.feat[f]);
            dfeat[f] += dpre * W1[(std::size_t)h * in + f];
        }
        grads.add(b1_ + h, dpre);
    }
    for (int l = 0; l < L; ++l)
        for (int c = 0; c < 16; ++c) {
            const double w = s.weight[16 * l + c];
            if (w == 0.0) continue;
            const std::size_t base = s.corner[16 * l + c];
            for (int f = 0; f < F; ++f) grads.add(base + f, w * dfeat[l * F + f]);
        }
}

void Field4D::query_partials(const Vec3& x, double t, double hs, double ht,
                             double partials[4][3]) const {
    Scratch s;
    double plus[3], minus[3];
    for (int a = 0; a < 3; ++a) {
        Vec3 xp = x, xm = x;
        xp[a] += hs;
        xm[a] -= hs;
        query(xp, t, plus, s);
        query(xm, t, minus, s);
        for (int o = 0; o < cfg_.output_dim; ++o)
            partials[a][o] = (plus[o] - minus[o]) / (2.0 * hs);
    }
    query(x, t + ht, plus, s);
    query(x, t - ht, minus, s);
    for (int o = 0; o < cfg_.output_dim; ++o)
        partials[3][o] = (plus[o] - minus[o]) / (2.0 * ht);
}

void Field4D::backprop_partials(const Vec3& x, double t, double hs, double ht,
                                const double dL_dpartials[4][3], GradBuffer& grads) const {
    Scratch s;
    double d[3];
    for (int a = 0; a < 3; ++a) {
        bool any = false;
        for (int o = 0; o < cfg_.output_dim; ++o) {
            d[o] = dL_dpartials[a][o] / (2.0 * hs);
            any = any || d[o] != 0.0;
        }
        if (!any) continue;
        Vec3 xp = x, xm = x;
        xp[a] += hs;
        xm[a] -= hs;
        backprop(xp, t, d, grads, s);
        for (int o = 0; o < cfg_.output_dim; ++o) d[o] = -d[o];
        backprop(xm, t, d, grads, s);
    }
    bool any = false;
    for (int o = 0; o < cfg_.output_dim; ++o) {
        d[o] = dL_dpartials[3][o] / (2.0 * ht);
        any = any || d[o] != 0.0;
    }
    if (any) {
        backprop(x, t + ht, d, grads, s);
        for (int o = 0; o < cfg_.output_dim; ++o) d[o] = -d[o];
        backprop(x, t - ht, d, grads, s);
    }
}

void sample_to_mac(const VectorField4& field, double t, MacGrid& out) {
#pragma omp parallel for schedule(static) num_threads(num_threads())
    for (int k = 0; k < out.nz; ++k)
        for (int j = 0; j < out.ny; ++j)
            for (int i = 0; i <= out.nx; ++i)
                out.u[out.uidx(i, j, k)] = field.velocity(out.uface_center(i, j, k), t).x;
#pragma omp parallel for schedule(static) num_threads(num_threads())
    for (int k = 0; k < out.nz; ++k)
        for (int j = 0; j <= out.ny; ++j)
            for (int i = 0; i < out.nx; ++i)
                out.v[out.vidx(i, j, k)] = field.velocity(out.vface_center(i, j, k), t).y;
#pragma omp parallel for schedule(static) num_threads(num_threads())
    for (int k = 0; k <= out.nz; ++k)
        for (int j = 0; j < out.ny; ++j)
            for (int i = 0; i < out.nx; ++i)
                out.w[out.widx(i, j, k)] = field.velocity(out.wface_center(i, j, k), t).z;
}

void Field4D::save(std::ostream& os) const {
    write_u32(os, (std::uint32_t)levels_.size());
    for (const Level4D& l : levels_) {
        write_u32(os, (std::uint32_t)l.nx);
        write_u32(os, (std::uint32_t)l.ny);
        write_u32(os, (std::uint32_t)l.nz);
        write_u32(os, (std::uint32_t)l.nt);
    }
    write_u32(os, (std::uint32_t)cfg_.features_per_vertex);
    write_u32(os, (std::uint32_t)cfg_.output_dim);
    std::vector<float> tmp(params_.begin(), params_.end());
    write_f32_array(os, tmp.data(), tmp.size());
}

void Field4D::load(std::istream& is) {
    const std::uint32_t nl = read_u32(is);
    if (nl != levels_.size()) throw std::runtime_error("checkpoint level count mismatch");
    for (const Level4D& l : levels_) {
        if (read_u32(is) != (std::uint32_t)l.nx || read_u32(is) != (std::uint32_t)l.ny ||
            read_u32(is) != (std::uint32_t)l.nz || read_u32(is) != (std::uint32_t)l.nt)
            throw std::runtime_error("checkpoint resolution mismatch");
    }
    if (read_u32(is) != (std::uint32_t)cfg_.features_per_vertex ||
        read_u32(is) != (std::uint32_t)cfg_.output_dim)
        throw std::runtime_error("checkpoint shape mismatch");
    std::vector<float> tmp(params_.size());
    read_f32_array(is, tmp.data(), tmp.size());
    if (!is.good()) throw std::runtime_error("truncated checkpoint");
    std::copy(tmp.begin(), tmp.end(), params_.begin());
}

void save_checkpoint(const std::string& path, const Field4D& sigma, const Field4D& vel,
                     const double radiance[3]) {
    std::ofstream os(path, std::ios::binary);
    if (!os.good()) throw std::runtime_error("cannot write checkpoint: " + path);
    os.write("HYF1", 4);
    write_u32(os, 1);  // version
    sigma.save(os);
    vel.save(os);
    for (int c = 0; c < 3; ++c) write_f32(os, (float)radiance[c]);
    if (!os.good()) throw std::runtime_error("checkpoint write failed: " + path);
}

void load_checkpoint(const std::string& path, Field4D& sigma, Field4D& vel, double radiance[3]) {
    std::ifstream is(path, std::ios::binary);
    if (!is.good()) throw std::runtime_error("cannot read checkpoint: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is.good() || std::string(magic, 4) != "HYF1")
        throw std::runtime_error("bad checkpoint magic: " + path);
    if (read_u32(is) != 1) throw std::runtime_error("unsupported checkpoint version");
    sigma.load(is);
    vel.load(is);
    for (int c = 0; c < 3; ++c) radiance[c] = read_f32(is);
}

}  // namespace hyfluid
