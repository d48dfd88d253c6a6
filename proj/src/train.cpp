#include "hyfluid/train.h"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "hyfluid/render.h"

namespace hyfluid {

namespace fs = std::filesystem;

void TrainConfig::validate() const {
    if (stage1_iters < 0 || stage2_iters < 0 || stage3_iters < 0)
        throw std::invalid_argument("stage iteration counts must be non-negative");
    if (ray_batch <= 0 || point_batch <= 0 || samples_per_ray <= 0)
        throw std::invalid_argument("batch sizes must be positive");
    if (lr <= 0.0) throw std::invalid_argument("learning rate must be positive");
    if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1 || eps <= 0)
        throw std::invalid_argument("invalid Adam hyperparameters");
    if (proj_res < 2) throw std::invalid_argument("proj_res must be >= 2");
    weights.validate();
}

void AdamState::resize(std::size_t n) {
    m.assign(n, 0.0);
    v.assign(n, 0.0);
    is_active.assign(n, 0);
    active.clear();
    step = 0;
}

void adam_step(std::vector<double>& params, const GradBuffer& grads, AdamState& st, double lr,
               double beta1, double beta2, double eps, double grad_scale) {
    if (params.size() != st.m.size() || params.size() != grads.g.size())
        throw std::invalid_argument("adam_step: shape mismatch");
    for (std::size_t i : grads.touched) {
        if (!std::isfinite(grads.g[i]))
            throw std::runtime_error("adam_step: non-finite gradient at parameter " +
                                     std::to_string(i));
        if (!st.is_active[i]) {
            st.is_active[i] = 1;
            st.active.push_back(i);
        }
    }
    ++st.step;
    // parameters outside the active set have g = m = v = 0, so the standard
    // update leaves them bit-identical; skipping them is exact
    const double c1 = 1.0 - std::pow(beta1, (double)st.step);
    const double c2 = 1.0 - std::pow(beta2, (double)st.step);
    for (std::size_t i : st.active) {
        const double g = grad_scale * grads.get(i);
        st.m[i] = beta1 * st.m[i] + (1.0 - beta1) * g;
        st.v[i] = beta2 * st.v[i] + (1.0 - beta2) * g * g;
        params[i] -= lr * (st.m[i] / c1) / (std::sqrt(st.v[i] / c2) + eps);
    }
}

void write_loss_csv(const std::string& path, const std::vector<LossRow>& rows) {
    std::ofstream os(path);
    if (!os.good()) throw std::runtime_error("cannot write " + path);
    os << "stage,iteration,render,density,proj,laminar,total,seconds\n";
    for (const auto& r : rows)
        os << r.stage << ',' << r.iter << ',' << r.render << ',' << r.density << ',' << r.proj
           << ',' << r.laminar << ',' << r.total << ',' << r.seconds << '\n';
}

void zero_features(Field4D& f) {
    std::fill(f.params().begin(), f.params().begin() + f.feature_param_count(), 0.0);
}

namespace {

struct StageContext {
    const TrainConfig& cfg;
    const LoadedDataset& ds;
    std::mt19937_64 rng;
    RenderConfig rc;
    std::chrono::steady_clock::time_point start;
    std::vector<LossRow> local_log;
    std::vector<LossRow>* log;

    StageContext(const TrainConfig& c, const LoadedDataset& d, int stage,
                 std::vector<LossRow>* l)
        : cfg(c), ds(d), rng(c.seed ^ (0x9e3779b97f4a7c15ULL * (std::uint64_t)stage)), log(l) {
        c.validate();
        d.manifest.validate();
        rc.samples_per_ray = c.samples_per_ray;
        rc.jitter = true;
        start = std::chrono::steady_clock::now();
        if (!l) log = &local_log;
    }

    double frame_time_of(int f) const { return ds.frame_time(f); }

    std::pair<int, int> pick_view() {
        const int cam = ds.train_cams[rng() % ds.train_cams.size()];
        const int frame = (int)(rng() % (std::uint64_t)ds.manifest.num_frames);
        return {cam, frame};
    }

    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }

    void record(int stage, int it, int iters, const LossRow& partial) {
        if (it % cfg.log_interval != 0 && it != iters - 1) return;
        LossRow r = partial;
        r.stage = stage;
        r.iter = it;
        r.seconds = elapsed();
        log->push_back(r);
    }
};

void maybe_mkdir(const std::string& dir) {
    if (!dir.empty()) fs::create_directories(dir);
}

}  // namespace

void train_stage1(const LoadedDataset& ds, Field4D& sigma, double radiance[3],
                  const TrainConfig& cfg, std::vector<LossRow>* log) {
    StageContext ctx(cfg, ds, 1, log);
    maybe_mkdir(cfg.out_dir);
    GradBuffer sg, rg;
    sg.resize(sigma.num_params());
    rg.resize(3);
    AdamState s_adam, r_adam;
    s_adam.resize(sigma.num_params());
    r_adam.resize(3);
    std::vector<double> rad(radiance, radiance + 3);
    Field4D dummy_vel(placeholder_velocity_config(), 0);

    auto snapshot = [&](const std::string& name) {
        if (cfg.out_dir.empty()) return;
        for (int c = 0; c < 3; ++c) radiance[c] = rad[c];
        save_checkpoint((fs::path(cfg.out_dir) / name).string(), sigma, dummy_vel, radiance);
    };

    for (int it = 0; it < cfg.stage1_iters; ++it) {
        sg.clear();
        rg.clear();
        auto [cam, frame] = ctx.pick_view();
        const auto rays = generate_rays(ds.manifest.cameras[cam].cam, ctx.frame_time_of(frame),
                                        cfg.ray_batch, ctx.rng);
        double dLrad[3] = {0, 0, 0};
        const double L =
            rendering_loss(rays, ds.frames[cam][frame], sigma, rad.data(), ctx.rc, sg, dLrad);
        const double total = cfg.weights.render * L;
        if (!std::isfinite(total)) {
            snapshot("stage1_diverged.hyf");
            throw std::runtime_error("stage 1 diverged at iteration " + std::to_string(it));
        }
        adam_step(sigma.params(), sg, s_adam, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps,
                  cfg.weights.render);
        for (int c = 0; c < 3; ++c) rg.add(c, dLrad[c]);
        adam_step(rad, rg, r_adam, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps, cfg.weights.render);
        LossRow row;
        row.render = L;
        row.total = total;
        ctx.record(1, it, cfg.stage1_iters, row);
        if (cfg.checkpoint_interval > 0 && (it + 1) % cfg.checkpoint_interval == 0)
            snapshot("stage1_latest.hyf");
    }
    for (int c = 0; c < 3; ++c) radiance[c] = rad[c];
    if (!cfg.out_dir.empty()) write_loss_csv((fs::path(cfg.out_dir) / "loss_stage1.csv").string(), *ctx.log);
}

void train_stage2(const LoadedDataset& ds, Field4D& sigma, double radiance[3], Field4D& velocity,
                  const TrainConfig& cfg, std::vector<LossRow>* log) {
    StageContext ctx(cfg, ds, 2, log);
    maybe_mkdir(cfg.out_dir);
    GradBuffer sg, vg, rg, ts, tv;
    sg.resize(sigma.num_params());
    vg.resize(velocity.num_params());
    rg.resize(3);
    ts.resize(sigma.num_params());
    tv.resize(velocity.num_params());
    AdamState s_adam, v_adam, r_adam;
    s_adam.resize(sigma.num_params());
    v_adam.resize(velocity.num_params());
    r_adam.resize(3);
    std::vector<double> rad(radiance, radiance + 3);
    VelocityModel model{&velocity, nullptr};

    auto snapshot = [&](const std::string& name) {
        if (cfg.out_dir.empty()) return;
        for (int c = 0; c < 3; ++c) radiance[c] = rad[c];
        save_checkpoint((fs::path(cfg.out_dir) / name).string(), sigma, velocity, radiance);
    };

    for (int it = 0; it < cfg.stage2_iters; ++it) {
        sg.clear();
        vg.clear();
        rg.clear();
        auto [cam, frame] = ctx.pick_view();
        const auto rays = generate_rays(ds.manifest.cameras[cam].cam, ctx.frame_time_of(frame),
                                        cfg.ray_batch, ctx.rng);
        double dLrad[3] = {0, 0, 0};
        LossRow row;
        row.render =
            rendering_loss(rays, ds.frames[cam][frame], sigma, rad.data(), ctx.rc, sg, dLrad);
        sg.scale_touched(cfg.weights.render);

        const PointBatch pb = sample_point_batch(cfg.point_batch, ctx.rng);
        if (cfg.weights.density > 0) {
            ts.clear();
            tv.clear();
            row.density = density_transport_loss(sigma, model, pb, &ts, &tv, nullptr);
            sg.merge_scaled(ts, cfg.weights.density);
            vg.merge_scaled(tv, cfg.weights.density);
        }
        if (cfg.weights.proj > 0) {
            tv.clear();
            const double t = ctx.frame_time_of((int)(ctx.rng() % (std::uint64_t)ds.manifest.num_frames));
            row.proj = projection_loss(model, {t}, cfg.proj_res, cfg.solver, cfg.bc, &tv, nullptr);
            vg.merge_scaled(tv, cfg.weights.proj);
        }
        if (cfg.weights.laminar > 0) {
            tv.clear();
            row.laminar = laminar_loss(sigma, model, pb, cfg.weights.gamma, &tv, nullptr);
            vg.merge_scaled(tv, cfg.weights.laminar);
        }
        row.total = cfg.weights.render * row.render + cfg.weights.density * row.density +
                    cfg.weights.proj * row.proj + cfg.weights.laminar * row.laminar;
        if (!std::isfinite(row.total)) {
            snapshot("stage2_diverged.hyf");
            throw std::runtime_error("stage 2 diverged at iteration " + std::to_string(it));
        }
        adam_step(sigma.params(), sg, s_adam, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
        adam_step(velocity.params(), vg, v_adam, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
        for (int c = 0; c < 3; ++c) rg.add(c, dLrad[c]);
        adam_step(rad, rg, r_adam, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps, cfg.weights.render);
        ctx.record(2, it, cfg.stage2_iters, row);
        if (cfg.checkpoint_interval > 0 && (it + 1) % cfg.checkpoint_interval == 0)
            snapshot("stage2_latest.hyf");
    }
    for (int c = 0; c < 3; ++c) radiance[c] = rad[c];
    if (!cfg.out_dir.empty()) write_loss_csv((fs::path(cfg.out_dir) / "loss_stage2.csv").string(), *ctx.log);
}

void train_stage3(const LoadedDataset& ds, Field4D& sigma, double radiance[3],
                  const Field4D& velocity, VortexParticleSet& particles, const TrainConfig& cfg,
                  std::vector<LossRow>* log) {
    StageContext ctx(cfg, ds, 3, log);
    maybe_mkdir(cfg.out_dir);
    const std::size_t P = particles.intensity.size();
    GradBuffer sg, rg, ig, ts;
    sg.resize(sigma.num_params());
    rg.resize(3);
    ig.resize(P);
    ts.resize(sigma.num_params());
    AdamState s_adam, r_adam, i_adam;
    s_adam.resize(sigma.num_params());
    r_adam.resize(3);
    i_adam.resize(P);
    std::vector<double> rad(radiance, radiance + 3);
    VelocityModel model{&velocity, &particles};
    std::vector<double> dI_t(P), dI_p(P), dI_l(P);

    auto snapshot = [&](const std::string& name) {
        if (cfg.out_dir.empty()) return;
        for (int c = 0; c < 3; ++c) radiance[c] = rad[c];
        save_checkpoint((fs::path(cfg.out_dir) / name).string(), sigma, velocity, radiance);
        particles.save((fs::path(cfg.out_dir) / "particles_latest.vtx").string());
    };

    for (int it = 0; it < cfg.stage3_iters; ++it) {
        sg.clear();
        rg.clear();
        ig.clear();
        std::fill(dI_t.begin(), dI_t.end(), 0.0);
        std::fill(dI_p.begin(), dI_p.end(), 0.0);
        std::fill(dI_l.begin(), dI_l.end(), 0.0);
        auto [cam, frame] = ctx.pick_view();
        const auto rays = generate_rays(ds.manifest.cameras[cam].cam, ctx.frame_time_of(frame),
                                        cfg.ray_batch, ctx.rng);
        double dLrad[3] = {0, 0, 0};
        LossRow row;
        row.render =
            rendering_loss(rays, ds.frames[cam][frame], sigma, rad.data(), ctx.rc, sg, dLrad);
        sg.scale_touched(cfg.weights.render);

        const PointBatch pb = sample_point_batch(cfg.point_batch, ctx.rng);
        if (cfg.weights.density > 0) {
            ts.clear();
            row.density = density_transport_loss(sigma, model, pb, &ts, nullptr, &dI_t);
            sg.merge_scaled(ts, cfg.weights.density);
        }
        if (cfg.weights.proj > 0) {
            const double t = ctx.frame_time_of((int)(ctx.rng() % (std::uint64_t)ds.manifest.num_frames));
            row.proj = projection_loss(model, {t}, cfg.proj_res, cfg.solver, cfg.bc, nullptr, &dI_p);
        }
        if (cfg.weights.laminar > 0)
            row.laminar = laminar_loss(sigma, model, pb, cfg.weights.gamma, nullptr, &dI_l);
        row.total = cfg.weights.render * row.render + cfg.weights.density * row.density +
                    cfg.weights.proj * row.proj + cfg.weights.laminar * row.laminar;
        if (!std::isfinite(row.total)) {
            snapshot("stage3_diverged.hyf");
            throw std::runtime_error("stage 3 diverged at iteration " + std::to_string(it));
        }
        for (std::size_t p = 0; p < P; ++p) {
            const double g = cfg.weights.density * dI_t[p] + cfg.weights.proj * dI_p[p] +
                             cfg.weights.laminar * dI_l[p];
            if (g != 0.0) ig.add(p, g);
        }
        adam_step(sigma.params(), sg, s_adam, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
        adam_step(particles.intensity, ig, i_adam, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
        for (int c = 0; c < 3; ++c) rg.add(c, dLrad[c]);
        adam_step(rad, rg, r_adam, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps, cfg.weights.render);
        ctx.record(3, it, cfg.stage3_iters, row);
        if (cfg.checkpoint_interval > 0 && (it + 1) % cfg.checkpoint_interval == 0)
            snapshot("stage3_latest.hyf");
    }
    for (int c = 0; c < 3; ++c) radiance[c] = rad[c];
    if (!cfg.out_dir.empty()) write_loss_csv((fs::path(cfg.out_dir) / "loss_stage3.csv").string(), *ctx.log);
}

}  // namespace hyfluid
