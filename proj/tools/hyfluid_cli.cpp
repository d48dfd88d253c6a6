#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hyfluid/config.h"
#include "hyfluid/dataset.h"
#include "hyfluid/metrics.h"
#include "hyfluid/reference.h"
#include "hyfluid/render.h"
#include "hyfluid/train.h"

namespace fs = std::filesystem;
using namespace hyfluid;

namespace {

struct LoadedCheckpoint {
    Field4D sigma;
    Field4D velocity;
    bool has_velocity = false;
    double radiance[3] = {0, 0, 0};
};

// Stage-1 checkpoints carry a placeholder velocity grid; try the full layout
// first and fall back.
LoadedCheckpoint load_any_checkpoint(const std::string& path, const RunConfig& cfg) {
    LoadedCheckpoint c;
    c.sigma = Field4D(cfg.sigma_grid, cfg.train.seed);
    try {
        c.velocity = Field4D(cfg.vel_grid, cfg.train.seed + 1);
        load_checkpoint(path, c.sigma, c.velocity, c.radiance);
        c.has_velocity = true;
    } catch (const std::runtime_error&) {
        c.velocity = Field4D(placeholder_velocity_config(), 0);
        load_checkpoint(path, c.sigma, c.velocity, c.radiance);
        c.has_velocity = false;
    }
    return c;
}

SimConfig resim_config(const RunConfig& cfg, const DatasetManifest& m) {
    SimConfig sc = cfg.gen.sim;
    sc.num_frames = m.num_frames;
    sc.dt = m.num_frames > 1 ? 1.0 / (m.num_frames - 1) : 1.0;  // normalized time per frame
    return sc;
}

void write_image_pair(const std::string& stem, const Image& img) {
    write_imgf(stem + ".imgf", img);
    write_ppm(stem + ".ppm", img);
}

int cmd_gen_data(const RunConfig& cfg, const std::string& out) {
    const DatasetManifest m = generate_dataset(cfg.gen, out);
    std::printf("wrote dataset: %d cameras, %d frames -> %s\n", (int)m.cameras.size(),
                m.num_frames, out.c_str());
    return 0;
}

int cmd_train(RunConfig cfg, const std::string& data, const std::string& out, int stage,
              bool paper_scale) {
    if (paper_scale) {
        cfg.train.stage1_iters = 200000;
        cfg.train.stage2_iters = 50000;
        cfg.train.stage3_iters = 5000;
        cfg.train.proj_res = 128;
        for (GridConfig* g : {&cfg.sigma_grid, &cfg.vel_grid}) {
            g->base_res = 16;
            g->finest_res = 256;
            g->time_res_cap = 128;
            g->hash_cap = 1u << 22;
        }
    }
    cfg.train.out_dir = out;
    const LoadedDataset ds = load_dataset((fs::path(data) / "manifest.json").string());
    fs::create_directories(out);
    const int F = ds.manifest.num_frames;

    auto run1 = [&]() {
        Field4D sigma(cfg.sigma_grid, cfg.train.seed);
        double rad[3] = {0.5, 0.5, 0.5};
        train_stage1(ds, sigma, rad, cfg.train);
        Field4D placeholder(placeholder_velocity_config(), 0);
        save_checkpoint((fs::path(out) / "stage1.hyf").string(), sigma, placeholder, rad);
        std::printf("stage 1 done -> stage1.hyf\n");
    };
    auto run2 = [&]() {
        RunConfig c1 = cfg;  // stage-1 checkpoint stores the placeholder grid
        c1.vel_grid = placeholder_velocity_config();
        LoadedCheckpoint ck = load_any_checkpoint((fs::path(out) / "stage1.hyf").string(), c1);
        Field4D velocity(cfg.vel_grid, cfg.train.seed + 1);
        zero_features(velocity);
        train_stage2(ds, ck.sigma, ck.radiance, velocity, cfg.train);
        save_checkpoint((fs::path(out) / "stage2.hyf").string(), ck.sigma, velocity, ck.radiance);
        std::printf("stage 2 done -> stage2.hyf\n");
    };
    auto run3 = [&]() {
        LoadedCheckpoint ck = load_any_checkpoint((fs::path(out) / "stage2.hyf").string(), cfg);
        if (!ck.has_velocity) throw std::invalid_argument("stage2.hyf has no velocity field");
        FieldVelocity u_base(ck.velocity);
        FieldDensity dens(ck.sigma);
        std::mt19937_64 rng(cfg.train.seed + 3);
        VortexParticleSet particles = seed_particles(u_base, &dens, cfg.train.vortex, F, rng);
        precompute_trajectories(particles, u_base, cfg.train.vortex);
        train_stage3(ds, ck.sigma, ck.radiance, ck.velocity, particles, cfg.train);
        save_checkpoint((fs::path(out) / "stage3.hyf").string(), ck.sigma, ck.velocity,
                        ck.radiance);
        particles.save((fs::path(out) / "particles.vtx").string());
        std::printf("stage 3 done -> stage3.hyf + particles.vtx\n");
    };

    if (stage == 0 || stage == 1) run1();
    if (stage == 0 || stage == 2) run2();
    if (stage == 0 || stage == 3) run3();
    return 0;
}

int cmd_render(const RunConfig& cfg, const std::string& data, const std::string& ckpt,
               const std::string& out, int camera, int supersample) {
    const DatasetManifest m = DatasetManifest::load((fs::path(data) / "manifest.json").string());
    const LoadedCheckpoint ck = load_any_checkpoint(ckpt, cfg);
    if (camera < 0 || camera >= (int)m.cameras.size())
        throw std::invalid_argument("camera index out of range");
    fs::create_directories(out);
    RenderConfig rc;
    rc.samples_per_ray = cfg.gen.samples_per_ray;
    rc.jitter = false;
    rc.supersample = supersample;
    FieldDensity dens(ck.sigma);
    for (int f = 0; f < m.num_frames; ++f) {
        const double t = m.num_frames > 1 ? (double)f / (m.num_frames - 1) : 0.0;
        Image img = render_image(m.cameras[camera].cam, t, dens, ck.radiance, rc);
        char stem[64];
        std::snprintf(stem, sizeof(stem), "render_%04d", f);
        write_image_pair((fs::path(out) / stem).string(), img);
    }
    std::printf("rendered %d frames from camera %d -> %s\n", m.num_frames, camera, out.c_str());
    return 0;
}

int run_resim(const RunConfig& cfg, const std::string& data, const std::string& ckpt,
              const std::string& particles_path, double vortex_scale, const std::string& out,
              int camera) {
    const DatasetManifest m = DatasetManifest::load((fs::path(data) / "manifest.json").string());
    const LoadedCheckpoint ck = load_any_checkpoint(ckpt, cfg);
    if (!ck.has_velocity) throw std::invalid_argument("checkpoint has no velocity field");
    VortexParticleSet particles;
    VelocityModel model{&ck.velocity, nullptr};
    if (!particles_path.empty()) {
        particles = VortexParticleSet::load(particles_path);
        particles.scale_intensities(vortex_scale);
        model.vortex = &particles;
    }
    FieldDensity dens(ck.sigma);
    ModelVelocityField vel(model);
    const SimConfig sc = resim_config(cfg, m);
    DensitySequence seq = resimulate(dens, vel, sc);
    fs::create_directories(out);
    save_density_sequence(out, "resim", seq);
    if (camera >= 0) {
        if (camera >= (int)m.cameras.size())
            throw std::invalid_argument("camera index out of range");
        RenderConfig rc;
        rc.samples_per_ray = cfg.gen.samples_per_ray;
        GridSequenceDensity seq_dens(&seq);
        for (int f = 0; f < m.num_frames; ++f) {
            const double t = m.num_frames > 1 ? (double)f / (m.num_frames - 1) : 0.0;
            Image img = render_image(m.cameras[camera].cam, t, seq_dens, ck.radiance, rc);
            char stem[64];
            std::snprintf(stem, sizeof(stem), "resim_render_%04d", f);
            write_image_pair((fs::path(out) / stem).string(), img);
        }
    }
    std::printf("re-simulated %d frames -> %s\n", (int)seq.frames.size(), out.c_str());
    return 0;
}

int cmd_predict(const RunConfig& cfg, const std::string& data, const std::string& ckpt,
                const std::string& out, int steps) {
    const DatasetManifest m = DatasetManifest::load((fs::path(data) / "manifest.json").string());
    const LoadedCheckpoint ck = load_any_checkpoint(ckpt, cfg);
    if (!ck.has_velocity) throw std::invalid_argument("checkpoint has no velocity field");
    const SimConfig sc = resim_config(cfg, m);
    FieldVelocity vel_field(ck.velocity);
    MacGrid vel0(sc.res, sc.res, sc.res);
    sample_to_mac(vel_field, 1.0, vel0);
    CellGrid sigma0(sc.res, sc.res, sc.res);
    FieldDensity dens(ck.sigma);
    for (int k = 0; k < sc.res; ++k)
        for (int j = 0; j < sc.res; ++j)
            for (int i = 0; i < sc.res; ++i)
                sigma0.at(i, j, k) = dens.density(sigma0.cell_center(i, j, k), 1.0);
    auto [seq, vels] = predict_future(vel0, sigma0, steps, sc);
    fs::create_directories(out);
    write_grd((fs::path(out) / "predict_start.grd").string(), sigma0);
    save_density_sequence(out, "predict", seq);
    save_velocity_sequence(out, "predict_vel", vels, sc.dt);
    std::printf("predicted %d future frames -> %s\n", steps, out.c_str());
    return 0;
}

std::vector<std::string> list_images(const std::string& dir) {
    std::vector<std::string> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        const std::string ext = e.path().extension().string();
        if (ext == ".imgf" || ext == ".ppm") out.push_back(e.path().string());
    }
    std::sort(out.begin(), out.end());
    // prefer .imgf when both formats are present for the same stem
    std::vector<std::string> dedup;
    for (const auto& p : out) {
        if (!dedup.empty() && fs::path(dedup.back()).stem() == fs::path(p).stem()) continue;
        dedup.push_back(p);
    }
    return dedup;
}

int cmd_eval(const std::string& pred_dir, const std::string& gt_dir, const std::string& pred_seq,
             const std::string& gt_seq, const std::string& vel_seq, const std::string& csv) {
    std::vector<FrameMetrics> rows;
    if (!pred_dir.empty()) {
        const auto pred = list_images(pred_dir);
        const auto gt = list_images(gt_dir);
        if (pred.size() != gt.size() || pred.empty())
            throw std::invalid_argument("image directories must contain matching frame counts");
        double psum = 0, ssum = 0;
        for (std::size_t f = 0; f < pred.size(); ++f) {
            FrameMetrics r;
            r.frame = (int)f;
            const Image a = load_frame(pred[f]), b = load_frame(gt[f]);
            r.psnr = psnr(a, b);
            r.ssim = ssim(a, b);
            rows.push_back(r);
            psum += r.psnr;
            ssum += r.ssim;
        }
        std::printf("images: mean PSNR %.4f dB, mean SSIM %.6f over %zu frames\n",
                    psum / pred.size(), ssum / pred.size(), pred.size());
    }
    if (!pred_seq.empty()) {
        DensitySequence pred = load_density_sequence(pred_seq);
        DensitySequence gt = load_density_sequence(gt_seq);
        std::vector<MacGrid> vels;
        if (!vel_seq.empty()) vels = load_velocity_sequence(vel_seq);
        const std::size_t n = std::min(pred.frames.size(), gt.frames.size());
        if (n == 0) throw std::invalid_argument("empty density sequences");
        double esum = 0, wsum = 0;
        int wcount = 0;
        for (std::size_t f = 0; f < n; ++f) {
            FrameMetrics r;
            r.frame = (int)f;
            r.si_rmse = si_rmse(pred.frames[f], gt.frames[f]);
            if (!vels.empty() && f + 1 < n && f < vels.size()) {
                r.warp_error = warp_error(pred.frames[f], gt.frames[f + 1], vels[f], gt.dt);
                wsum += r.warp_error;
                ++wcount;
            }
            esum += r.si_rmse;
            rows.push_back(r);
        }
        std::printf("density: mean si-RMSE %.6f over %zu frames", esum / n, n);
        if (wcount > 0) std::printf(", mean warp error %.6f", wsum / wcount);
        std::printf("\n");
    }
    if (rows.empty()) throw std::invalid_argument("nothing to evaluate; pass --pred or --pred-seq");
    if (!csv.empty()) write_metrics_csv(csv, rows);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"differentiable fluid fields: reconstruction, re-simulation, and editing"};
    app.require_subcommand(1);
    std::string config_path, data = "data", out = "out", ckpt, particles, pred_dir, gt_dir,
                pred_seq, gt_seq, vel_seq, csv;
    int stage = 0, camera = -1, steps = 10, supersample = 1;
    double vortex_scale = 1.0;
    bool paper_scale = false;

    auto add_config = [&](CLI::App* c) { c->add_option("--config", config_path, "key=value run configuration"); };

    CLI::App* gen = app.add_subcommand("gen-data", "simulate a plume and write the dataset");
    add_config(gen);
    gen->add_option("--out", out, "dataset directory");

    CLI::App* train = app.add_subcommand("train", "run the training stages");
    add_config(train);
    train->add_option("--data", data, "dataset directory");
    train->add_option("--out", out, "checkpoint/log directory");
    train->add_option("--stage", stage, "stage to run (1-3); 0 = all")->check(CLI::Range(0, 3));
    train->add_flag("--paper-scale", paper_scale, "full-scale iteration counts and grids");

    CLI::App* render = app.add_subcommand("render", "render every frame from one camera");
    add_config(render);
    render->add_option("--data", data, "dataset directory");
    render->add_option("--checkpoint", ckpt, "trained checkpoint")->required();
    render->add_option("--out", out, "output directory");
    render->add_option("--camera", camera, "camera index")->required();
    render->add_option("--supersample", supersample, "rays per pixel axis");

    CLI::App* resim = app.add_subcommand("resim", "advect the learned density by the learned flow");
    add_config(resim);
    resim->add_option("--data", data, "dataset directory");
    resim->add_option("--checkpoint", ckpt, "trained checkpoint")->required();
    resim->add_option("--particles", particles, "vortex particle file");
    resim->add_option("--out", out, "output directory");
    resim->add_option("--camera", camera, "also render this camera");

    CLI::App* predict = app.add_subcommand("predict", "simulate past the observed range");
    add_config(predict);
    predict->add_option("--data", data, "dataset directory");
    predict->add_option("--checkpoint", ckpt, "trained checkpoint")->required();
    predict->add_option("--out", out, "output directory");
    predict->add_option("--steps", steps, "future steps");

    CLI::App* edit = app.add_subcommand("edit", "re-simulate with scaled vortex intensities");
    add_config(edit);
    edit->add_option("--data", data, "dataset directory");
    edit->add_option("--checkpoint", ckpt, "trained checkpoint")->required();
    edit->add_option("--particles", particles, "vortex particle file")->required();
    edit->add_option("--vortex-scale", vortex_scale, "intensity multiplier")->required();
    edit->add_option("--out", out, "output directory");
    edit->add_option("--camera", camera, "also render this camera");

    CLI::App* eval = app.add_subcommand("eval", "compare renders or density sequences");
    eval->add_option("--pred", pred_dir, "predicted image directory");
    eval->add_option("--gt", gt_dir, "ground-truth image directory");
    eval->add_option("--pred-seq", pred_seq, "predicted density manifest");
    eval->add_option("--gt-seq", gt_seq, "ground-truth density manifest");
    eval->add_option("--vel-seq", vel_seq, "velocity manifest for warp error");
    eval->add_option("--csv", csv, "metrics CSV output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        RunConfig cfg;
        if (!config_path.empty()) cfg = RunConfig::load(config_path);
        if (gen->parsed()) return cmd_gen_data(cfg, out);
        if (train->parsed()) return cmd_train(cfg, data, out, stage, paper_scale);
        if (render->parsed()) return cmd_render(cfg, data, ckpt, out, camera, supersample);
        if (resim->parsed()) return run_resim(cfg, data, ckpt, particles, 1.0, out, camera);
        if (edit->parsed()) return run_resim(cfg, data, ckpt, particles, vortex_scale, out, camera);
        if (predict->parsed()) return cmd_predict(cfg, data, ckpt, out, steps);
        if (eval->parsed()) return cmd_eval(pred_dir, gt_dir, pred_seq, gt_seq, vel_seq, csv);
    } catch (const SolverFailure& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        const std::string msg = e.what();
        const bool numerical = msg.find("diverged") != std::string::npos ||
                               msg.find("non-finite") != std::string::npos;
        std::fprintf(stderr, "%s: %s\n", numerical ? "numerical failure" : "error", msg.c_str());
        return numerical ? 2 : 1;
    }
    return 1;
}
