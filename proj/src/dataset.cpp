#include "hyfluid/dataset.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "hyfluid/io.h"

namespace hyfluid {

namespace fs = std::filesystem;
using nlohmann::json;

void DatasetManifest::validate() const {
    if (num_frames < 1) throw std::invalid_argument("manifest: num_frames must be >= 1");
    if (frame_dt <= 0.0) throw std::invalid_argument("manifest: frame_dt must be positive");
    if (cameras.empty()) throw std::invalid_argument("manifest: no cameras");
    int train = 0, test = 0;
    for (const auto& c : cameras) {
        c.cam.validate();
        if ((int)c.frames.size() != num_frames)
            throw std::invalid_argument("manifest: camera frame count mismatch");
        (c.train ? train : test)++;
    }
    if (train < 1 || test < 1)
        throw std::invalid_argument("manifest: need at least one train and one held-out camera");
}

void DatasetManifest::save(const std::string& path) const {
    json j;
    j["num_frames"] = num_frames;
    j["frame_dt"] = frame_dt;
    j["sigma_scale"] = sigma_scale;
    if (!density_manifest.empty()) j["density_manifest"] = density_manifest;
    if (!velocity_manifest.empty()) j["velocity_manifest"] = velocity_manifest;
    j["cameras"] = json::array();
    for (const auto& c : cameras) {
        json jc;
        jc["train"] = c.train;
        jc["width"] = c.cam.width;
        jc["height"] = c.cam.height;
        jc["fx"] = c.cam.fx;
        jc["fy"] = c.cam.fy;
        jc["cx"] = c.cam.cx;
        jc["cy"] = c.cam.cy;
        jc["t_near"] = c.cam.t_near;
        jc["t_far"] = c.cam.t_far;
        std::vector<double> rot;
        for (int r = 0; r < 3; ++r)
            for (int cc = 0; cc < 3; ++cc) rot.push_back(c.cam.rot[r][cc]);
        jc["rotation"] = rot;  // row-major world-from-camera
        jc["position"] = {c.cam.position.x, c.cam.position.y, c.cam.position.z};
        jc["frames"] = c.frames;
        j["cameras"].push_back(std::move(jc));
    }
    std::ofstream os(path);
    if (!os.good()) throw std::runtime_error("cannot write " + path);
    os << j.dump(2) << "\n";
}

DatasetManifest DatasetManifest::load(const std::string& path) {
    std::ifstream is(path);
    if (!is.good()) throw std::runtime_error("cannot read " + path);
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error("manifest parse error in " + path + ": " + e.what());
    }
    DatasetManifest m;
    m.root = fs::path(path).parent_path().string();
    m.num_frames = j.at("num_frames").get<int>();
    m.frame_dt = j.at("frame_dt").get<double>();
    m.sigma_scale = j.value("sigma_scale", 1.0);
    m.density_manifest = j.value("density_manifest", std::string());
    m.velocity_manifest = j.value("velocity_manifest", std::string());
    for (const auto& jc : j.at("cameras")) {
        DatasetCamera c;
        c.train = jc.at("train").get<bool>();
        c.cam.width = jc.at("width").get<int>();
        c.cam.height = jc.at("height").get<int>();
        c.cam.fx = jc.at("fx").get<double>();
        c.cam.fy = jc.at("fy").get<double>();
        c.cam.cx = jc.at("cx").get<double>();
        c.cam.cy = jc.at("cy").get<double>();
        c.cam.t_near = jc.at("t_near").get<double>();
        c.cam.t_far = jc.at("t_far").get<double>();
        const auto rot = jc.at("rotation").get<std::vector<double>>();
        if (rot.size() != 9) throw std::runtime_error("manifest: rotation must have 9 entries");
        for (int r = 0; r < 3; ++r)
            for (int cc = 0; cc < 3; ++cc) c.cam.rot[r][cc] = rot[r * 3 + cc];
        const auto pos = jc.at("position").get<std::vector<double>>();
        if (pos.size() != 3) throw std::runtime_error("manifest: position must have 3 entries");
        c.cam.position = {pos[0], pos[1], pos[2]};
        c.frames = jc.at("frames").get<std::vector<std::string>>();
        m.cameras.push_back(std::move(c));
    }
    m.validate();
    return m;
}

Image load_frame(const std::string& path) {
    const std::string ext = fs::path(path).extension().string();
    if (ext == ".imgf") return read_imgf(path);
    if (ext == ".ppm") return read_ppm(path);
    throw std::runtime_error("unsupported image format: " + path);
}

LoadedDataset load_dataset(const std::string& manifest_path) {
    LoadedDataset d;
    d.manifest = DatasetManifest::load(manifest_path);
    const fs::path root = d.manifest.root;
    for (int c = 0; c < (int)d.manifest.cameras.size(); ++c) {
        const auto& cam = d.manifest.cameras[c];
        (cam.train ? d.train_cams : d.test_cams).push_back(c);
        std::vector<Image> imgs;
        imgs.reserve(cam.frames.size());
        for (const auto& f : cam.frames) {
            Image img = load_frame((root / f).string());
            if (img.width != cam.cam.width || img.height != cam.cam.height)
                throw std::runtime_error("frame size mismatch: " + f);
            imgs.push_back(std::move(img));
        }
        d.frames.push_back(std::move(imgs));
    }
    return d;
}

std::vector<Camera> arc_cameras(int count, double arc_degrees, double radius, double height,
                                double fov_y_rad, int width, int height_px) {
    const Vec3 target{0.5, 0.5, 0.5};
    std::vector<Camera> cams;
    for (int i = 0; i < count; ++i) {
        const double frac = count > 1 ? (double)i / (count - 1) - 0.5 : 0.0;
        const double a = frac * arc_degrees * M_PI / 180.0;
        const Vec3 eye{0.5 + radius * std::sin(a), height, 0.5 + radius * std::cos(a)};
        const double t_near = std::max(0.0, radius - 1.0);
        cams.push_back(look_at(eye, target, {0, 1, 0}, fov_y_rad, width, height_px, t_near,
                               radius + 1.0));
    }
    return cams;
}

DatasetManifest generate_dataset(const GenConfig& cfg, const std::string& out_dir) {
    SimConfig sim = cfg.sim;
    sim.num_frames = cfg.sim.num_frames + cfg.extra_frames;
    auto [density, velocity] = simulate_plume(sim);

    fs::create_directories(fs::path(out_dir) / "gt");
    save_density_sequence((fs::path(out_dir) / "gt").string(), "density", density);
    save_velocity_sequence((fs::path(out_dir) / "gt").string(), "velocity", velocity, sim.dt);

    DatasetManifest m;
    m.root = out_dir;
    m.num_frames = cfg.sim.num_frames;
    m.frame_dt = sim.dt;
    m.sigma_scale = cfg.sigma_scale;
    m.density_manifest = "gt/density_manifest.txt";
    m.velocity_manifest = "gt/velocity_manifest.txt";

    const auto cams = arc_cameras(cfg.num_cameras, cfg.arc_degrees, cfg.cam_radius,
                                  cfg.cam_height, cfg.fov_deg * M_PI / 180.0, cfg.image_size,
                                  cfg.image_size);
    RenderConfig rc;
    rc.samples_per_ray = cfg.samples_per_ray;
    rc.jitter = false;
    for (int c = 0; c < (int)cams.size(); ++c) {
        DatasetCamera dc;
        dc.cam = cams[c];
        dc.train = (c != cfg.held_out);
        char dirname[32];
        std::snprintf(dirname, sizeof(dirname), "cam%02d", c);
        fs::create_directories(fs::path(out_dir) / dirname);
        for (int f = 0; f < cfg.sim.num_frames; ++f) {
            GridSequenceDensity field(&density, cfg.sigma_scale);
            // the sequence holds observed + extra frames; pick frame f exactly
            const double t_seq = sim.num_frames > 1 ? (double)f / (sim.num_frames - 1) : 0.0;
            Image img = render_image(cams[c], t_seq, field, cfg.radiance, rc);
            char name[64];
            std::snprintf(name, sizeof(name), "%s/frame_%04d.imgf", dirname, f);
            write_imgf((fs::path(out_dir) / name).string(), img);
            char ppm[64];
            std::snprintf(ppm, sizeof(ppm), "%s/frame_%04d.ppm", dirname, f);
            write_ppm((fs::path(out_dir) / ppm).string(), img);
            dc.frames.push_back(name);
        }
        m.cameras.push_back(std::move(dc));
    }
    m.save((fs::path(out_dir) / "manifest.json").string());
    m.validate();
    return m;
}

}  // namespace hyfluid
