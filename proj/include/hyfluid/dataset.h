#pragma once

#include <string>
#include <vector>

#include "hyfluid/render.h"
#include "hyfluid/sim.h"

namespace hyfluid {

struct DatasetCamera {
    Camera cam;
    bool train = true;
    std::vector<std::string> frames;  // relative paths, one per observed frame
};

struct DatasetManifest {
    int num_frames = 0;      // observed frames (what the cameras see)
    double frame_dt = 0.0;
    double sigma_scale = 1.0;           // density multiplier used when rendering GT
    std::string density_manifest;       // optional GT dumps (relative paths)
    std::string velocity_manifest;
    std::vector<DatasetCamera> cameras;
    std::string root;                   // directory the relative paths resolve against

    void validate() const;  // shared frame count, >=1 train and >=1 held-out camera
    void save(const std::string& path) const;
    static DatasetManifest load(const std::string& path);
};

// All frames preloaded; [camera][frame].
struct LoadedDataset {
    DatasetManifest manifest;
    std::vector<std::vector<Image>> frames;
    std::vector<int> train_cams, test_cams;

    double frame_time(int f) const {
        return manifest.num_frames > 1 ? (double)f / (manifest.num_frames - 1) : 0.0;
    }
};

LoadedDataset load_dataset(const std::string& manifest_path);

// Reads .imgf or .ppm by extension.
Image load_frame(const std::string& path);

// Cameras evenly spaced on an arc around the domain center, all aimed at it.
std::vector<Camera> arc_cameras(int count, double arc_degrees, double radius, double height,
                                double fov_y_rad, int width, int height_px);

struct GenConfig {
    SimConfig sim;                // sim.num_frames = observed frames
    int extra_frames = 10;        // simulated past the observed range (GT only)
    int image_size = 64;
    int num_cameras = 5;
    int held_out = 2;             // index of the single held-out camera
    double arc_degrees = 120.0;
    double fov_deg = 45.0;
    double cam_radius = 2.2;
    double cam_height = 0.5;
    double sigma_scale = 1.0;
    double radiance[3] = {0.8, 0.8, 0.8};
    int samples_per_ray = 128;
};

// Simulates the plume, renders every camera for the observed frames, dumps the
// GT density/velocity sequences (observed + extra), and writes manifest.json
// into out_dir. Returns the manifest.
DatasetManifest generate_dataset(const GenConfig& cfg, const std::string& out_dir);

}  // namespace hyfluid
