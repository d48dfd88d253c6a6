#pragma once

#include <random>
#include <vector>

#include "hyfluid/field4d.h"
#include "hyfluid/io.h"
#include "hyfluid/rng.h"
#include "hyfluid/vec3.h"

namespace hyfluid {

struct Camera {
    double fx = 0, fy = 0, cx = 0, cy = 0;
    int width = 0, height = 0;
    double rot[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};  // world-from-camera
    Vec3 position;                                         // camera origin in world
    double t_near = 0.0, t_far = 1.0;

    void validate() const;  // throws on non-orthonormal rotation or bad bounds
    Vec3 cam_to_world(const Vec3& d) const {
        return {rot[0][0] * d.x + rot[0][1] * d.y + rot[0][2] * d.z,
                rot[1][0] * d.x + rot[1][1] * d.y + rot[1][2] * d.z,
                rot[2][0] * d.x + rot[2][1] * d.y + rot[2][2] * d.z};
    }
    // Continuous pixel coordinates (px, py) in [0,W]x[0,H] -> unit world direction.
    Vec3 pixel_ray_dir(double px, double py) const {
        return normalized(cam_to_world({(px - cx) / fx, (py - cy) / fy, 1.0}));
    }
    Vec3 forward() const { return cam_to_world({0, 0, 1}); }
};

// Camera looking at `target` from `eye`, image +y pointing world -up.
Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double fov_y_rad, int width,
               int height, double t_near, double t_far);

struct Ray {
    Vec3 origin;
    Vec3 dir;          // unit
    double t_frame = 0.0;
    double px = 0.0, py = 0.0;  // continuous pixel coordinates
    double t_near = 0.0, t_far = 1e30;
    std::uint64_t jitter_seed = 0;
};

struct RenderConfig {
    int samples_per_ray = 128;
    bool jitter = true;      // stratified jitter (training); false = midpoints (eval)
    int supersample = 1;     // per-axis factor for render_image
};

// Per-sample cache kept from the forward pass for backprop.
struct RayCache {
    double t0 = 0, t1 = 0, delta = 0;
    std::vector<double> ts;     // sample parameters along the ray
    std::vector<double> sigma;
    std::vector<double> weight;
    double alpha = 0.0;
};

// Continuous sub-pixel ray sampling over the full image plane.
std::vector<Ray> generate_rays(const Camera& cam, double frame_time, int batch_size,
                               std::mt19937_64& rng);

// Emission-absorption quadrature along one ray. Returns per-channel radiance;
// cache (optional) holds what backprop needs. Throws on non-finite density.
Vec3 render_ray(const Ray& ray, const ScalarField4& density, const double radiance[3],
                const RenderConfig& cfg, RayCache* cache = nullptr);

// Chain rule of dL/d(rgb) through the quadrature into density parameters and
// the constant radiance.
void backprop_ray(const Ray& ray, const RayCache& cache, const Vec3& dL_drgb,
                  const Field4D& density, const double radiance[3], GradBuffer& grads,
                  double dL_dradiance[3]);

// Mean squared error over the batch (averaged over rays and channels) with
// gradients to the density grid and radiance. Observations are sampled
// bilinearly from `frame` at each ray's continuous pixel coordinate.
double rendering_loss(const std::vector<Ray>& rays, const Image& frame, const Field4D& density,
                      const double radiance[3], const RenderConfig& cfg, GradBuffer& grads,
                      double dL_dradiance[3]);

// Same loss/gradients against explicit per-ray observations.
double rendering_loss_targets(const std::vector<Ray>& rays, const std::vector<Vec3>& observed,
                              const Field4D& density, const double radiance[3],
                              const RenderConfig& cfg, GradBuffer& grads, double dL_dradiance[3]);

// One ray per pixel center (deterministic midpoints), optional supersampling.
Image render_image(const Camera& cam, double frame_time, const ScalarField4& density,
                   const double radiance[3], const RenderConfig& cfg);

}  // namespace hyfluid
