#pragma once

#include <random>
#include <string>
#include <vector>

#include "hyfluid/field4d.h"
#include "hyfluid/vec3.h"

namespace hyfluid {

struct VortexConfig {
    int num_particles = 50;
    double kernel_radius = 0.05;   // domain units; sets the turbulence length scale
    int candidate_pool = 0;        // 0 -> 20 * num_particles
    double eps_singularity = 1e-6;
    double stencil_h = 1e-2;       // step for curl / velocity-gradient stencils

    int pool() const { return candidate_pool > 0 ? candidate_pool : 20 * num_particles; }
};

// Lagrangian vorticity carriers. Trajectories and per-frame vorticities are
// precomputed under the frozen base flow; only the intensities are learnable.
struct VortexParticleSet {
    int num_frames = 0;
    double kernel_radius = 0.05;
    double eps_singularity = 1e-6;
    std::vector<double> intensity;       // per particle
    std::vector<int> seed_frame;         // per particle
    std::vector<Vec3> position;          // [p * num_frames + f]
    std::vector<Vec3> vorticity;         // [p * num_frames + f]
    bool left_domain = false;            // any trajectory clamped at the boundary

    int size() const { return (int)intensity.size(); }
    Vec3 pos_at(int p, double frame_coord) const;
    Vec3 vort_at(int p, double frame_coord) const;

    // Sum over particles of I_p * (N_p x K(x - x_p) w_p); time in [0,1] maps
    // linearly onto the frame range with interpolation between frames.
    Vec3 induced_velocity(const Vec3& x, double t) const;
    // Per-particle direction d(u_vort)/d(I_p).
    Vec3 intensity_basis(const Vec3& x, double t, int p) const;

    void scale_intensities(double factor);

    void save(const std::string& path) const;   // "VTX1"
    static VortexParticleSet load(const std::string& path);
};

// Gaussian kernel K(x) = exp(-|x|^2 / 2r^2) / (r^3 (2 pi)^{3/2}).
double vortex_kernel(const Vec3& dx, double r);

Vec3 curl_of(const VectorField4& u, const Vec3& x, double t, double h);
// J_ij = du_i / dx_j by central differences.
void velocity_jacobian(const VectorField4& u, const Vec3& x, double t, double h, double J[3][3]);

// Top-curl seeding with non-max suppression (min pairwise separation r/2).
// When every candidate curl is ~zero, falls back to the highest-density
// locations (density may be null, then candidates are kept by pool order).
VortexParticleSet seed_particles(const VectorField4& u_base, const ScalarField4* density,
                                 const VortexConfig& cfg, int num_frames, std::mt19937_64& rng);

// RK2 advection of positions through u_base, forward and backward from the
// seed frame, with vorticity evolved by the stretching term dw/dt = (grad u) w.
void precompute_trajectories(VortexParticleSet& set, const VectorField4& u_base,
                             const VortexConfig& cfg);

// Least-squares fit of intensities against velocity targets at probe points
// (normal equations; the particle count is small). Used by tests and as a
// direct-fit utility; the training pipeline fits intensities under the full loss.
std::vector<double> fit_intensities_mse(const VortexParticleSet& set,
                                        const std::vector<Vec3>& probes,
                                        const std::vector<double>& times,
                                        const std::vector<Vec3>& targets);

// Velocity model used by the physics losses: u = u_base + u_vort, with
// backprop routing into the base grid and/or the particle intensities.
struct VelocityModel {
    const Field4D* base = nullptr;
    const VortexParticleSet* vortex = nullptr;

    Vec3 eval(const Vec3& x, double t) const;
    // dL_du flows to base parameters (if base_grads) and intensities (if dI).
    void backprop(const Vec3& x, double t, const Vec3& dL_du, GradBuffer* base_grads,
                  std::vector<double>* dI) const;
};

class ModelVelocityField : public VectorField4 {
public:
    explicit ModelVelocityField(const VelocityModel& m) : m_(m) {}
    Vec3 velocity(const Vec3& x, double t) const override { return m_.eval(x, t); }

private:
    VelocityModel m_;
};

}  // namespace hyfluid
