#pragma once

#include <string>
#include <vector>

#include "hyfluid/dataset.h"
#include "hyfluid/field4d.h"
#include "hyfluid/losses.h"
#include "hyfluid/vortex.h"

namespace hyfluid {

struct TrainConfig {
    int stage1_iters = 5000;
    int stage2_iters = 3000;
    int stage3_iters = 1000;
    int ray_batch = 1024;
    int point_batch = 4096;
    int samples_per_ray = 128;
    double lr = 0.01;
    double beta1 = 0.9, beta2 = 0.99, eps = 1e-15;
    LossWeights weights;
    int proj_res = 32;             // MAC resolution of the per-iteration projection solve
    SolverConfig solver;
    BoundarySpec bc = BoundarySpec::open_top();
    VortexConfig vortex;
    std::uint64_t seed = 1;
    int checkpoint_interval = 1000;  // 0 = no intermediate snapshots
    int log_interval = 10;
    std::string out_dir;             // checkpoints + loss CSV; empty = in-memory only

    void validate() const;
};

// Adam with an active set: parameters whose gradient and both moments are zero
// are skipped, which leaves them bitwise identical to the dense update.
struct AdamState {
    std::vector<double> m, v;
    std::vector<std::uint8_t> is_active;
    std::vector<std::size_t> active;
    long long step = 0;

    void resize(std::size_t n);
};

// Standard bias-corrected Adam step; gradient read from the buffer is
// multiplied by grad_scale. Throws on non-finite gradients.
void adam_step(std::vector<double>& params, const GradBuffer& grads, AdamState& st, double lr,
               double beta1, double beta2, double eps, double grad_scale = 1.0);

struct LossRow {
    int stage = 0;
    int iter = 0;
    double render = 0, density = 0, proj = 0, laminar = 0, total = 0;
    double seconds = 0;  // wall time since stage start
};

void write_loss_csv(const std::string& path, const std::vector<LossRow>& rows);

// Each stage starts from fresh optimizer state and a stage-specific RNG
// stream, so running stages back-to-back equals running them in one process.

// Stage 1: density + radiance under the rendering loss only.
void train_stage1(const LoadedDataset& ds, Field4D& sigma, double radiance[3],
                  const TrainConfig& cfg, std::vector<LossRow>* log = nullptr);

// Stage 2: density, radiance, and base velocity under the full loss.
void train_stage2(const LoadedDataset& ds, Field4D& sigma, double radiance[3], Field4D& velocity,
                  const TrainConfig& cfg, std::vector<LossRow>* log = nullptr);

// Stage 3: vortex-particle intensities (plus density and radiance) with the
// base velocity frozen. Particles must be seeded with trajectories precomputed.
void train_stage3(const LoadedDataset& ds, Field4D& sigma, double radiance[3],
                  const Field4D& velocity, VortexParticleSet& particles, const TrainConfig& cfg,
                  std::vector<LossRow>* log = nullptr);

// Sets every feature parameter to zero so the field decodes exactly to its
// configured output bias everywhere.
void zero_features(Field4D& f);

// Tiny stand-in velocity grid stored in stage-1 checkpoints (no velocity has
// been trained yet, but the checkpoint container holds both fields).
inline GridConfig placeholder_velocity_config() {
    GridConfig c = GridConfig::velocity_default();
    c.base_res = 2;
    c.finest_res = 2;
    c.time_res_cap = 2;
    return c;
}

}  // namespace hyfluid
