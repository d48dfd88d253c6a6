#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hyfluid/field4d.h"
#include "hyfluid/mac_grid.h"
#include "hyfluid/pressure.h"

namespace hyfluid {

struct InflowSpec {
    Vec3 center{0.5, 0.08, 0.5};
    double radius = 0.12;
    double density_rate = 30.0;   // density injected per unit time
    double seed_velocity = 0.5;   // upward velocity inside the source
    double turbulence = 0.3;      // lateral source perturbation amplitude
};

struct SimConfig {
    int res = 48;
    int num_frames = 60;
    double dt = 1.0 / 59.0;       // per frame, normalized time units
    double buoyancy = 2.0;        // upward force coefficient (times density)
    double diffusion = 0.0;       // 0 = inviscid; > 0 = high-viscosity variant
    InflowSpec inflow;
    BoundarySpec bc = BoundarySpec::open_top();
    SolverConfig solver;
    std::uint64_t seed = 1;       // drives the deterministic source perturbation
};

struct DensitySequence {
    std::vector<CellGrid> frames;
    double dt = 0.0;
};

// phi'(x) = phi(x - dt*u(x)), RK2 backtrace, clamp-to-domain. The optional
// bound grids receive the min/max of the interpolation stencil per cell
// (used by the MacCormack clamp).
CellGrid advect_semi_lagrangian(const CellGrid& phi, const MacGrid& vel, double dt,
                                CellGrid* stencil_min = nullptr, CellGrid* stencil_max = nullptr);
MacGrid advect_mac_semi_lagrangian(const MacGrid& field, const MacGrid& vel, double dt,
                                   MacGrid* stencil_min = nullptr, MacGrid* stencil_max = nullptr);

// Predictor-corrector advection clamped to the forward-trace stencil extrema.
CellGrid advect_maccormack(const CellGrid& phi, const MacGrid& vel, double dt);
MacGrid advect_mac_maccormack(const MacGrid& field, const MacGrid& vel, double dt);

// Reports max |u| * dt / h for the CFL advisory.
double cfl_number(const MacGrid& vel, double dt);

// Buoyancy-driven rising plume: inject -> advect (MacCormack) -> buoyancy ->
// optional diffusion -> project, per frame. The built-in ground-truth oracle.
std::pair<DensitySequence, std::vector<MacGrid>> simulate_plume(const SimConfig& cfg);

// Re-simulation from learned fields: frame-0 density from sigma(t=0), advected
// by the learned velocity, bottom slab refreshed from sigma each frame.
DensitySequence resimulate(const ScalarField4& sigma, const VectorField4& velocity,
                           const SimConfig& cfg, double source_height = 0.1);

// Future prediction: u <- self-advect (MacCormack); u <- project; sigma <- advect.
// Frame 0 of the returned sequences is the start state, followed by num_steps steps.
std::pair<DensitySequence, std::vector<MacGrid>> predict_future(const MacGrid& vel0,
                                                                const CellGrid& sigma0,
                                                                int num_steps,
                                                                const SimConfig& cfg,
                                                                bool buoyancy = false);

// Numbered GRD1 dumps plus a plain-text manifest ("dt <value>" header, one
// relative path per line).
void save_density_sequence(const std::string& dir, const std::string& prefix,
                           const DensitySequence& seq);
DensitySequence load_density_sequence(const std::string& manifest_path);
void save_velocity_sequence(const std::string& dir, const std::string& prefix,
                            const std::vector<MacGrid>& vels, double dt);
std::vector<MacGrid> load_velocity_sequence(const std::string& manifest_path, double* dt = nullptr);

// Ground-truth grid sequence exposed through the continuous field interfaces
// (trilinear in space, linear in time).
class GridSequenceDensity : public ScalarField4 {
public:
    explicit GridSequenceDensity(const DensitySequence* seq, double scale = 1.0)
        : seq_(seq), scale_(scale) {}
    double density(const Vec3& x, double t) const override;

private:
    const DensitySequence* seq_;
    double scale_;
};

class GridSequenceVelocity : public VectorField4 {
public:
    explicit GridSequenceVelocity(const std::vector<MacGrid>* vels) : vels_(vels) {}
    Vec3 velocity(const Vec3& x, double t) const override;

private:
    const std::vector<MacGrid>* vels_;
};

}  // namespace hyfluid
