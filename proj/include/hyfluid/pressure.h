#pragma once

#include <stdexcept>

#include "hyfluid/mac_grid.h"

namespace hyfluid {

enum class FaceBC { Solid, Open };

// Domain boundary conditions. Solid: zero normal velocity, homogeneous
// Neumann pressure. Open: zero Dirichlet pressure at the face.
struct BoundarySpec {
    FaceBC xlo = FaceBC::Solid, xhi = FaceBC::Solid;
    FaceBC ylo = FaceBC::Solid, yhi = FaceBC::Open;  // plume rises out the top (+y)
    FaceBC zlo = FaceBC::Solid, zhi = FaceBC::Solid;

    static BoundarySpec open_top() { return {}; }
    static BoundarySpec closed_box() {
        BoundarySpec b; b.yhi = FaceBC::Solid; return b;
    }
    static BoundarySpec all_open() {
        BoundarySpec b;
        b.xlo = b.xhi = b.ylo = b.yhi = b.zlo = b.zhi = FaceBC::Open;
        return b;
    }
    bool has_dirichlet() const {
        return xlo == FaceBC::Open || xhi == FaceBC::Open || ylo == FaceBC::Open ||
               yhi == FaceBC::Open || zlo == FaceBC::Open || zhi == FaceBC::Open;
    }
};

struct SolverConfig {
    int mg_levels = 3;
    int smooth_sweeps = 4;          // pre and post
    double jacobi_omega = 2.0 / 3.0;
    double tolerance = 1e-6;        // relative residual
    int max_iterations = 200;
    int coarse_sweeps = 40;
};

struct SolverFailure : std::runtime_error {
    double residual;
    SolverFailure(const std::string& msg, double res) : std::runtime_error(msg), residual(res) {}
};

struct SolveStats {
    int iterations = 0;
    double residual = 0.0;  // relative
};

// Solves lap(p) = div on the 7-point Laplacian with the given boundary
// conditions, PCG preconditioned by one multigrid V-cycle.
CellGrid solve_pressure(const CellGrid& div, const SolverConfig& cfg, const BoundarySpec& bc,
                        SolveStats* stats = nullptr);

// Zeroes normal velocity on solid domain faces in place.
void enforce_boundary(MacGrid& vel, const BoundarySpec& bc);

// Helmholtz projection: vel' = vel - grad(p). Solid-face normal velocities are
// zeroed before the solve.
MacGrid project(const MacGrid& vel, const SolverConfig& cfg, const BoundarySpec& bc,
                SolveStats* stats = nullptr);

// Exposed for testing: applies the (negated) discrete Laplacian A = -lap with bc.
void apply_laplacian(const CellGrid& p, const BoundarySpec& bc, CellGrid& out);

// One multigrid V-cycle applied to A e = r from a zero initial guess
// (the PCG preconditioner). Exposed for the per-cycle contraction test.
CellGrid vcycle_once(const CellGrid& rhs, const SolverConfig& cfg, const BoundarySpec& bc);

}  // namespace hyfluid
