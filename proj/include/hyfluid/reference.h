#pragma once

#include "hyfluid/field4d.h"
#include "hyfluid/mac_grid.h"
#include "hyfluid/render.h"
#include "hyfluid/vortex.h"

namespace hyfluid {

// Straight-line serial implementations of the parallel kernels. They share no
// loop code with the library versions and serve as oracles in the tests and
// as the baseline in the kernel benchmark.
namespace ref {

CellGrid divergence(const MacGrid& vel);

double sample_cell(const CellGrid& g, const Vec3& p);

// Independent quadrilinear interpolation + decoder evaluation (scalar math,
// weights expanded the long way).
void field_query(const Field4D& f, const Vec3& x, double t, double* out);

CellGrid advect_semi_lagrangian(const CellGrid& phi, const MacGrid& vel, double dt);

void sample_to_mac(const VectorField4& field, double t, MacGrid& out);

// Emission-absorption compositing written as an explicit transmittance
// product instead of the incremental recurrence.
Vec3 render_ray(const Ray& ray, const ScalarField4& density, const double radiance[3],
                const RenderConfig& cfg);

Vec3 induced_velocity(const VortexParticleSet& set, const Vec3& x, double t);

}  // namespace ref
}  // namespace hyfluid
