#pragma once

#include <random>
#include <vector>

#include "hyfluid/field4d.h"
#include "hyfluid/pressure.h"
#include "hyfluid/vortex.h"

namespace hyfluid {

struct LossWeights {
    double render = 10000.0;
    double density = 0.001;
    double proj = 1.0;
    double laminar = 10.0;
    double gamma = 0.2;

    void validate() const;
};

struct PointBatch {
    std::vector<Vec3> x;
    std::vector<double> t;
    int size() const { return (int)x.size(); }
};

// Uniform space-time batch; with importance != nullptr, positions are drawn
// with probability proportional to density + eps (rejection sampling).
PointBatch sample_point_batch(int n, std::mt19937_64& rng,
                              const ScalarField4* importance = nullptr, double eps = 0.05);

// Mean squared transport residual r = d(sigma)/dt + u . grad(sigma), with
// gradients through the sigma stencil partials and the velocity model.
// Any gradient sink may be null. residuals (optional) receives per-point r.
double density_transport_loss(const Field4D& sigma, const VelocityModel& u,
                              const PointBatch& batch, GradBuffer* sigma_grads,
                              GradBuffer* vel_grads, std::vector<double>* dI,
                              std::vector<double>* residuals = nullptr);

// Mean over faces and frames of (u - project(u))^2, the projected field
// treated as a constant target (stop-gradient).
double projection_loss(const VelocityModel& u, const std::vector<double>& frame_times,
                       int mac_res, const SolverConfig& scfg, const BoundarySpec& bc,
                       GradBuffer* vel_grads, std::vector<double>* dI);

// Hinge mean of max(0, gamma * sigma - |u|); gradients flow to velocity only.
double laminar_loss(const Field4D& sigma, const VelocityModel& u, const PointBatch& batch,
                    double gamma, GradBuffer* vel_grads, std::vector<double>* dI);

}  // namespace hyfluid
