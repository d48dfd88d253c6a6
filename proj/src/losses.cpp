#include "hyfluid/losses.h"

#include <cmath>
#include <stdexcept>

#include "hyfluid/parallel.h"

namespace hyfluid {

void LossWeights::validate() const {
    if (render < 0 || density < 0 || proj < 0 || laminar < 0)
        throw std::invalid_argument("loss weights must be non-negative");
    if (!(gamma > 0)) throw std::invalid_argument("laminar gamma must be positive");
}

PointBatch sample_point_batch(int n, std::mt19937_64& rng, const ScalarField4* importance,
                              double eps) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    PointBatch batch;
    batch.x.reserve(n);
    batch.t.reserve(n);
    double cap = 1.0;
    if (importance) {
        // rough density cap from a handful of probes
        for (int i = 0; i < 64; ++i)
            cap = std::max(cap, importance->density({u01(rng), u01(rng), u01(rng)}, u01(rng)));
    }
    while ((int)batch.x.size() < n) {
        Vec3 x{u01(rng), u01(rng), u01(rng)};
        double t = u01(rng);
        if (importance) {
            double p = (importance->density(x, t) + eps) / (cap + eps);
            if (u01(rng) > p) continue;
        }
        batch.x.push_back(x);
        batch.t.push_back(t);
    }
    return batch;
}

double density_transport_loss(const Field4D& sigma, const VelocityModel& u,
                              const PointBatch& batch, GradBuffer* sigma_grads,
                              GradBuffer* vel_grads, std::vector<double>* dI,
                              std::vector<double>* residuals) {
    const int B = batch.size();
    if (B == 0) return 0.0;
    const double hs = sigma.default_spatial_step();
    const double ht = sigma.default_time_step();
    if (residuals) residuals->assign(B, 0.0);
    double loss = 0.0;
    for (int i = 0; i < B; ++i) {
        const Vec3& x = batch.x[i];
        const double t = batch.t[i];
        double partials[4][3];
        sigma.query_partials(x, t, hs, ht, partials);
        const Vec3 vel = u.eval(x, t);
        const Vec3 grad_sigma{partials[0][0], partials[1][0], partials[2][0]};
        const double r = partials[3][0] + dot(vel, grad_sigma);
        if (residuals) (*residuals)[i] = r;
        loss += r * r / B;
        const double dr = 2.0 * r / B;
        if (dr != 0.0) {
            if (sigma_grads) {
                double dpart[4][3] = {};
                dpart[0][0] = dr * vel.x;
                dpart[1][0] = dr * vel.y;
                dpart[2][0] = dr * vel.z;
                dpart[3][0] = dr;
                sigma.backprop_partials(x, t, hs, ht, dpart, *sigma_grads);
            }
            if (vel_grads || dI) u.backprop(x, t, dr * grad_sigma, vel_grads, dI);
        }
    }
    return loss;
}

double projection_loss(const VelocityModel& u, const std::vector<double>& frame_times,
                       int mac_res, const SolverConfig& scfg, const BoundarySpec& bc,
                       GradBuffer* vel_grads, std::vector<double>* dI) {
    if (frame_times.empty()) return 0.0;
    ModelVelocityField field(u);
    double loss = 0.0;
    MacGrid vel(mac_res, mac_res, mac_res);
    for (double t : frame_times) {
        sample_to_mac(field, t, vel);
        MacGrid proj = project(vel, scfg, bc);
        const double n = (double)vel.num_faces() * frame_times.size();
        for (int k = 0; k < vel.nz; ++k)
            for (int j = 0; j < vel.ny; ++j)
                for (int i = 0; i <= vel.nx; ++i) {
                    const std::size_t f = vel.uidx(i, j, k);
                    const double d = vel.u[f] - proj.u[f];
                    loss += d * d / n;
                    if ((vel_grads || dI) && d != 0.0)
                        u.backprop(vel.uface_center(i, j, k), t, {2.0 * d / n, 0, 0},
                                   vel_grads, dI);
                }
        for (int k = 0; k < vel.nz; ++k)
            for (int j = 0; j <= vel.ny; ++j)
                for (int i = 0; i < vel.nx; ++i) {
                    const std::size_t f = vel.vidx(i, j, k);
                    const double d = vel.v[f] - proj.v[f];
                    loss += d * d / n;
                    if ((vel_grads || dI) && d != 0.0)
                        u.backprop(vel.vface_center(i, j, k), t, {0, 2.0 * d / n, 0},
                                   vel_grads, dI);
                }
        for (int k = 0; k <= vel.nz; ++k)
            for (int j = 0; j < vel.ny; ++j)
                for (int i = 0; i < vel.nx; ++i) {
                    const std::size_t f = vel.widx(i, j, k);
                    const double d = vel.w[f] - proj.w[f];
                    loss += d * d / n;
                    if ((vel_grads || dI) && d != 0.0)
                        u.backprop(vel.wface_center(i, j, k), t, {0, 0, 2.0 * d / n},
                                   vel_grads, dI);
                }
    }
    return loss;
}

double laminar_loss(const Field4D& sigma, const VelocityModel& u, const PointBatch& batch,
                    double gamma, GradBuffer* vel_grads, std::vector<double>* dI) {
    if (gamma <= 0.0) throw std::invalid_argument("gamma must be positive");
    const int B = batch.size();
    if (B == 0) return 0.0;
    double loss = 0.0;
    for (int i = 0; i < B; ++i) {
        const Vec3& x = batch.x[i];
        const double t = batch.t[i];
        double s;
        sigma.query(x, t, &s);  // detached: the hinge only pushes velocity
        const Vec3 vel = u.eval(x, t);
        const double speed = vel.norm();
        const double q = gamma * s - speed;
        if (q <= 0.0) continue;
        loss += q / B;
        if ((vel_grads || dI) && speed > 0.0)
            u.backprop(x, t, vel * (-1.0 / (B * speed)), vel_grads, dI);
    }
    return loss;
}

}  // namespace hyfluid
