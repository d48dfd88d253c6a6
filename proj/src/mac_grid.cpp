#include "hyfluid/mac_grid.h"

#include <algorithm>
#include <cmath>

namespace hyfluid {

namespace {
// Clamped linear interpolation setup along one axis: value lattice has n nodes
// at positions (offset + i) * h for i in [0, n).
inline void locate(double x, double h, double offset, int n, int& i0, double& f) {
    double c = x / h - offset;
    if (c <= 0.0) { i0 = 0; f = 0.0; return; }
    if (c >= n - 1) { i0 = n - 2 >= 0 ? n - 2 : 0; f = n >= 2 ? 1.0 : 0.0; return; }
    i0 = (int)std::floor(c);
    f = c - i0;
}
}  // namespace

double CellGrid::sample(const Vec3& p) const {
    int i0, j0, k0; double fx, fy, fz;
    locate(p.x, hx(), 0.5, nx, i0, fx);
    locate(p.y, hy(), 0.5, ny, j0, fy);
    locate(p.z, hz(), 0.5, nz, k0, fz);
    int i1 = std::min(i0 + 1, nx - 1), j1 = std::min(j0 + 1, ny - 1), k1 = std::min(k0 + 1, nz - 1);
    double c00 = at(i0, j0, k0) * (1 - fx) + at(i1, j0, k0) * fx;
    double c10 = at(i0, j1, k0) * (1 - fx) + at(i1, j1, k0) * fx;
    double c01 = at(i0, j0, k1) * (1 - fx) + at(i1, j0, k1) * fx;
    double c11 = at(i0, j1, k1) * (1 - fx) + at(i1, j1, k1) * fx;
    double c0 = c00 * (1 - fy) + c10 * fy;
    double c1 = c01 * (1 - fy) + c11 * fy;
    return c0 * (1 - fz) + c1 * fz;
}

double MacGrid::sample_u(const Vec3& p) const {
    int i0, j0, k0; double fx, fy, fz;
    locate(p.x, hx(), 0.0, nx + 1, i0, fx);
    locate(p.y, hy(), 0.5, ny, j0, fy);
    locate(p.z, hz(), 0.5, nz, k0, fz);
    int i1 = std::min(i0 + 1, nx), j1 = std::min(j0 + 1, ny - 1), k1 = std::min(k0 + 1, nz - 1);
    auto U = [&](int i, int j, int k) { return u[uidx(i, j, k)]; };
    double c00 = U(i0, j0, k0) * (1 - fx) + U(i1, j0, k0) * fx;
    double c10 = U(i0, j1, k0) * (1 - fx) + U(i1, j1, k0) * fx;
    double c01 = U(i0, j0, k1) * (1 - fx) + U(i1, j0, k1) * fx;
    double c11 = U(i0, j1, k1) * (1 - fx) + U(i1, j1, k1) * fx;
    return (c00 * (1 - fy) + c10 * fy) * (1 - fz) + (c01 * (1 - fy) + c11 * fy) * fz;
}

double MacGrid::sample_v(const Vec3& p) const {
    int i0, j0, k0; double fx, fy, fz;
    locate(p.x, hx(), 0.5, nx, i0, fx);
    locate(p.y, hy(), 0.0, ny + 1, j0, fy);
    locate(p.z, hz(), 0.5, nz, k0, fz);
    int i1 = std::min(i0 + 1, nx - 1), j1 = std::min(j0 + 1, ny), k1 = std::min(k0 + 1, nz - 1);
    auto V = [&](int i, int j, int k) { return v[vidx(i, j, k)]; };
    double c00 = V(i0, j0, k0) * (1 - fx) + V(i1, j0, k0) * fx;
    double c10 = V(i0, j1, k0) * (1 - fx) + V(i1, j1, k0) * fx;
    double c01 = V(i0, j0, k1) * (1 - fx) + V(i1, j0, k1) * fx;
    double c11 = V(i0, j1, k1) * (1 - fx) + V(i1, j1, k1) * fx;
    return (c00 * (1 - fy) + c10 * fy) * (1 - fz) + (c01 * (1 - fy) + c11 * fy) * fz;
}

double MacGrid::sample_w(const Vec3& p) const {
    int i0, j0, k0; double fx, fy, fz;
    locate(p.x, hx(), 0.5, nx, i0, fx);
    locate(p.y, hy(), 0.5, ny, j0, fy);
    locate(p.z, hz(), 0.0, nz + 1, k0, fz);
    int i1 = std::min(i0 + 1, nx - 1), j1 = std::min(j0 + 1, ny - 1), k1 = std::min(k0 + 1, nz);
    auto W = [&](int i, int j, int k) { return w[widx(i, j, k)]; };
    double c00 = W(i0, j0, k0) * (1 - fx) + W(i1, j0, k0) * fx;
    double c10 = W(i0, j1, k0) * (1 - fx) + W(i1, j1, k0) * fx;
    double c01 = W(i0, j0, k1) * (1 - fx) + W(i1, j0, k1) * fx;
    double c11 = W(i0, j1, k1) * (1 - fx) + W(i1, j1, k1) * fx;
    return (c00 * (1 - fy) + c10 * fy) * (1 - fz) + (c01 * (1 - fy) + c11 * fy) * fz;
}

double MacGrid::norm2() const {
    double s = 0.0;
    for (double x : u) s += x * x;
    for (double x : v) s += x * x;
    for (double x : w) s += x * x;
    return s;
}

double MacGrid::max_abs() const {
    double m = 0.0;
    for (double x : u) m = std::max(m, std::fabs(x));
    for (double x : v) m = std::max(m, std::fabs(x));
    for (double x : w) m = std::max(m, std::fabs(x));
    return m;
}

CellGrid divergence(const MacGrid& vel) {
    CellGrid div(vel.nx, vel.ny, vel.nz);
    const double ihx = vel.nx, ihy = vel.ny, ihz = vel.nz;
#pragma omp parallel for schedule(static)
    for (int k = 0; k < vel.nz; ++k)
        for (int j = 0; j < vel.ny; ++j)
            for (int i = 0; i < vel.nx; ++i) {
                div.at(i, j, k) =
                    (vel.u[vel.uidx(i + 1, j, k)] - vel.u[vel.uidx(i, j, k)]) * ihx +
                    (vel.v[vel.vidx(i, j + 1, k)] - vel.v[vel.vidx(i, j, k)]) * ihy +
                    (vel.w[vel.widx(i, j, k + 1)] - vel.w[vel.widx(i, j, k)]) * ihz;
            }
    return div;
}

}  // namespace hyfluid
