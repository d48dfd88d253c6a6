#pragma once

#include <cstddef>
#include <vector>

#include "hyfluid/vec3.h"

namespace hyfluid {

// Cell-centered scalar grid over [0,1]^3, data in x-fastest order.
struct CellGrid {
    int nx = 0, ny = 0, nz = 0;
    std::vector<double> data;

    CellGrid() = default;
    CellGrid(int nx_, int ny_, int nz_) { resize(nx_, ny_, nz_); }
    void resize(int nx_, int ny_, int nz_) {
        nx = nx_; ny = ny_; nz = nz_;
        data.assign((std::size_t)nx * ny * nz, 0.0);
    }
    std::size_t idx(int i, int j, int k) const { return ((std::size_t)k * ny + j) * nx + i; }
    double& at(int i, int j, int k) { return data[idx(i, j, k)]; }
    double at(int i, int j, int k) const { return data[idx(i, j, k)]; }
    std::size_t size() const { return data.size(); }
    double hx() const { return 1.0 / nx; }
    double hy() const { return 1.0 / ny; }
    double hz() const { return 1.0 / nz; }
    Vec3 cell_center(int i, int j, int k) const {
        return {(i + 0.5) * hx(), (j + 0.5) * hy(), (k + 0.5) * hz()};
    }
    // Trilinear sample with clamp-to-edge, treating data as values at cell centers.
    double sample(const Vec3& p) const;
};

// Staggered (MAC) velocity grid: u on x-faces, v on y-faces, w on z-faces.
struct MacGrid {
    int nx = 0, ny = 0, nz = 0;
    std::vector<double> u, v, w;

    MacGrid() = default;
    MacGrid(int nx_, int ny_, int nz_) { resize(nx_, ny_, nz_); }
    void resize(int nx_, int ny_, int nz_) {
        nx = nx_; ny = ny_; nz = nz_;
        u.assign((std::size_t)(nx + 1) * ny * nz, 0.0);
        v.assign((std::size_t)nx * (ny + 1) * nz, 0.0);
        w.assign((std::size_t)nx * ny * (nz + 1), 0.0);
    }
    double h() const { return 1.0 / nx; }
    double hx() const { return 1.0 / nx; }
    double hy() const { return 1.0 / ny; }
    double hz() const { return 1.0 / nz; }

    std::size_t uidx(int i, int j, int k) const { return ((std::size_t)k * ny + j) * (nx + 1) + i; }
    std::size_t vidx(int i, int j, int k) const { return ((std::size_t)k * (ny + 1) + j) * nx + i; }
    std::size_t widx(int i, int j, int k) const { return ((std::size_t)k * ny + j) * nx + i; }

    Vec3 uface_center(int i, int j, int k) const { return {i * hx(), (j + 0.5) * hy(), (k + 0.5) * hz()}; }
    Vec3 vface_center(int i, int j, int k) const { return {(i + 0.5) * hx(), j * hy(), (k + 0.5) * hz()}; }
    Vec3 wface_center(int i, int j, int k) const { return {(i + 0.5) * hx(), (j + 0.5) * hy(), k * hz()}; }

    // Trilinear component samples with clamp-to-edge.
    double sample_u(const Vec3& p) const;
    double sample_v(const Vec3& p) const;
    double sample_w(const Vec3& p) const;
    Vec3 sample(const Vec3& p) const { return {sample_u(p), sample_v(p), sample_w(p)}; }

    std::size_t num_faces() const { return u.size() + v.size() + w.size(); }
    double norm2() const;      // sum of squared face values
    double max_abs() const;
};

// div_c = (du + dv + dw) / h at cell centers.
CellGrid divergence(const MacGrid& vel);

}  // namespace hyfluid
