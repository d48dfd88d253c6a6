#include "hyfluid/pressure.h"

#include <cmath>
#include <cstring>

#include "hyfluid/parallel.h"

namespace hyfluid {

namespace {

// A = -lap with the bc baked in: Solid neighbor drops out (Neumann), Open
// neighbor contributes 2*p_c (zero Dirichlet at the face center).
void apply_A(const CellGrid& p, const BoundarySpec& bc, CellGrid& out) {
    const int nx = p.nx, ny = p.ny, nz = p.nz;
    const double cx = (double)nx * nx, cy = (double)ny * ny, cz = (double)nz * nz;
#pragma omp parallel for schedule(static) num_threads(num_threads())
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const double pc = p.at(i, j, k);
                double s = 0.0;
                if (i > 0) s += cx * (pc - p.at(i - 1, j, k));
                else if (bc.xlo == FaceBC::Open) s += 2.0 * cx * pc;
                if (i < nx - 1) s += cx * (pc - p.at(i + 1, j, k));
                else if (bc.xhi == FaceBC::Open) s += 2.0 * cx * pc;
                if (j > 0) s += cy * (pc - p.at(i, j - 1, k));
                else if (bc.ylo == FaceBC::Open) s += 2.0 * cy * pc;
                if (j < ny - 1) s += cy * (pc - p.at(i, j + 1, k));
                else if (bc.yhi == FaceBC::Open) s += 2.0 * cy * pc;
                if (k > 0) s += cz * (pc - p.at(i, j, k - 1));
                else if (bc.zlo == FaceBC::Open) s += 2.0 * cz * pc;
                if (k < nz - 1) s += cz * (pc - p.at(i, j, k + 1));
                else if (bc.zhi == FaceBC::Open) s += 2.0 * cz * pc;
                out.at(i, j, k) = s;
            }
}

double diag_at(int i, int j, int k, int nx, int ny, int nz, const BoundarySpec& bc) {
    const double cx = (double)nx * nx, cy = (double)ny * ny, cz = (double)nz * nz;
    double d = 0.0;
    d += (i > 0) ? cx : (bc.xlo == FaceBC::Open ? 2.0 * cx : 0.0);
    d += (i < nx - 1) ? cx : (bc.xhi == FaceBC::Open ? 2.0 * cx : 0.0);
    d += (j > 0) ? cy : (bc.ylo == FaceBC::Open ? 2.0 * cy : 0.0);
    d += (j < ny - 1) ? cy : (bc.yhi == FaceBC::Open ? 2.0 * cy : 0.0);
    d += (k > 0) ? cz : (bc.zlo == FaceBC::Open ? 2.0 * cz : 0.0);
    d += (k < nz - 1) ? cz : (bc.zhi == FaceBC::Open ? 2.0 * cz : 0.0);
    return d;
}

void jacobi_sweep(CellGrid& p, const CellGrid& b, const BoundarySpec& bc, double omega,
                  CellGrid& scratch) {
    apply_A(p, bc, scratch);
    const int nx = p.nx, ny = p.ny, nz = p.nz;
#pragma omp parallel for schedule(static) num_threads(num_threads())
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const double d = diag_at(i, j, k, nx, ny, nz, bc);
                const std::size_t c = p.idx(i, j, k);
                p.data[c] += omega * (b.data[c] - scratch.data[c]) / d;
            }
}

void restrict_full(const CellGrid& fine, CellGrid& coarse) {
#pragma omp parallel for schedule(static) num_threads(num_threads())
    for (int k = 0; k < coarse.nz; ++k)
        for (int j = 0; j < coarse.ny; ++j)
            for (int i = 0; i < coarse.nx; ++i) {
                double s = 0.0;
                for (int dk = 0; dk < 2; ++dk)
                    for (int dj = 0; dj < 2; ++dj)
                        for (int di = 0; di < 2; ++di)
                            s += fine.at(2 * i + di, 2 * j + dj, 2 * k + dk);
                coarse.at(i, j, k) = 0.125 * s;
            }
}

void prolong_add(const CellGrid& coarse, CellGrid& fine) {
#pragma omp parallel for schedule(static) num_threads(num_threads())
    for (int k = 0; k < fine.nz; ++k)
        for (int j = 0; j < fine.ny; ++j)
            for (int i = 0; i < fine.nx; ++i)
                fine.at(i, j, k) += coarse.sample(fine.cell_center(i, j, k));
}

void remove_mean(CellGrid& g) {
    const double mean = det_sum(g.data.data(), g.size()) / (double)g.size();
#pragma omp parallel for schedule(static) num_threads(num_threads())
    for (long long i = 0; i < (long long)g.size(); ++i) g.data[i] -= mean;
}

struct Multigrid {
    std::vector<CellGrid> p, b, scratch;
    BoundarySpec bc;
    SolverConfig cfg;

    Multigrid(int nx, int ny, int nz, const SolverConfig& cfg_, const BoundarySpec& bc_)
        : bc(bc_), cfg(cfg_) {
        int levels = cfg.mg_levels;
        for (int l = 0; l < levels; ++l) {
            p.emplace_back(nx, ny, nz);
            b.emplace_back(nx, ny, nz);
            scratch.emplace_back(nx, ny, nz);
            if (l + 1 < levels) {
                // stop early rather than coarsen below 4 cells per axis
                if (nx % 2 || ny % 2 || nz % 2 || nx / 2 < 4 || ny / 2 < 4 || nz / 2 < 4) break;
                nx /= 2; ny /= 2; nz /= 2;
            }
        }
    }

    void cycle(int l) {
        const bool coarsest = (l + 1 == (int)p.size());
        const int sweeps = coarsest ? cfg.coarse_sweeps : cfg.smooth_sweeps;
        for (int s = 0; s < sweeps; ++s) jacobi_sweep(p[l], b[l], bc, cfg.jacobi_omega, scratch[l]);
        if (coarsest) return;
        // residual -> coarse rhs
        apply_A(p[l], bc, scratch[l]);
#pragma omp parallel for schedule(static) num_threads(num_threads())
        for (long long i = 0; i < (long long)scratch[l].size(); ++i)
            scratch[l].data[i] = b[l].data[i] - scratch[l].data[i];
        restrict_full(scratch[l], b[l + 1]);
        std::fill(p[l + 1].data.begin(), p[l + 1].data.end(), 0.0);
        cycle(l + 1);
        prolong_add(p[l + 1], p[l]);
        for (int s = 0; s < cfg.smooth_sweeps; ++s)
            jacobi_sweep(p[l], b[l], bc, cfg.jacobi_omega, scratch[l]);
    }

    // z = M^-1 r : one V-cycle from a zero initial guess
    void precondition(const CellGrid& r, CellGrid& z) {
        b[0] = r;
        std::fill(p[0].data.begin(), p[0].data.end(), 0.0);
        cycle(0);
        z = p[0];
        if (!bc.has_dirichlet()) remove_mean(z);
    }
};

}  // namespace

void apply_laplacian(const CellGrid& p, const BoundarySpec& bc, CellGrid& out) {
    out.resize(p.nx, p.ny, p.nz);
    apply_A(p, bc, out);
}

CellGrid vcycle_once(const CellGrid& rhs, const SolverConfig& cfg, const BoundarySpec& bc) {
    Multigrid mg(rhs.nx, rhs.ny, rhs.nz, cfg, bc);
    CellGrid z;
    z.resize(rhs.nx, rhs.ny, rhs.nz);
    mg.precondition(rhs, z);
    return z;
}

CellGrid solve_pressure(const CellGrid& div, const SolverConfig& cfg, const BoundarySpec& bc,
                        SolveStats* stats) {
    const int nx = div.nx, ny = div.ny, nz = div.nz;
    const std::size_t n = div.size();
    CellGrid p(nx, ny, nz);

    // A p = b with A = -lap and b = -div, so that lap(p) = div.
    CellGrid b(nx, ny, nz);
    for (std::size_t i = 0; i < n; ++i) b.data[i] = -div.data[i];
    if (!bc.has_dirichlet()) remove_mean(b);

    const double bnorm = std::sqrt(det_dot(b.data.data(), b.data.data(), n));
    if (bnorm == 0.0) {
        if (stats) { stats->iterations = 0; stats->residual = 0.0; }
        return p;
    }

    Multigrid mg(nx, ny, nz, cfg, bc);
    CellGrid r = b, z(nx, ny, nz), q(nx, ny, nz), d(nx, ny, nz);
    mg.precondition(r, z);
    d = z;
    double rz = det_dot(r.data.data(), z.data.data(), n);
    double relres = 1.0;
    int it = 0;
    for (; it < cfg.max_iterations; ++it) {
        relres = std::sqrt(det_dot(r.data.data(), r.data.data(), n)) / bnorm;
        if (relres <= cfg.tolerance) break;
        apply_A(d, bc, q);
        const double dq = det_dot(d.data.data(), q.data.data(), n);
        if (dq <= 0.0) break;  // numerical breakdown
        const double alpha = rz / dq;
#pragma omp parallel for schedule(static) num_threads(num_threads())
        for (long long i = 0; i < (long long)n; ++i) {
            p.data[i] += alpha * d.data[i];
            r.data[i] -= alpha * q.data[i];
        }
        if (!bc.has_dirichlet()) remove_mean(r);
        mg.precondition(r, z);
        const double rz_new = det_dot(r.data.data(), z.data.data(), n);
        const double beta = rz_new / rz;
        rz = rz_new;
#pragma omp parallel for schedule(static) num_threads(num_threads())
        for (long long i = 0; i < (long long)n; ++i) d.data[i] = z.data[i] + beta * d.data[i];
    }
    relres = std::sqrt(det_dot(r.data.data(), r.data.data(), n)) / bnorm;
    if (stats) { stats->iterations = it; stats->residual = relres; }
    if (relres > cfg.tolerance)
        throw SolverFailure("pressure solve did not converge, relative residual " +
                                std::to_string(relres),
                            relres);
    return p;
}

void enforce_boundary(MacGrid& vel, const BoundarySpec& bc) {
    const int nx = vel.nx, ny = vel.ny, nz = vel.nz;
    if (bc.xlo == FaceBC::Solid)
        for (int k = 0; k < nz; ++k) for (int j = 0; j < ny; ++j) vel.u[vel.uidx(0, j, k)] = 0.0;
    if (bc.xhi == FaceBC::Solid)
        for (int k = 0; k < nz; ++k) for (int j = 0; j < ny; ++j) vel.u[vel.uidx(nx, j, k)] = 0.0;
    if (bc.ylo == FaceBC::Solid)
        for (int k = 0; k < nz; ++k) for (int i = 0; i < nx; ++i) vel.v[vel.vidx(i, 0, k)] = 0.0;
    if (bc.yhi == FaceBC::Solid)
        for (int k = 0; k < nz; ++k) for (int i = 0; i < nx; ++i) vel.v[vel.vidx(i, ny, k)] = 0.0;
    if (bc.zlo == FaceBC::Solid)
        for (int j = 0; j < ny; ++j) for (int i = 0; i < nx; ++i) vel.w[vel.widx(i, j, 0)] = 0.0;
    if (bc.zhi == FaceBC::Solid)
        for (int j = 0; j < ny; ++j) for (int i = 0; i < nx; ++i) vel.w[vel.widx(i, j, nz)] = 0.0;
}

MacGrid project(const MacGrid& vel, const SolverConfig& cfg, const BoundarySpec& bc,
                SolveStats* stats) {
    MacGrid out = vel;
    enforce_boundary(out, bc);
    CellGrid div = divergence(out);
    CellGrid p = solve_pressure(div, cfg, bc, stats);
    const int nx = out.nx, ny = out.ny, nz = out.nz;
    const double ihx = nx, ihy = ny, ihz = nz;
    // interior faces
#pragma omp parallel for schedule(static) num_threads(num_threads())
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 1; i < nx; ++i)
                out.u[out.uidx(i, j, k)] -= (p.at(i, j, k) - p.at(i - 1, j, k)) * ihx;
#pragma omp parallel for schedule(static) num_threads(num_threads())
    for (int k = 0; k < nz; ++k)
        for (int j = 1; j < ny; ++j)
            for (int i = 0; i < nx; ++i)
                out.v[out.vidx(i, j, k)] -= (p.at(i, j, k) - p.at(i, j - 1, k)) * ihy;
#pragma omp parallel for schedule(static) num_threads(num_threads())
    for (int k = 1; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i)
                out.w[out.widx(i, j, k)] -= (p.at(i, j, k) - p.at(i, j, k - 1)) * ihz;
    // open boundary faces use the mirrored ghost pressure (-p interior)
    if (bc.xlo == FaceBC::Open)
        for (int k = 0; k < nz; ++k) for (int j = 0; j < ny; ++j)
            out.u[out.uidx(0, j, k)] -= (p.at(0, j, k) - (-p.at(0, j, k))) * ihx;
    if (bc.xhi == FaceBC::Open)
        for (int k = 0; k < nz; ++k) for (int j = 0; j < ny; ++j)
            out.u[out.uidx(nx, j, k)] -= ((-p.at(nx - 1, j, k)) - p.at(nx - 1, j, k)) * ihx;
    if (bc.ylo == FaceBC::Open)
        for (int k = 0; k < nz; ++k) for (int i = 0; i < nx; ++i)
            out.v[out.vidx(i, 0, k)] -= (p.at(i, 0, k) - (-p.at(i, 0, k))) * ihy;
    if (bc.yhi == FaceBC::Open)
        for (int k = 0; k < nz; ++k) for (int i = 0; i < nx; ++i)
            out.v[out.vidx(i, ny, k)] -= ((-p.at(i, ny - 1, k)) - p.at(i, ny - 1, k)) * ihy;
    if (bc.zlo == FaceBC::Open)
        for (int j = 0; j < ny; ++j) for (int i = 0; i < nx; ++i)
            out.w[out.widx(i, j, 0)] -= (p.at(i, j, 0) - (-p.at(i, j, 0))) * ihz;
    if (bc.zhi == FaceBC::Open)
        for (int j = 0; j < ny; ++j) for (int i = 0; i < nx; ++i)
            out.w[out.widx(i, j, nz)] -= ((-p.at(i, j, nz - 1)) - p.at(i, j, nz - 1)) * ihz;
    return out;
}

}  // namespace hyfluid
