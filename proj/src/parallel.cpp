#include "hyfluid/parallel.h"

#include <cstdlib>
#include <cstring>
#include <omp.h>

namespace hyfluid {

namespace {
int g_threads = -1;
int g_deterministic = -1;
}  // namespace

int num_threads() {
    if (g_threads < 0) {
        const char* env = std::getenv("HYFLUID_THREADS");
        g_threads = env ? std::atoi(env) : 0;
        if (g_threads <= 0) g_threads = omp_get_max_threads();
    }
    return g_threads;
}

bool deterministic_mode() {
    if (g_deterministic < 0) {
        const char* env = std::getenv("HYFLUID_DETERMINISTIC");
        g_deterministic = (env == nullptr || std::strcmp(env, "0") != 0) ? 1 : 0;
    }
    return g_deterministic != 0;
}

void set_num_threads(int n) { g_threads = n; }
void set_deterministic(bool on) { g_deterministic = on ? 1 : 0; }

double det_dot(const double* a, const double* b, std::size_t n) {
    const int nt = num_threads();
    std::vector<double> partial(nt, 0.0);
#pragma omp parallel num_threads(nt)
    {
        const int tid = omp_get_thread_num();
        double s = 0.0;
#pragma omp for schedule(static)
        for (long long i = 0; i < (long long)n; ++i) s += a[i] * b[i];
        partial[tid] = s;
    }
    double s = 0.0;
    for (double p : partial) s += p;
    return s;
}

double det_sum(const double* a, std::size_t n) {
    const int nt = num_threads();
    std::vector<double> partial(nt, 0.0);
#pragma omp parallel num_threads(nt)
    {
        const int tid = omp_get_thread_num();
        double s = 0.0;
#pragma omp for schedule(static)
        for (long long i = 0; i < (long long)n; ++i) s += a[i];
        partial[tid] = s;
    }
    double s = 0.0;
    for (double p : partial) s += p;
    return s;
}

}  // namespace hyfluid
