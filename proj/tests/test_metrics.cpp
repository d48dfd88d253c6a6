#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "hyfluid/metrics.h"

using namespace hyfluid;

namespace {

Image random_image(int w, int h, std::uint32_t seed) {
    Image img(h, w, 3);
    std::mt19937 rng(seed);
    std::uniform_real_distribution<float> u(0.f, 1.f);
    for (float& v : img.data) v = u(rng);
    return img;
}

CellGrid random_grid(int n, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
    CellGrid g(n, n, n);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    for (double& v : g.data) v = u(rng);
    return g;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("psnr hits 20 dB at mse 0.01 and is symmetric") {
    Image a(8, 8, 3), b(8, 8, 3);
    for (float& v : a.data) v = 0.4f;
    for (float& v : b.data) v = 0.5f;  // uniform offset 0.1 -> MSE 0.01
    CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-6));  // f32 storage rounding
    CHECK(psnr(b, a) == doctest::Approx(psnr(a, b)));
    CHECK(std::isinf(psnr(a, a)));
}

TEST_CASE("psnr matches a direct mse computation") {
    Image a = random_image(9, 7, 1);
    Image b = random_image(9, 7, 2);
    double mse = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const float d = a.data[i] - b.data[i];
        mse += d * d;
    }
    mse /= a.data.size();
    CHECK(psnr(a, b) == doctest::Approx(10.0 * std::log10(1.0 / mse)).epsilon(1e-6));
    Image wrong(8, 7, 3);
    CHECK_THROWS(psnr(a, wrong));  // shape mismatch
}

TEST_CASE("ssim of identical images is 1") {
    Image a = random_image(16, 16, 3);
    CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ssim of constant images follows the closed form") {
    const double m1 = 0.3, m2 = 0.7, C1 = 0.01 * 0.01;
    Image a(12, 12, 3), b(12, 12, 3);
    for (float& v : a.data) v = (float)m1;
    for (float& v : b.data) v = (float)m2;
    // zero variance and covariance: only the luminance term survives
    const double want = (2 * m1 * m2 + C1) / (m1 * m1 + m2 * m2 + C1);
    CHECK(ssim(a, b) == doctest::Approx(want).epsilon(1e-6));  // f32 storage rounding
}

TEST_CASE("ssim degrades monotonically with noise and stays symmetric") {
    Image a = random_image(20, 20, 5);
    std::mt19937 rng(6);
    std::normal_distribution<float> n1(0.f, 0.02f), n2(0.f, 0.15f);
    Image b = a, c = a;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        b.data[i] = std::clamp(a.data[i] + n1(rng), 0.f, 1.f);
        c.data[i] = std::clamp(a.data[i] + n2(rng), 0.f, 1.f);
    }
    const double sb = ssim(a, b), sc = ssim(a, c);
    CHECK(sb > sc);
    CHECK(sb < 1.0);
    CHECK(sb > 0.8);
    CHECK(ssim(b, a) == doctest::Approx(sb).epsilon(1e-12));
}

TEST_CASE("si_rmse is exactly scale invariant") {
    CellGrid gt = random_grid(10, 11, 0.0, 1.0);
    CellGrid pred = gt;
    for (double& v : pred.data) v *= 2.0;
    CHECK(si_rmse(pred, gt) == doctest::Approx(0.0).epsilon(1e-12));
    for (double& v : pred.data) v *= 0.05;
    CHECK(si_rmse(pred, gt) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("zero prediction scores the masked rms of the ground truth") {
    CellGrid gt = random_grid(8, 13, 0.0, 1.0);
    CellGrid pred(8, 8, 8);
    double sum = 0.0;
    int count = 0;
    for (double v : gt.data)
        if (v > 0.1) {
            sum += v * v;
            ++count;
        }
    REQUIRE(count > 0);
    CHECK(si_rmse(pred, gt) == doctest::Approx(std::sqrt(sum / count)).epsilon(1e-12));
}

TEST_CASE("empty mask throws") {
    CellGrid gt(6, 6, 6);  // all zeros, nothing above threshold
    CellGrid pred = random_grid(6, 17);
    CHECK_THROWS(si_rmse(pred, gt));
}

TEST_CASE("warp error vanishes for a static field under zero velocity") {
    CellGrid sigma = random_grid(12, 19, 0.0, 1.0);
    MacGrid vel(12, 12, 12);
    CHECK(warp_error(sigma, sigma, vel, 0.1) < 1e-6);
}

TEST_CASE("warp error is small when velocity explains the motion") {
    const int n = 24;
    auto blob = [&](double cx) {
        CellGrid g(n, n, n);
        for (int k = 0; k < n; ++k)
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < n; ++i) {
                    const Vec3 x = g.cell_center(i, j, k);
                    const double dx = x.x - cx, dy = x.y - 0.5, dz = x.z - 0.5;
                    g.at(i, j, k) = std::exp(-(dx * dx + dy * dy + dz * dz) / (2 * 0.1 * 0.1));
                }
        return g;
    };
    CellGrid t0 = blob(0.4), t1 = blob(0.45);
    MacGrid vel(n, n, n);
    for (double& u : vel.u) u = 0.5;  // moves 0.05 in dt = 0.1
    MacGrid still(n, n, n);
    CHECK(warp_error(t0, t1, vel, 0.1) < warp_error(t0, t1, still, 0.1));
}

TEST_CASE("metrics csv has a header and one row per frame") {
    namespace fs = std::filesystem;
    std::vector<FrameMetrics> rows(2);
    rows[0] = {0, 31.5, 0.95, 0.1, 0.2};
    rows[1] = {1, 29.0, 0.9, 0.12, 0.25};
    const std::string p = (fs::temp_directory_path() / "t_metrics.csv").string();
    write_metrics_csv(p, rows);
    std::ifstream is(p);
    std::string line;
    std::getline(is, line);
    CHECK(line == "frame,psnr,ssim,si_rmse,warp_error");
    int n = 0;
    while (std::getline(is, line))
        if (!line.empty()) ++n;
    CHECK(n == 2);
}

}  // TEST_SUITE
