#include "hyfluid/metrics.h"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "hyfluid/sim.h"

namespace hyfluid {

double psnr(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height || a.channels != b.channels)
        throw std::invalid_argument("psnr: shape mismatch");
    double mse = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        mse += d * d;
    }
    mse /= a.data.size();
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

namespace {

std::vector<double> to_gray(const Image& img) {
    std::vector<double> g((std::size_t)img.width * img.height, 0.0);
    for (int c = 0; c < img.channels; ++c)
        for (std::size_t i = 0; i < g.size(); ++i)
            g[i] += img.data[(std::size_t)c * g.size() + i] / img.channels;
    return g;
}

}  // namespace

double ssim(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height || a.channels != b.channels)
        throw std::invalid_argument("ssim: shape mismatch");
    constexpr int win = 11;
    if (a.width < win || a.height < win) throw std::invalid_argument("ssim: image smaller than window");
    constexpr double sigma = 1.5, K1 = 0.01, K2 = 0.03;
    constexpr double C1 = K1 * K1, C2 = K2 * K2;
    double kernel[win];
    double ksum = 0.0;
    for (int i = 0; i < win; ++i) {
        const double d = i - win / 2;
        kernel[i] = std::exp(-d * d / (2.0 * sigma * sigma));
        ksum += kernel[i];
    }
    for (double& k : kernel) k /= ksum;

    const std::vector<double> ga = to_gray(a), gb = to_gray(b);
    const int W = a.width, H = a.height;
    double total = 0.0;
    int count = 0;
    for (int y = win / 2; y < H - win / 2; ++y)
        for (int x = win / 2; x < W - win / 2; ++x) {
            double mu_a = 0, mu_b = 0, aa = 0, bb = 0, ab = 0;
            for (int dy = 0; dy < win; ++dy)
                for (int dx = 0; dx < win; ++dx) {
                    const double w = kernel[dy] * kernel[dx];
                    const std::size_t idx =
                        (std::size_t)(y + dy - win / 2) * W + (x + dx - win / 2);
                    const double va = ga[idx], vb = gb[idx];
                    mu_a += w * va;
                    mu_b += w * vb;
                    aa += w * va * va;
                    bb += w * vb * vb;
                    ab += w * va * vb;
                }
            const double var_a = aa - mu_a * mu_a, var_b = bb - mu_b * mu_b;
            const double cov = ab - mu_a * mu_b;
            total += ((2 * mu_a * mu_b + C1) * (2 * cov + C2)) /
                     ((mu_a * mu_a + mu_b * mu_b + C1) * (var_a + var_b + C2));
            ++count;
        }
    return total / count;
}

double si_rmse(const CellGrid& pred, const CellGrid& gt, double mask_threshold) {
    if (pred.nx != gt.nx || pred.ny != gt.ny || pred.nz != gt.nz)
        throw std::invalid_argument("si_rmse: resolution mismatch");
    double pg = 0.0, pp = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        if (gt.data[i] <= mask_threshold) continue;
        pg += pred.data[i] * gt.data[i];
        pp += pred.data[i] * pred.data[i];
        ++n;
    }
    if (n == 0) throw std::runtime_error("si_rmse: empty mask");
    const double s = pp > 0.0 ? pg / pp : 0.0;
    double err = 0.0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        if (gt.data[i] <= mask_threshold) continue;
        const double d = s * pred.data[i] - gt.data[i];
        err += d * d;
    }
    return std::sqrt(err / n);
}

double warp_error(const CellGrid& sigma_t, const CellGrid& sigma_next_gt, const MacGrid& vel,
                  double dt, double mask_threshold) {
    CellGrid warped = advect_maccormack(sigma_t, vel, dt);
    return si_rmse(warped, sigma_next_gt, mask_threshold);
}

void write_metrics_csv(const std::string& path, const std::vector<FrameMetrics>& rows) {
    std::ofstream os(path);
    if (!os.good()) throw std::runtime_error("cannot write " + path);
    os << "frame,psnr,ssim,si_rmse,warp_error\n";
    for (const auto& r : rows)
        os << r.frame << ',' << r.psnr << ',' << r.ssim << ',' << r.si_rmse << ','
           << r.warp_error << '\n';
}

}  // namespace hyfluid
