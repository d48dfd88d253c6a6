#pragma once

#include <limits>
#include <string>
#include <vector>

#include "hyfluid/io.h"
#include "hyfluid/mac_grid.h"

namespace hyfluid {

// 10*log10(1/MSE) for [0,1] images; identical images return +inf.
double psnr(const Image& a, const Image& b);

// Mean local SSIM (grayscale = channel average, 11x11 Gaussian window,
// sigma 1.5, K1=0.01, K2=0.03, dynamic range 1).
double ssim(const Image& a, const Image& b);

// Scale-invariant RMSE over the mask gt > threshold; the scale on pred is the
// least-squares fit s* = <pred,gt>/<pred,pred> (0 if pred vanishes on the mask).
double si_rmse(const CellGrid& pred, const CellGrid& gt, double mask_threshold = 0.1);

// One MacCormack advection step of sigma_t by vel, then si_rmse against the
// ground-truth next frame.
double warp_error(const CellGrid& sigma_t, const CellGrid& sigma_next_gt, const MacGrid& vel,
                  double dt, double mask_threshold = 0.1);

struct FrameMetrics {
    int frame = 0;
    double psnr = 0.0;
    double ssim = 0.0;
    double si_rmse = 0.0;
    double warp_error = 0.0;
};

void write_metrics_csv(const std::string& path, const std::vector<FrameMetrics>& rows);

}  // namespace hyfluid
