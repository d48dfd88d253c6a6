#include "hyfluid/render.h"

#include <cmath>
#include <stdexcept>

#include "hyfluid/parallel.h"

namespace hyfluid {

void Camera::validate() const {
    // R^T R = I
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            double s = 0.0;
            for (int r = 0; r < 3; ++r) s += rot[r][a] * rot[r][b];
            if (std::fabs(s - (a == b ? 1.0 : 0.0)) > 1e-6)
                throw std::invalid_argument("camera rotation not orthonormal");
        }
    if (!(t_near < t_far)) throw std::invalid_argument("camera near/far bounds invalid");
    if (!(fx > 0) || !(fy > 0)) throw std::invalid_argument("camera focal length invalid");
    if (width <= 0 || height <= 0) throw std::invalid_argument("camera image size invalid");
}

Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double fov_y_rad, int width,
               int height, double t_near, double t_far) {
    Camera cam;
    cam.width = width;
    cam.height = height;
    cam.cx = width * 0.5;
    cam.cy = height * 0.5;
    cam.fy = 0.5 * height / std::tan(0.5 * fov_y_rad);
    cam.fx = cam.fy;
    cam.position = eye;
    cam.t_near = t_near;
    cam.t_far = t_far;
    Vec3 fwd = normalized(target - eye);
    Vec3 right = normalized(cross(fwd, up));
    Vec3 down = cross(fwd, right);  // image y grows downward
    for (int r = 0; r < 3; ++r) {
        cam.rot[r][0] = right[r];
        cam.rot[r][1] = down[r];
        cam.rot[r][2] = fwd[r];
    }
    cam.validate();
    return cam;
}

std::vector<Ray> generate_rays(const Camera& cam, double frame_time, int batch_size,
                               std::mt19937_64& rng) {
    if (batch_size <= 0) throw std::invalid_argument("batch_size must be positive");
    std::uniform_real_distribution<double> ux(0.0, (double)cam.width);
    std::uniform_real_distribution<double> uy(0.0, (double)cam.height);
    std::vector<Ray> rays;
    rays.reserve(batch_size);
    for (int i = 0; i < batch_size; ++i) {
        Ray r;
        r.px = ux(rng);
        r.py = uy(rng);
        r.origin = cam.position;
        r.dir = cam.pixel_ray_dir(r.px, r.py);
        r.t_frame = frame_time;
        r.t_near = cam.t_near;
        r.t_far = cam.t_far;
        r.jitter_seed = rng();
        rays.push_back(r);
    }
    return rays;
}

namespace {

// Intersects [t_near, t_far] with the unit box; false if the overlap is empty.
bool clip_to_box(const Ray& ray, double t_near, double t_far, double& t0, double& t1) {
    t0 = t_near;
    t1 = t_far;
    for (int a = 0; a < 3; ++a) {
        const double o = ray.origin[a], d = ray.dir[a];
        if (std::fabs(d) < 1e-12) {
            if (o < 0.0 || o > 1.0) return false;
            continue;
        }
        double ta = (0.0 - o) / d, tb = (1.0 - o) / d;
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
    }
    return t1 > t0;
}

}  // namespace

Vec3 render_ray(const Ray& ray, const ScalarField4& density, const double radiance[3],
                const RenderConfig& cfg, RayCache* cache) {
    if (cfg.samples_per_ray < 2) throw std::invalid_argument("samples_per_ray must be >= 2");
    if (cache) {
        cache->ts.clear();
        cache->sigma.clear();
        cache->weight.clear();
        cache->alpha = 0.0;
    }
    // segment = [t_near, t_far] clipped to the unit box
    double t0, t1;
    if (!clip_to_box(ray, ray.t_near, ray.t_far, t0, t1)) return {0, 0, 0};
    const int n = cfg.samples_per_ray;
    const double delta = (t1 - t0) / n;
    SplitMix64 jit(ray.jitter_seed);
    double transmittance = 1.0;
    double wsum = 0.0;
    std::vector<double>* ts = cache ? &cache->ts : nullptr;
    if (cache) {
        cache->t0 = t0;
        cache->t1 = t1;
        cache->delta = delta;
    }
    thread_local std::vector<double> local_ts, local_sigma;
    std::vector<double>& tsv = ts ? *ts : local_ts;
    std::vector<double>& sv = cache ? cache->sigma : local_sigma;
    tsv.clear();
    sv.clear();
    for (int i = 0; i < n; ++i) {
        const double xi = cfg.jitter ? jit.uniform() : 0.5;
        const double t = t0 + (i + xi) * delta;
        const Vec3 p = ray.origin + t * ray.dir;
        const double s = density.density(p, ray.t_frame);
        if (!std::isfinite(s))
            throw std::runtime_error("non-finite density sample during rendering");
        const double a = 1.0 - std::exp(-s * delta);
        const double w = transmittance * a;
        transmittance *= std::exp(-s * delta);
        wsum += w;
        tsv.push_back(t);
        sv.push_back(s);
        if (cache) cache->weight.push_back(w);
    }
    if (cache) cache->alpha = wsum;
    return {radiance[0] * wsum, radiance[1] * wsum, radiance[2] * wsum};
}

void backprop_ray(const Ray& ray, const RayCache& cache, const Vec3& dL_drgb,
                  const Field4D& density, const double radiance[3], GradBuffer& grads,
                  double dL_dradiance[3]) {
    const int n = (int)cache.ts.size();
    if (n == 0) return;
    // out_c = Le_c * sum_i w_i
    for (int c = 0; c < 3; ++c) dL_dradiance[c] += dL_drgb[c] * cache.alpha;
    const double g = dL_drgb.x * radiance[0] + dL_drgb.y * radiance[1] + dL_drgb.z * radiance[2];
    if (g == 0.0) return;
    // dS/dsigma_i = delta * (T_i * exp(-sigma_i delta) - sum_{k>i} w_k)
    // with T_i exp(-sigma_i delta) = T_{i+1} recovered from the weights.
    double suffix = 0.0;
    Field4D::Scratch scratch;
    std::vector<double> dsig(n);
    double transmittance = 1.0;
    for (int i = 0; i < n; ++i) {
        const double Tnext = transmittance - cache.weight[i];  // T_i * exp(-sigma_i delta)
        dsig[i] = cache.delta * Tnext;
        transmittance = Tnext;
    }
    for (int i = n - 1; i >= 0; --i) {
        dsig[i] -= cache.delta * suffix;
        suffix += cache.weight[i];
    }
    for (int i = 0; i < n; ++i) {
        const double d = g * dsig[i];
        if (d == 0.0) continue;
        const Vec3 p = ray.origin + cache.ts[i] * ray.dir;
        density.backprop(p, ray.t_frame, &d, grads, scratch);
    }
}

double rendering_loss_targets(const std::vector<Ray>& rays, const std::vector<Vec3>& observed,
                              const Field4D& density, const double radiance[3],
                              const RenderConfig& cfg, GradBuffer& grads, double dL_dradiance[3]) {
    if (rays.size() != observed.size()) throw std::invalid_argument("ray/observation size mismatch");
    const int nr = (int)rays.size();
    const double scale = 1.0 / (3.0 * nr);
    FieldDensity fd(density);
    double loss = 0.0;
    RayCache cache;
    for (int i = 0; i < nr; ++i) {
        Vec3 rgb = render_ray(rays[i], fd, radiance, cfg, &cache);
        Vec3 diff = rgb - observed[i];
        loss += scale * diff.norm2();
        Vec3 dL = 2.0 * scale * diff;
        backprop_ray(rays[i], cache, dL, density, radiance, grads, dL_dradiance);
    }
    return loss;
}

double rendering_loss(const std::vector<Ray>& rays, const Image& frame, const Field4D& density,
                      const double radiance[3], const RenderConfig& cfg, GradBuffer& grads,
                      double dL_dradiance[3]) {
    std::vector<Vec3> obs(rays.size());
    for (std::size_t i = 0; i < rays.size(); ++i) {
        for (int c = 0; c < 3; ++c) {
            int fc = frame.channels == 1 ? 0 : c;
            obs[i][c] = frame.sample(rays[i].px, rays[i].py, fc);
        }
    }
    return rendering_loss_targets(rays, obs, density, radiance, cfg, grads, dL_dradiance);
}

Image render_image(const Camera& cam, double frame_time, const ScalarField4& density,
                   const double radiance[3], const RenderConfig& cfg) {
    Image img(cam.height, cam.width, 3);
    RenderConfig eval_cfg = cfg;
    eval_cfg.jitter = false;
    const int ss = std::max(1, cfg.supersample);
#pragma omp parallel for schedule(static) num_threads(num_threads())
    for (int y = 0; y < cam.height; ++y)
        for (int x = 0; x < cam.width; ++x) {
            Vec3 rgb{0, 0, 0};
            for (int sy = 0; sy < ss; ++sy)
                for (int sx = 0; sx < ss; ++sx) {
                    Ray ray;
                    ray.px = x + (sx + 0.5) / ss;
                    ray.py = y + (sy + 0.5) / ss;
                    ray.origin = cam.position;
                    ray.dir = cam.pixel_ray_dir(ray.px, ray.py);
                    ray.t_frame = frame_time;
                    ray.t_near = cam.t_near;
                    ray.t_far = cam.t_far;
                    rgb += render_ray(ray, density, radiance, eval_cfg);
                }
            rgb = rgb / (double)(ss * ss);
            for (int c = 0; c < 3; ++c) img.at(y, x, c) = (float)rgb[c];
        }
    return img;
}

}  // namespace hyfluid
