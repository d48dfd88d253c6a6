#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hyfluid/mac_grid.h"
#include "hyfluid/vec3.h"

namespace hyfluid {

struct GridConfig {
    int base_res = 8;
    int finest_res = 64;
    int time_res_cap = 32;
    int features_per_vertex = 2;
    int hidden_width = 32;
    int output_dim = 1;            // 1 = density, 3 = velocity
    bool density_head = true;      // softplus on the output
    double output_bias = 0.0;      // value of the pre-head output when all features are 0
    std::size_t hash_cap = 0;      // 0 = dense storage; else capped-hash table per level

    static GridConfig density_default() {
        GridConfig c;
        c.output_dim = 1; c.density_head = true; c.output_bias = -2.0;
        return c;
    }
    static GridConfig velocity_default() {
        GridConfig c;
        c.output_dim = 3; c.density_head = false; c.output_bias = 0.0;
        return c;
    }
};

struct Level4D {
    int nx = 0, ny = 0, nz = 0, nt = 0;
    std::size_t param_offset = 0;   // into the flat parameter vector
    std::size_t table_size = 0;     // vertex slots (dense count or hash cap)
    bool hashed = false;
};

// Gradient accumulator over the flat parameter vector. Tracks touched indices
// with an epoch stamp so clearing and sparse optimizer updates stay cheap.
struct GradBuffer {
    std::vector<double> g;
    std::vector<std::uint32_t> stamp;
    std::vector<std::size_t> touched;
    std::uint32_t epoch = 1;

    void resize(std::size_t n) {
        g.assign(n, 0.0);
        stamp.assign(n, 0);
        touched.clear();
        epoch = 1;
    }
    void add(std::size_t i, double v) {
        if (stamp[i] != epoch) {
            stamp[i] = epoch;
            g[i] = v;
            touched.push_back(i);
        } else {
            g[i] += v;
        }
    }
    double get(std::size_t i) const { return stamp[i] == epoch ? g[i] : 0.0; }
    void clear() {
        touched.clear();
        if (++epoch == 0) {  // stamp wrap
            std::fill(stamp.begin(), stamp.end(), 0);
            epoch = 1;
        }
    }
    // Adds other into this (fixed order; used for per-worker reduction).
    void merge(const GradBuffer& other) {
        for (std::size_t i : other.touched) add(i, other.g[i]);
    }
    void merge_scaled(const GradBuffer& other, double s) {
        for (std::size_t i : other.touched) add(i, s * other.g[i]);
    }
    void scale_touched(double s) {
        for (std::size_t i : touched) g[i] *= s;
    }
};

// Continuous optimizable field over [0,1]^3 x [0,1]: multiresolution 4D
// feature grids (F scalars per lattice vertex) concatenated across levels and
// decoded by one hidden layer with a softplus activation.
class Field4D {
public:
    static constexpr int kMaxLevels = 8;
    static constexpr int kMaxFeat = 32;   // F * levels
    static constexpr int kMaxHidden = 64;

    struct Scratch {
        // per level: 16 corner slots + weights
        std::array<std::size_t, 16 * kMaxLevels> corner{};
        std::array<double, 16 * kMaxLevels> weight{};
        std::array<double, kMaxFeat> feat{};
        std::array<double, kMaxHidden> pre{}, act{};
        std::array<double, 3> out{};
    };

    Field4D() = default;
    explicit Field4D(const GridConfig& cfg, std::uint64_t init_seed = 1);

    const GridConfig& config() const { return cfg_; }
    const std::vector<Level4D>& levels() const { return levels_; }
    int feature_dim() const { return (int)levels_.size() * cfg_.features_per_vertex; }
    std::size_t num_params() const { return params_.size(); }
    std::size_t feature_param_count() const { return feature_count_; }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    // Point query. Out-of-domain inputs clamp to the boundary; non-finite
    // inputs throw. Writes output_dim values into out.
    void query(const Vec3& x, double t, double* out) const;
    void query(const Vec3& x, double t, double* out, Scratch& s) const;

    // Chain rule of dL_dout (output_dim values) into grads for every touched
    // feature vertex and the decoder. Recomputes the forward pass internally.
    void backprop(const Vec3& x, double t, const double* dL_dout, GradBuffer& grads) const;
    void backprop(const Vec3& x, double t, const double* dL_dout, GradBuffer& grads,
                  Scratch& s) const;

    // Central-difference partials of each output channel:
    // partials[axis][channel], axis 0..2 spatial, 3 temporal.
    void query_partials(const Vec3& x, double t, double hs, double ht,
                        double partials[4][3]) const;
    double default_spatial_step() const { return hs_default_; }
    double default_time_step() const { return ht_default_; }

    // Backprop for a loss built on stencil partials: dL_dpartials[axis][channel].
    void backprop_partials(const Vec3& x, double t, double hs, double ht,
                           const double dL_dpartials[4][3], GradBuffer& grads) const;

    std::size_t vertex_slot(int level, int i, int j, int k, int t) const;
    std::size_t w1_offset() const { return w1_; }
    std::size_t b1_offset() const { return b1_; }
    std::size_t w2_offset() const { return w2_; }
    std::size_t b2_offset() const { return b2_; }

    void save(std::ostream& os) const;     // header + f32 features + f32 decoder
    void load(std::istream& is);           // must match this config's shape

private:
    GridConfig cfg_;
    std::vector<Level4D> levels_;
    std::vector<double> params_;
    std::size_t feature_count_ = 0;
    std::size_t w1_ = 0, b1_ = 0, w2_ = 0, b2_ = 0;  // decoder offsets
    double hs_default_ = 0.0, ht_default_ = 0.0;

    void forward(const Vec3& x, double t, Scratch& s) const;
};

// Scalar and vector field interfaces used by the renderer, simulator, and
// evaluation paths (both learned fields and ground-truth grids implement them).
class ScalarField4 {
public:
    virtual ~ScalarField4() = default;
    virtual double density(const Vec3& x, double t) const = 0;
};

class VectorField4 {
public:
    virtual ~VectorField4() = default;
    virtual Vec3 velocity(const Vec3& x, double t) const = 0;
};

class FieldDensity : public ScalarField4 {
public:
    explicit FieldDensity(const Field4D& f) : f_(&f) {}
    double density(const Vec3& x, double t) const override {
        double v;
        f_->query(x, t, &v);
        return v;
    }

private:
    const Field4D* f_;
};

class FieldVelocity : public VectorField4 {
public:
    explicit FieldVelocity(const Field4D& f) : f_(&f) {}
    Vec3 velocity(const Vec3& x, double t) const override {
        double v[3];
        f_->query(x, t, v);
        return {v[0], v[1], v[2]};
    }

private:
    const Field4D* f_;
};

// Evaluates a continuous velocity field at every MAC face center at the given time.
void sample_to_mac(const VectorField4& field, double t, MacGrid& out);

// Checkpoint container: "HYF1", version, density grid, velocity grid, f32[3] radiance.
void save_checkpoint(const std::string& path, const Field4D& sigma, const Field4D& vel,
                     const double radiance[3]);
void load_checkpoint(const std::string& path, Field4D& sigma, Field4D& vel, double radiance[3]);

}  // namespace hyfluid
