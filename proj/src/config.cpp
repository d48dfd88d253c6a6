#include "hyfluid/config.h"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hyfluid {

namespace {

int to_int(const std::string& v) {
    std::size_t pos;
    int r = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("not an integer: " + v);
    return r;
}

double to_double(const std::string& v) {
    std::size_t pos;
    double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("not a number: " + v);
    return r;
}

std::uint64_t to_u64(const std::string& v) {
    std::size_t pos;
    unsigned long long r = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("not an integer: " + v);
    return r;
}

BoundarySpec to_bc(const std::string& v) {
    if (v == "open_top") return BoundarySpec::open_top();
    if (v == "closed") return BoundarySpec::closed_box();
    if (v == "open") return BoundarySpec::all_open();
    throw std::invalid_argument("boundary must be open_top, closed, or open: " + v);
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    auto grid_key = [&](GridConfig& g, const std::string& sub) {
        if (sub == "base_res") g.base_res = to_int(value);
        else if (sub == "finest_res") g.finest_res = to_int(value);
        else if (sub == "time_res_cap") g.time_res_cap = to_int(value);
        else if (sub == "features") g.features_per_vertex = to_int(value);
        else if (sub == "hidden_width") g.hidden_width = to_int(value);
        else if (sub == "hash_cap") g.hash_cap = to_u64(value);
        else return false;
        return true;
    };
    const auto dot = key.find('.');
    const std::string head = key.substr(0, dot);
    const std::string sub = dot == std::string::npos ? "" : key.substr(dot + 1);
    bool ok = false;
    if (head == "grid") {
        // shared spatial/temporal layout for both fields
        ok = grid_key(sigma_grid, sub) && grid_key(vel_grid, sub);
    } else if (head == "loss") {
        ok = true;
        if (sub == "render") train.weights.render = to_double(value);
        else if (sub == "density") train.weights.density = to_double(value);
        else if (sub == "proj") train.weights.proj = to_double(value);
        else if (sub == "laminar") train.weights.laminar = to_double(value);
        else if (sub == "gamma") train.weights.gamma = to_double(value);
        else ok = false;
    } else if (head == "train") {
        ok = true;
        if (sub == "stage1_iters") train.stage1_iters = to_int(value);
        else if (sub == "stage2_iters") train.stage2_iters = to_int(value);
        else if (sub == "stage3_iters") train.stage3_iters = to_int(value);
        else if (sub == "ray_batch") train.ray_batch = to_int(value);
        else if (sub == "point_batch") train.point_batch = to_int(value);
        else if (sub == "samples_per_ray") train.samples_per_ray = to_int(value);
        else if (sub == "lr") train.lr = to_double(value);
        else if (sub == "beta1") train.beta1 = to_double(value);
        else if (sub == "beta2") train.beta2 = to_double(value);
        else if (sub == "eps") train.eps = to_double(value);
        else if (sub == "proj_res") train.proj_res = to_int(value);
        else if (sub == "checkpoint_interval") train.checkpoint_interval = to_int(value);
        else if (sub == "log_interval") train.log_interval = to_int(value);
        else if (sub == "seed") train.seed = to_u64(value);
        else if (sub == "bc") train.bc = to_bc(value);
        else ok = false;
    } else if (head == "solver") {
        ok = true;
        SolverConfig& s = train.solver;
        if (sub == "mg_levels") s.mg_levels = to_int(value);
        else if (sub == "smooth_sweeps") s.smooth_sweeps = to_int(value);
        else if (sub == "omega") s.jacobi_omega = to_double(value);
        else if (sub == "tol") s.tolerance = to_double(value);
        else if (sub == "max_iterations") s.max_iterations = to_int(value);
        else if (sub == "coarse_sweeps") s.coarse_sweeps = to_int(value);
        else ok = false;
        gen.sim.solver = s;
    } else if (head == "vortex") {
        ok = true;
        VortexConfig& v = train.vortex;
        if (sub == "num_particles") v.num_particles = to_int(value);
        else if (sub == "kernel_radius") v.kernel_radius = to_double(value);
        else if (sub == "candidate_pool") v.candidate_pool = to_int(value);
        else if (sub == "stencil_h") v.stencil_h = to_double(value);
        else ok = false;
    } else if (head == "sim") {
        ok = true;
        SimConfig& s = gen.sim;
        if (sub == "res") s.res = to_int(value);
        else if (sub == "num_frames") s.num_frames = to_int(value);
        else if (sub == "dt") s.dt = to_double(value);
        else if (sub == "buoyancy") s.buoyancy = to_double(value);
        else if (sub == "diffusion") s.diffusion = to_double(value);
        else if (sub == "seed") s.seed = to_u64(value);
        else if (sub == "bc") s.bc = to_bc(value);
        else if (sub == "inflow.center_x") s.inflow.center.x = to_double(value);
        else if (sub == "inflow.center_y") s.inflow.center.y = to_double(value);
        else if (sub == "inflow.center_z") s.inflow.center.z = to_double(value);
        else if (sub == "inflow.radius") s.inflow.radius = to_double(value);
        else if (sub == "inflow.density_rate") s.inflow.density_rate = to_double(value);
        else if (sub == "inflow.seed_velocity") s.inflow.seed_velocity = to_double(value);
        else if (sub == "inflow.turbulence") s.inflow.turbulence = to_double(value);
        else ok = false;
    } else if (head == "gen") {
        ok = true;
        if (sub == "extra_frames") gen.extra_frames = to_int(value);
        else if (sub == "image_size") gen.image_size = to_int(value);
        else if (sub == "num_cameras") gen.num_cameras = to_int(value);
        else if (sub == "held_out") gen.held_out = to_int(value);
        else if (sub == "arc_degrees") gen.arc_degrees = to_double(value);
        else if (sub == "fov_deg") gen.fov_deg = to_double(value);
        else if (sub == "cam_radius") gen.cam_radius = to_double(value);
        else if (sub == "cam_height") gen.cam_height = to_double(value);
        else if (sub == "sigma_scale") gen.sigma_scale = to_double(value);
        else if (sub == "samples_per_ray") gen.samples_per_ray = to_int(value);
        else if (sub == "radiance") gen.radiance[0] = gen.radiance[1] = gen.radiance[2] = to_double(value);
        else ok = false;
    } else if (head == "paths") {
        ok = true;
        if (sub == "data_dir") data_dir = value;
        else if (sub == "out_dir") out_dir = value;
        else ok = false;
    }
    if (!ok) throw std::invalid_argument("unknown config key: " + key);
}

void RunConfig::validate() const {
    auto check_grid = [](const GridConfig& g) {
        if (g.base_res < 2 || g.finest_res < g.base_res || g.time_res_cap < 2 ||
            g.features_per_vertex < 1 || g.hidden_width < 1)
            throw std::invalid_argument("invalid grid configuration");
    };
    check_grid(sigma_grid);
    check_grid(vel_grid);
    train.validate();
    if (gen.sim.res < 4 || gen.sim.num_frames < 2 || gen.sim.dt <= 0)
        throw std::invalid_argument("invalid simulation configuration");
    if (gen.image_size < 16 || gen.num_cameras < 2 || gen.held_out < 0 ||
        gen.held_out >= gen.num_cameras || gen.extra_frames < 0)
        throw std::invalid_argument("invalid dataset generation configuration");
    if (train.vortex.num_particles < 1 || train.vortex.kernel_radius <= 0)
        throw std::invalid_argument("invalid vortex configuration");
    if (data_dir.empty() || out_dir.empty())
        throw std::invalid_argument("data_dir and out_dir must be set");
}

RunConfig RunConfig::from_text(const std::string& text) {
    RunConfig c;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key=value");
        try {
            c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const std::exception& e) {
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    c.validate();
    return c;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream is(path);
    if (!is.good()) throw std::runtime_error("cannot read config: " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return from_text(ss.str());
}

}  // namespace hyfluid
