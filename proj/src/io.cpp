#include "hyfluid/io.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace hyfluid {

namespace {
void check(bool ok, const std::string& msg) {
    if (!ok) throw std::runtime_error(msg);
}
std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    check(os.good(), "cannot open for writing: " + path);
    return os;
}
std::ifstream open_in(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    check(is.good(), "cannot open for reading: " + path);
    return is;
}
void write_magic(std::ostream& os, const char* m) { os.write(m, 4); }
void expect_magic(std::istream& is, const char* m, const std::string& path) {
    char buf[4];
    is.read(buf, 4);
    check(is.good() && std::equal(buf, buf + 4, m), "bad magic in " + path);
}
}  // namespace

void write_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
std::uint32_t read_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
void write_f32(std::ostream& os, float v) { os.write(reinterpret_cast<const char*>(&v), 4); }
float read_f32(std::istream& is) {
    float v = 0.f;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
void write_f32_array(std::ostream& os, const float* p, std::size_t n) {
    os.write(reinterpret_cast<const char*>(p), (std::streamsize)(n * 4));
}
void read_f32_array(std::istream& is, float* p, std::size_t n) {
    is.read(reinterpret_cast<char*>(p), (std::streamsize)(n * 4));
}

double Image::sample(double px, double py, int c) const {
    double x = std::clamp(px - 0.5, 0.0, (double)width - 1.0);
    double y = std::clamp(py - 0.5, 0.0, (double)height - 1.0);
    int x0 = std::min((int)x, width - 2 >= 0 ? width - 2 : 0);
    int y0 = std::min((int)y, height - 2 >= 0 ? height - 2 : 0);
    int x1 = std::min(x0 + 1, width - 1), y1 = std::min(y0 + 1, height - 1);
    double fx = x - x0, fy = y - y0;
    return (at(y0, x0, c) * (1 - fx) + at(y0, x1, c) * fx) * (1 - fy) +
           (at(y1, x0, c) * (1 - fx) + at(y1, x1, c) * fx) * fy;
}

void write_ppm(const std::string& path, const Image& img) {
    check(img.channels == 1 || img.channels == 3, "ppm needs 1 or 3 channels");
    std::ofstream os = open_out(path);
    os << "P6\n" << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> row((std::size_t)img.width * 3);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) {
                float v = img.at(y, x, img.channels == 1 ? 0 : c);
                row[(std::size_t)x * 3 + c] =
                    (unsigned char)std::lround(std::clamp(v, 0.f, 1.f) * 255.f);
            }
        os.write(reinterpret_cast<const char*>(row.data()), (std::streamsize)row.size());
    }
    check(os.good(), "write failed: " + path);
}

Image read_ppm(const std::string& path) {
    std::ifstream is = open_in(path);
    std::string magic;
    int w, h, maxv;
    is >> magic >> w >> h >> maxv;
    check(magic == "P6" && maxv == 255, "unsupported ppm: " + path);
    is.get();  // single whitespace after header
    Image img(h, w, 3);
    std::vector<unsigned char> row((std::size_t)w * 3);
    for (int y = 0; y < h; ++y) {
        is.read(reinterpret_cast<char*>(row.data()), (std::streamsize)row.size());
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) img.at(y, x, c) = row[(std::size_t)x * 3 + c] / 255.f;
    }
    check(is.good(), "truncated ppm: " + path);
    return img;
}

void write_imgf(const std::string& path, const Image& img) {
    std::ofstream os = open_out(path);
    write_magic(os, "IMGF");
    write_u32(os, (std::uint32_t)img.height);
    write_u32(os, (std::uint32_t)img.width);
    write_u32(os, (std::uint32_t)img.channels);
    write_f32_array(os, img.data.data(), img.data.size());
    check(os.good(), "write failed: " + path);
}

Image read_imgf(const std::string& path) {
    std::ifstream is = open_in(path);
    expect_magic(is, "IMGF", path);
    int h = (int)read_u32(is), w = (int)read_u32(is), c = (int)read_u32(is);
    check(h > 0 && w > 0 && c > 0, "bad imgf header: " + path);
    Image img(h, w, c);
    read_f32_array(is, img.data.data(), img.data.size());
    check(is.good(), "truncated imgf: " + path);
    return img;
}

namespace {
void write_f32_from_double(std::ostream& os, const std::vector<double>& v) {
    std::vector<float> tmp(v.begin(), v.end());
    write_f32_array(os, tmp.data(), tmp.size());
}
void read_f32_to_double(std::istream& is, std::vector<double>& v) {
    std::vector<float> tmp(v.size());
    read_f32_array(is, tmp.data(), tmp.size());
    std::copy(tmp.begin(), tmp.end(), v.begin());
}
}  // namespace

void write_grd(const std::string& path, const CellGrid& g) {
    std::ofstream os = open_out(path);
    write_magic(os, "GRD1");
    write_u32(os, 0);
    write_u32(os, (std::uint32_t)g.nx);
    write_u32(os, (std::uint32_t)g.ny);
    write_u32(os, (std::uint32_t)g.nz);
    write_u32(os, 1);
    write_f32_from_double(os, g.data);
    check(os.good(), "write failed: " + path);
}

void write_grd(const std::string& path, const MacGrid& g) {
    std::ofstream os = open_out(path);
    write_magic(os, "GRD1");
    write_u32(os, 1);
    write_u32(os, (std::uint32_t)g.nx);
    write_u32(os, (std::uint32_t)g.ny);
    write_u32(os, (std::uint32_t)g.nz);
    write_u32(os, 3);
    write_f32_from_double(os, g.u);
    write_f32_from_double(os, g.v);
    write_f32_from_double(os, g.w);
    check(os.good(), "write failed: " + path);
}

CellGrid read_grd_cell(const std::string& path) {
    std::ifstream is = open_in(path);
    expect_magic(is, "GRD1", path);
    check(read_u32(is) == 0, "not a cell grid: " + path);
    int nx = (int)read_u32(is), ny = (int)read_u32(is), nz = (int)read_u32(is);
    check(read_u32(is) == 1, "bad channel count: " + path);
    CellGrid g(nx, ny, nz);
    read_f32_to_double(is, g.data);
    check(is.good(), "truncated grd: " + path);
    return g;
}

MacGrid read_grd_mac(const std::string& path) {
    std::ifstream is = open_in(path);
    expect_magic(is, "GRD1", path);
    check(read_u32(is) == 1, "not a MAC grid: " + path);
    int nx = (int)read_u32(is), ny = (int)read_u32(is), nz = (int)read_u32(is);
    check(read_u32(is) == 3, "bad channel count: " + path);
    MacGrid g(nx, ny, nz);
    read_f32_to_double(is, g.u);
    read_f32_to_double(is, g.v);
    read_f32_to_double(is, g.w);
    check(is.good(), "truncated grd: " + path);
    return g;
}

}  // namespace hyfluid
