#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hyfluid/mac_grid.h"

namespace hyfluid {

// Planar float image: channels * (height * width), row-major within a plane.
struct Image {
    int height = 0, width = 0, channels = 0;
    std::vector<float> data;

    Image() = default;
    Image(int h, int w, int c) : height(h), width(w), channels(c), data((std::size_t)h * w * c, 0.f) {}
    float& at(int y, int x, int c) { return data[((std::size_t)c * height + y) * width + x]; }
    float at(int y, int x, int c) const { return data[((std::size_t)c * height + y) * width + x]; }
    // Bilinear sample at continuous pixel coordinates (px, py), clamped.
    double sample(double px, double py, int c) const;
};

// PPM (P6, 8-bit). Single-channel images are replicated to RGB on write;
// reads always produce 3 channels.
void write_ppm(const std::string& path, const Image& img);
Image read_ppm(const std::string& path);

// Raw float image: "IMGF", u32 height, width, channels, then planar f32 data.
void write_imgf(const std::string& path, const Image& img);
Image read_imgf(const std::string& path);

// Grid container format: "GRD1", u32 kind (0 = cell scalar, 1 = MAC),
// u32 nx, ny, nz, u32 channels, f32 data little-endian x-fastest.
void write_grd(const std::string& path, const CellGrid& g);
void write_grd(const std::string& path, const MacGrid& g);
CellGrid read_grd_cell(const std::string& path);
MacGrid read_grd_mac(const std::string& path);

// Low-level little-endian helpers shared by the binary formats.
void write_u32(std::ostream& os, std::uint32_t v);
std::uint32_t read_u32(std::istream& is);
void write_f32(std::ostream& os, float v);
float read_f32(std::istream& is);
void write_f32_array(std::ostream& os, const float* p, std::size_t n);
void read_f32_array(std::istream& is, float* p, std::size_t n);

}  // namespace hyfluid
