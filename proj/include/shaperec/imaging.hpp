#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace shaperec {

/// Grayscale raster, values 0..255, row-major.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

/// Binary raster: 1 = foreground (object), 0 = background. Row-major.
struct BinaryImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // each 0 or 1

    BinaryImage() = default;
    BinaryImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, 0) {}

    std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
    void set(int x, int y, std::uint8_t v) { pixels[static_cast<std::size_t>(y) * width + x] = v; }
    bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
    std::size_t foreground_count() const;
};

enum class ContourKind { OuterBoundary, Hole };

/// Closed pixel contour: consecutive points (cyclically) are 8-neighbors.
struct Contour {
    std::vector<std::pair<int, int>> points;  // (x, y)
    ContourKind kind = ContourKind::OuterBoundary;
};

struct ContourSet {
    Contour boundary;
    std::vector<Contour> holes;
    double centroid_x = 0.0;
    double centroid_y = 0.0;
    // Per-hole centroids (over the hole's background cells); hole profiles
    // are measured from these so a hole's spectrum reflects its shape, not
    // its position inside the object.
    std::vector<std::pair<double, double>> hole_centroids;
};

/// Connected-component census: 8-connectivity for foreground,
/// 4-connectivity for background. Holes are background components that do
/// not touch the image border.
struct RegionLabeling {
    int component_count = 0;
    std::vector<std::int32_t> labels;            // per pixel, 0 = background, 1..N = component
    std::vector<std::size_t> component_sizes;    // indexed by label-1
    std::vector<std::vector<std::size_t>> hole_sizes;  // per component, one entry per hole
    int hole_count(int component) const { return static_cast<int>(hole_sizes[component].size()); }
};

struct TraceOptions {
    // Components and holes below this pixel count are treated as speckle
    // and ignored (isolated noise pixels would otherwise abort recognition).
    std::size_t min_region_size = 4;
};

// --- PGM I/O ------------------------------------------------------------

GrayImage load_pgm_gray(const std::vector<std::uint8_t>& bytes);
BinaryImage load_pgm(const std::vector<std::uint8_t>& bytes, int threshold = 128);
std::vector<std::uint8_t> save_pgm(const BinaryImage& image);  // P5, foreground = 255
std::vector<std::uint8_t> save_pgm(const GrayImage& image);

GrayImage load_pgm_file(const std::string& path);
void save_pgm_file(const BinaryImage& image, const std::string& path);

BinaryImage binarize(const GrayImage& image, int threshold);

/// Nearest-neighbor raster rotation about the image center (same canvas).
BinaryImage rotate_image(const BinaryImage& image, double degrees);

// --- Regions and contours ------------------------------------------------

RegionLabeling extract_regions(const BinaryImage& image);

/// Moore-neighbor tracing with Jacob's stopping criterion.
/// Requires exactly one foreground component of at least
/// TraceOptions::min_region_size pixels; smaller regions are ignored.
ContourSet trace_contours(const BinaryImage& image, const TraceOptions& options = {});

}  // namespace shaperec
