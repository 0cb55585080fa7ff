#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "shaperec/imaging.hpp"

namespace shaperec {

/// Star-shaped parametric outline: rho(theta) = base_radius * (1 + sum of
/// harmonics - sum of notch dents), plus circular holes given in polar
/// coordinates relative to the shape center. Classes of one group share the
/// global form and differ only in the local alteration parameters.
struct Harmonic {
    int order = 0;
    double amplitude = 0.0;
    double phase = 0.0;
};

struct Notch {
    double theta = 0.0;  // radians
    double depth = 0.0;  // fraction of base radius
    double width = 0.0;  // radians (Gaussian sigma)
};

struct HoleSpec {
    double radial_pos = 0.0;  // center distance, fraction of base_radius
    double theta = 0.0;       // radians
    double radius = 0.0;      // fraction of base_radius
    // Rim modulation: radius(phi) = radius * (1 + sum amp*cos(order*phi + phase)),
    // phi measured in the shape frame.
    std::vector<Harmonic> rim;
};

struct ShapeSpec {
    int group = 1;  // 1..6
    int class_id = 1;  // 1..4
    double base_radius = 70.0;
    std::vector<Harmonic> harmonics;
    std::vector<Notch> notches;
    std::vector<HoleSpec> holes;
};

struct Pose {
    double rotation_deg = 0.0;
    double scale = 1.0;
    double tx = 0.0;
    double ty = 0.0;
    // Orientation and depth of the hole rim texture. Rim roughness is a
    // surface property that varies freely between exemplars of a class,
    // unlike the outline which follows the object's orientation.
    double rim_phase = 0.0;  // radians
    double rim_gain = 1.0;   // multiplies all rim amplitudes
};

struct NoiseSpec {
    std::optional<double> snr_db;  // Gaussian noise level, if any
    std::optional<double> blur;    // blur fraction, if any
    std::uint64_t seed = 0;
};

/// Built-in parametric families for the six groups, four classes each.
ShapeSpec shape_spec(int group, int class_id);

constexpr int kCanvasSize = 256;

/// Boundary radius at polar angle theta (radians), scale 1, unrotated.
double shape_rho(const ShapeSpec& spec, double theta);

BinaryImage gen_base_shape(const ShapeSpec& spec, int canvas = kCanvasSize);

/// Re-renders the shape analytically at the posed parameters; errors if the
/// posed shape would clip the canvas.
BinaryImage apply_pose(const ShapeSpec& spec, const Pose& pose, int canvas = kCanvasSize);

BinaryImage add_gaussian_noise(const BinaryImage& image, double snr_db, std::uint64_t seed);
BinaryImage add_blur(const BinaryImage& image, double fraction);

// --- Dataset generation -----------------------------------------------------

struct DatasetItem {
    int group = 1;
    int class_id = 1;
    int exemplar_id = 0;
    std::string split;  // "train" | "test"
    Pose pose;
    std::optional<double> snr_db;
    std::optional<double> blur;
    std::uint64_t noise_seed = 0;
    std::string file;  // relative PGM path
};

struct DatasetSpec {
    int group = 1;
    int train_per_class = 20;
    int test_per_class = 50;
    std::vector<double> noise_levels_db = {20.0, 25.0, 30.0};
    double blur_fraction = 0.05;
    std::uint64_t master_seed = 1;
};

struct Dataset {
    DatasetSpec spec;
    std::vector<DatasetItem> items;
};

/// Renders one manifest item (pure function of its recorded parameters).
BinaryImage render_item(const DatasetItem& item);

/// Builds the manifest without touching the filesystem.
Dataset plan_dataset(const DatasetSpec& spec);

/// plan_dataset + write PGMs and manifest.jsonl under out_dir.
Dataset gen_dataset(const DatasetSpec& spec, const std::string& out_dir);

Dataset load_manifest(const std::string& dir);
void save_manifest(const Dataset& dataset, const std::string& dir);

}  // namespace shaperec
