#include "shaperec/datagen.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "shaperec/errors.hpp"
#include "shaperec/mlp.hpp"  // Rng
#include "json.hpp"

namespace shaperec {

namespace {

double wrap_angle(double a) {
    a = std::fmod(a, 2.0 * M_PI);
    if (a > M_PI) a -= 2.0 * M_PI;
    if (a < -M_PI) a += 2.0 * M_PI;
    return a;
}

// Stable per-item seed derivation from the master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) {
    Rng rng(master ^ (a * 0x9e3779b97f4a7c15ULL) ^ (b * 0xc2b2ae3d27d4eb4fULL) ^
            (c * 0x165667b19e3779f9ULL));
    return rng.next_u64();
}

}  // namespace

ShapeSpec shape_spec(int group, int class_id) {
    if (group < 1 || group > 6) throw InputError("shape_spec: group must be 1..6");
    if (class_id < 1 || class_id > 4) throw InputError("shape_spec: class must be 1..4");
    const double c = static_cast<double>(class_id - 1);
    ShapeSpec s;
    s.group = group;
    s.class_id = class_id;
    switch (group) {
        case 1:
            // Plate with a rough boundary and one rough-rimmed hole; classes
            // alter the overall strength of both modulations.
            {
                s.base_radius = 58.0;
                // Classes are roughness grades: almost the whole modulation
                // scales with the class, doubling per grade, so every busy
                // spectrum index carries class information. A few shared
                // harmonics keep even distant grades from separating fully.
                const double b = 0.20 * std::pow(2.0, c);
                s.harmonics = {{1, 0.03, 0.3},
                               {2, 0.035 * b, 0.9},  {3, 0.030 * b, 1.7},  {4, 0.030 * b, 2.1},
                               {5, 0.028 * b, 2.4},  {6, 0.025 * b, 0.8},
                               {7, 0.018 * b, 0.5},  {8, 0.0145 * b, 2.5}, {9, 0.0145 * b, 1.3},
                               {10, 0.015, 1.0},
                               {11, 0.0145 * b, 2.8}, {13, 0.0145 * b, 0.2}, {15, 0.0145 * b, 1.1},
                               {17, 0.0145 * b, 2.0}, {18, 0.015, 2.6}, {19, 0.0145 * b, 2.2},
                               {21, 0.015, 1.5},
                               {23, 0.0145 * b, 0.7}, {25, 0.015, 0.4}, {27, 0.0145 * b, 1.8},
                               {28, 0.015, 1.9}, {29, 0.018 * b, 1.2}, {30, 0.018 * b, 0.6},
                               {31, 0.0145 * b, 2.9}};
                // The order-1 rim term makes the hole a lopsided crescent;
                // its profile survives hole-centroid referencing only as a
                // residual, which keeps the lowest spectrum indexes busy.
                const double g = 0.25 + 0.30 * c;
                s.holes = {{0.12, 0.0, 0.28,
                            {{1, 0.12 + 0.015 * c, 0.8},
                             {2, 0.09 * g, 0.3}, {3, 0.09 * g, 1.7}, {4, 0.09 * g, 2.9},
                             {5, 0.085 * g, 1.2}, {6, 0.085 * g, 0.1},
                             {7, 0.045, 2.6}, {9, 0.045, 2.1},
                             {11, 0.045, 0.9}, {13, 0.05, 0.6}, {15, 0.05, 1.9}}}};
            }
            break;
        case 2:
            // Gear-like outline, no holes; classes alter the tooth depth.
            s.base_radius = 65.0;
            s.harmonics = {{8, 0.085 + 0.018 * c, 0.0}, {2, 0.05, 0.5}};
            break;
        case 3:
            // 4-fold symmetric plate (exact under 90-degree rotations).
            s.base_radius = 68.0;
            s.harmonics = {{4, 0.12, 0.0}, {8, 0.020 + 0.012 * c, 0.0}};
            break;
        case 4:
            // Tool silhouette with an off-center hole and a notch.
            s.base_radius = 60.0;
            s.harmonics = {{1, 0.18, 0.0}, {2, 0.10, 0.8}, {3, 0.05, 2.2}};
            s.notches = {{M_PI, 0.06 + 0.02 * c, 0.3}};
            s.holes = {{0.45, M_PI / 2, 0.12}};
            break;
        case 5:
            // Plate with two holes of different sizes.
            s.base_radius = 68.0;
            s.harmonics = {{2, 0.08, 0.0}, {4, 0.05, 1.0}, {3, 0.015 + 0.012 * c, 1.9}};
            s.holes = {{0.40, 0.0, 0.14, {{2, 0.05 + 0.05 * c, 0.0}}},
                       {0.40, M_PI, 0.20, {{2, 0.25, 0.0}}}};
            break;
        case 6:
            // Elongated plate with a side notch; classes alter its depth.
            s.base_radius = 66.0;
            s.harmonics = {{2, 0.16, 0.0}};
            s.notches = {{0.5, 0.08 + 0.02 * c, 0.25}};
            break;
    }
    return s;
}

double shape_rho(const ShapeSpec& spec, double theta) {
    double f = 1.0;
    for (const auto& h : spec.harmonics) f += h.amplitude * std::cos(h.order * theta + h.phase);
    for (const auto& nt : spec.notches) {
        double d = wrap_angle(theta - nt.theta) / nt.width;
        f -= nt.depth * std::exp(-d * d);
    }
    return spec.base_radius * f;
}

BinaryImage gen_base_shape(const ShapeSpec& spec, int canvas) {
    return apply_pose(spec, Pose{}, canvas);
}

BinaryImage apply_pose(const ShapeSpec& spec, const Pose& pose, int canvas) {
    if (pose.scale <= 0) throw InputError("apply_pose: scale must be positive");
    double max_amp = 0.0;
    for (const auto& h : spec.harmonics) max_amp += std::abs(h.amplitude);
    double reach = spec.base_radius * (1.0 + max_amp) * pose.scale +
                   std::hypot(pose.tx, pose.ty);
    if (reach > (canvas - 1) / 2.0 - 1.0)
        throw InputError("apply_pose: posed shape would clip the canvas");

    const double alpha = pose.rotation_deg * M_PI / 180.0;
    const double cx = (canvas - 1) / 2.0 + pose.tx;
    const double cy = (canvas - 1) / 2.0 + pose.ty;

    struct HoleXY {
        double x, y, r;
        const std::vector<Harmonic>* rim;
    };
    std::vector<HoleXY> holes;
    for (const auto& hs : spec.holes) {
        double a = hs.theta + alpha;
        holes.push_back({cx + pose.scale * spec.base_radius * hs.radial_pos * std::cos(a),
                         cy + pose.scale * spec.base_radius * hs.radial_pos * std::sin(a),
                         pose.scale * spec.base_radius * hs.radius, &hs.rim});
    }

    BinaryImage img(canvas, canvas);
    for (int y = 0; y < canvas; ++y) {
        for (int x = 0; x < canvas; ++x) {
            double dx = x - cx, dy = y - cy;
            double r = std::hypot(dx, dy);
            double theta = std::atan2(dy, dx);
            if (r > pose.scale * shape_rho(spec, theta - alpha)) continue;
            bool in_hole = false;
            for (const auto& hl : holes) {
                double hd = std::hypot(x - hl.x, y - hl.y);
                double phi = std::atan2(y - hl.y, x - hl.x) - alpha - pose.rim_phase;
                double rim = 1.0;
                for (const auto& hm : *hl.rim)
                    rim += pose.rim_gain * hm.amplitude * std::cos(hm.order * phi + hm.phase);
                if (hd <= hl.r * rim) {
                    in_hole = true;
                    break;
                }
            }
            if (!in_hole) img.set(x, y, 1);
        }
    }
    return img;
}

BinaryImage add_gaussian_noise(const BinaryImage& image, double snr_db, std::uint64_t seed) {
    if (snr_db <= 0) throw InputError("add_gaussian_noise: snr_db must be positive");
    // Signal power is the mean squared foreground amplitude of the {0,255}
    // raster, i.e. 255^2.
    const double sigma = 255.0 * std::pow(10.0, -snr_db / 20.0);
    Rng rng(seed);
    BinaryImage out(image.width, image.height);
    for (std::size_t i = 0; i < image.pixels.size(); ++i) {
        double gray = (image.pixels[i] ? 255.0 : 0.0) + sigma * rng.next_gaussian();
        out.pixels[i] = gray >= 128.0 ? 1 : 0;
    }
    return out;
}

BinaryImage add_blur(const BinaryImage& image, double fraction) {
    if (fraction <= 0.0 || fraction >= 1.0) throw InputError("add_blur: fraction must be in (0,1)");
    int radius = static_cast<int>(std::lround(fraction * std::min(image.width, image.height) / 2.0));
    if (radius == 0) return image;

    // Integer box filter via summed-area table; threshold at gray 128 on the
    // {0,255} raster, window clipped at the borders.
    const int w = image.width, h = image.height;
    std::vector<std::int64_t> sat(static_cast<std::size_t>(w + 1) * (h + 1), 0);
    auto sat_at = [&](int x, int y) -> std::int64_t& {
        return sat[static_cast<std::size_t>(y) * (w + 1) + x];
    };
    for (int y = 1; y <= h; ++y) {
        for (int x = 1; x <= w; ++x) {
            sat_at(x, y) = image.at(x - 1, y - 1) + sat_at(x - 1, y) + sat_at(x, y - 1) -
                           sat_at(x - 1, y - 1);
        }
    }
    BinaryImage out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            int x0 = std::max(0, x - radius), x1 = std::min(w - 1, x + radius);
            int y0 = std::max(0, y - radius), y1 = std::min(h - 1, y + radius);
            std::int64_t fg = sat_at(x1 + 1, y1 + 1) - sat_at(x0, y1 + 1) - sat_at(x1 + 1, y0) +
                              sat_at(x0, y0);
            std::int64_t count = static_cast<std::int64_t>(x1 - x0 + 1) * (y1 - y0 + 1);
            out.set(x, y, 255 * fg >= 128 * count ? 1 : 0);
        }
    }
    return out;
}

// --- Dataset -----------------------------------------------------------------

BinaryImage render_item(const DatasetItem& item) {
    ShapeSpec spec = shape_spec(item.group, item.class_id);
    BinaryImage img = apply_pose(spec, item.pose);
    if (item.snr_db) img = add_gaussian_noise(img, *item.snr_db, item.noise_seed);
    if (item.blur) img = add_blur(img, *item.blur);
    return img;
}

Dataset plan_dataset(const DatasetSpec& spec) {
    if (spec.train_per_class < 1 || spec.test_per_class < 1)
        throw InputError("plan_dataset: counts must be >= 1");
    Dataset ds;
    ds.spec = spec;

    for (int cls = 1; cls <= 4; ++cls) {
        // Training split: clean captures only. Exemplar 0 is the unrotated
        // base object; the rest vary rotation, scale and position. Noise and
        // blur robustness is taught from augmented variants, not stored
        // exemplars, so the exemplar base stays a clean reference.
        for (int e = 0; e < spec.train_per_class; ++e) {
            DatasetItem it;
            it.group = spec.group;
            it.class_id = cls;
            it.exemplar_id = e;
            it.split = "train";
            std::uint64_t s = derive_seed(spec.master_seed, 1, static_cast<std::uint64_t>(cls),
                                          static_cast<std::uint64_t>(e));
            Rng rng(s);
            if (e > 0) {
                // Exemplars come from a capture setup with a loosely fixed
                // orientation; full rotation coverage is the recognizer's
                // job, not the acquisition's.
                it.pose.rotation_deg = rng.uniform(-10.0, 10.0);
                it.pose.rim_phase = rng.uniform(0.0, 2.0 * M_PI);
                it.pose.rim_gain = rng.uniform(0.75, 1.25);
                it.pose.scale = rng.uniform(0.85, 1.15);
                it.pose.tx = static_cast<double>(static_cast<int>(rng.next_below(21)) - 10);
                it.pose.ty = static_cast<double>(static_cast<int>(rng.next_below(21)) - 10);
            }
            it.file = "train_g" + std::to_string(spec.group) + "_c" + std::to_string(cls) + "_e" +
                      std::to_string(e) + ".pgm";
            ds.items.push_back(it);
        }

        // Test split: pose variation plus the declared noise mix
        // (clean / noise levels / blur, cycling).
        for (int e = 0; e < spec.test_per_class; ++e) {
            DatasetItem it;
            it.group = spec.group;
            it.class_id = cls;
            it.exemplar_id = e;
            it.split = "test";
            std::uint64_t s = derive_seed(spec.master_seed, 2, static_cast<std::uint64_t>(cls),
                                          static_cast<std::uint64_t>(e));
            Rng rng(s);
            it.pose.rotation_deg = rng.uniform(0.0, 360.0);
            it.pose.rim_phase = rng.uniform(0.0, 2.0 * M_PI);
            it.pose.rim_gain = rng.uniform(0.75, 1.25);
            it.pose.scale = rng.uniform(0.85, 1.12);
            it.pose.tx = static_cast<double>(static_cast<int>(rng.next_below(21)) - 10);
            it.pose.ty = static_cast<double>(static_cast<int>(rng.next_below(21)) - 10);
            int conditions = 2 + static_cast<int>(spec.noise_levels_db.size());
            int cond = e % conditions;
            if (cond >= 1 && cond <= static_cast<int>(spec.noise_levels_db.size())) {
                it.snr_db = spec.noise_levels_db[static_cast<std::size_t>(cond - 1)];
                it.noise_seed = rng.next_u64();
            } else if (cond == conditions - 1) {
                it.blur = spec.blur_fraction;
            }
            it.file = "test_g" + std::to_string(spec.group) + "_c" + std::to_string(cls) + "_e" +
                      std::to_string(e) + ".pgm";
            ds.items.push_back(it);
        }
    }
    return ds;
}

namespace {

nlohmann::json item_to_json(const DatasetItem& it) {
    nlohmann::json j;
    j["schema"] = 1;
    j["group"] = it.group;
    j["class"] = it.class_id;
    j["exemplar"] = it.exemplar_id;
    j["split"] = it.split;
    j["pose"] = {{"rot", it.pose.rotation_deg},
                 {"scale", it.pose.scale},
                 {"tx", it.pose.tx},
                 {"ty", it.pose.ty},
                 {"rim", it.pose.rim_phase},
                 {"rimg", it.pose.rim_gain}};
    if (it.snr_db)
        j["snr_db"] = *it.snr_db;
    else
        j["snr_db"] = nullptr;
    if (it.blur)
        j["blur"] = *it.blur;
    else
        j["blur"] = nullptr;
    j["noise_seed"] = it.noise_seed;
    j["file"] = it.file;
    return j;
}

DatasetItem item_from_json(const nlohmann::json& j) {
    DatasetItem it;
    it.group = j.at("group").get<int>();
    it.class_id = j.at("class").get<int>();
    it.exemplar_id = j.at("exemplar").get<int>();
    it.split = j.at("split").get<std::string>();
    it.pose.rotation_deg = j.at("pose").at("rot").get<double>();
    it.pose.scale = j.at("pose").at("scale").get<double>();
    it.pose.tx = j.at("pose").at("tx").get<double>();
    it.pose.ty = j.at("pose").at("ty").get<double>();
    it.pose.rim_phase = j.at("pose").at("rim").get<double>();
    it.pose.rim_gain = j.at("pose").at("rimg").get<double>();
    if (!j.at("snr_db").is_null()) it.snr_db = j.at("snr_db").get<double>();
    if (!j.at("blur").is_null()) it.blur = j.at("blur").get<double>();
    it.noise_seed = j.at("noise_seed").get<std::uint64_t>();
    it.file = j.at("file").get<std::string>();
    return it;
}

}  // namespace

void save_manifest(const Dataset& dataset, const std::string& dir) {
    std::ofstream out(std::filesystem::path(dir) / "manifest.jsonl");
    if (!out) throw InputError("save_manifest: cannot write manifest in " + dir);
    nlohmann::json header;
    header["schema"] = 1;
    header["kind"] = "dataset";
    header["group"] = dataset.spec.group;
    header["train_per_class"] = dataset.spec.train_per_class;
    header["test_per_class"] = dataset.spec.test_per_class;
    header["noise_levels_db"] = dataset.spec.noise_levels_db;
    header["blur_fraction"] = dataset.spec.blur_fraction;
    header["master_seed"] = dataset.spec.master_seed;
    out << header.dump() << "\n";
    for (const auto& it : dataset.items) out << item_to_json(it).dump() << "\n";
}

Dataset gen_dataset(const DatasetSpec& spec, const std::string& out_dir) {
    Dataset ds = plan_dataset(spec);
    std::filesystem::create_directories(out_dir);
    for (const auto& it : ds.items) {
        BinaryImage img = render_item(it);
        save_pgm_file(img, (std::filesystem::path(out_dir) / it.file).string());
    }
    save_manifest(ds, out_dir);
    return ds;
}

Dataset load_manifest(const std::string& dir) {
    std::ifstream in(std::filesystem::path(dir) / "manifest.jsonl");
    if (!in) throw InputError("load_manifest: no manifest.jsonl in " + dir);
    Dataset ds;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("load_manifest: bad line: ") + e.what());
        }
        if (first && j.value("kind", "") == "dataset") {
            ds.spec.group = j.at("group").get<int>();
            ds.spec.train_per_class = j.at("train_per_class").get<int>();
            ds.spec.test_per_class = j.at("test_per_class").get<int>();
            ds.spec.noise_levels_db = j.at("noise_levels_db").get<std::vector<double>>();
            ds.spec.blur_fraction = j.at("blur_fraction").get<double>();
            ds.spec.master_seed = j.at("master_seed").get<std::uint64_t>();
            first = false;
            continue;
        }
        first = false;
        ds.items.push_back(item_from_json(j));
    }
    return ds;
}

}  // namespace shaperec
