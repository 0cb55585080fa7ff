#include "shaperec/structure.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "shaperec/datagen.hpp"
#include "shaperec/errors.hpp"
#include "json.hpp"

namespace shaperec {

namespace {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
    Rng rng(master ^ (a * 0x9e3779b97f4a7c15ULL) ^ (b * 0xc2b2ae3d27d4eb4fULL));
    return rng.next_u64();
}

std::vector<double> one_hot(int index, int count) {
    std::vector<double> t(static_cast<std::size_t>(count), -0.9);
    t[static_cast<std::size_t>(index)] = 0.9;
    return t;
}

}  // namespace

ModelConfig default_model_config() { return ModelConfig{}; }

ExemplarDescriptor compute_descriptor(const BinaryImage& image, const ModelConfig& config) {
    ContourSet contours = trace_contours(image);
    ExemplarDescriptor out;

    ResampleConfig bcfg{config.boundary_length, config.max_denominator};
    RadialProfile bprofile =
        resample(radial_profile(contours.boundary, contours.centroid_x, contours.centroid_y), bcfg);
    out.boundary = dct_dst_forward(bprofile);
    out.boundary_norm = normalize_amplitude(out.boundary);

    ResampleConfig hcfg{config.hole_length, config.max_denominator};
    std::vector<Spectrum> hole_spectra;
    std::vector<NormalizedSpectrum> hole_norms;
    for (std::size_t k = 0; k < contours.holes.size(); ++k) {
        const auto& [hx, hy] = contours.hole_centroids[k];
        RadialProfile hp = resample(radial_profile(contours.holes[k], hx, hy), hcfg);
        hole_spectra.push_back(dct_dst_forward(hp));
        hole_norms.push_back(normalize_amplitude(hole_spectra.back()));
    }

    if (!hole_spectra.empty()) {
        // Marker ordering works on normalized coefficients.
        std::vector<Spectrum> norm_as_spectra(hole_norms.size());
        for (std::size_t i = 0; i < hole_norms.size(); ++i)
            norm_as_spectra[i].coeffs = hole_norms[i].coeffs;
        auto perm = order_holes(norm_as_spectra, config.marker_epsilon);
        for (std::size_t rank = 0; rank < perm.size(); ++rank) {
            out.holes.push_back(std::move(hole_spectra[perm[rank]]));
            out.holes_norm.push_back(std::move(hole_norms[perm[rank]]));
        }
    }
    return out;
}

std::vector<BandRef> flatten_bands(const BandPartition& partition) {
    std::vector<BandRef> out;
    for (int b = 0; b < partition.boundary.band_count(); ++b) {
        auto [begin, end] = partition.boundary.band_range(b);
        out.push_back({-1, b, begin, end});
    }
    for (std::size_t k = 0; k < partition.holes.size(); ++k) {
        for (int b = 0; b < partition.holes[k].band_count(); ++b) {
            auto [begin, end] = partition.holes[k].band_range(b);
            out.push_back({static_cast<int>(k), b, begin, end});
        }
    }
    return out;
}

std::vector<std::vector<double>> slice_bands(const ExemplarDescriptor& desc,
                                             const std::vector<BandRef>& bands) {
    std::vector<std::vector<double>> out;
    out.reserve(bands.size());
    for (const auto& band : bands) {
        const auto& src = band.role < 0
                              ? desc.boundary_norm.coeffs
                              : desc.holes_norm[static_cast<std::size_t>(band.role)].coeffs;
        out.emplace_back(src.begin() + band.begin, src.begin() + band.end);
    }
    return out;
}

// --- DB records ---------------------------------------------------------------

namespace {

std::string role_name(int role) {
    return role < 0 ? std::string("boundary") : "hole" + std::to_string(role);
}

nlohmann::json record_to_json(const BandRecord& r) {
    nlohmann::json j;
    j["schema"] = 1;
    j["stage"] = r.stage;
    j["class"] = r.class_id;
    j["exemplar"] = r.exemplar_id;
    j["role"] = r.role;
    j["band"] = r.band_id;
    j["coeffs"] = r.coeffs;
    return j;
}

}  // namespace

void write_records(const std::vector<BandRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("write_records: cannot open " + path);
    for (const auto& r : records) out << record_to_json(r).dump() << "\n";
}

std::vector<BandRecord> read_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("read_records: cannot open " + path);
    std::vector<BandRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        BandRecord r;
        r.stage = j.at("stage").get<std::string>();
        r.class_id = j.at("class").get<int>();
        r.exemplar_id = j.at("exemplar").get<int>();
        r.role = j.at("role").get<std::string>();
        r.band_id = j.at("band").get<int>();
        r.coeffs = j.at("coeffs").get<std::vector<double>>();
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<BandRecord> Db1::records() const {
    std::vector<BandRecord> out;
    for (std::size_t e = 0; e < band_vectors.size(); ++e) {
        for (std::size_t b = 0; b < bands.size(); ++b) {
            out.push_back({"db1", class_ids[e], exemplar_ids[e], role_name(bands[b].role),
                           bands[b].band_id, band_vectors[e][b]});
        }
    }
    return out;
}

Db1 build_db1(const std::vector<LabeledImage>& dataset, const ModelConfig& config) {
    Db1 db;
    std::vector<ExemplarDescriptor> descriptors;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        try {
            ExemplarDescriptor d = compute_descriptor(dataset[i].image, config);
            if (static_cast<int>(d.holes.size()) != config.hole_count) {
                db.rejected.emplace_back(static_cast<int>(i),
                                         "hole count " + std::to_string(d.holes.size()) +
                                             " != expected " + std::to_string(config.hole_count));
                continue;
            }
            db.class_ids.push_back(dataset[i].class_id);
            db.exemplar_ids.push_back(dataset[i].exemplar_id);
            descriptors.push_back(std::move(d));
        } catch (const Error& e) {
            db.rejected.emplace_back(static_cast<int>(i), e.what());
        }
    }
    if (descriptors.size() < 2) throw InputError("build_db1: fewer than 2 usable exemplars");

    // Fit the band partition on the training set only, then freeze it.
    std::vector<NormalizedSpectrum> boundary_pool;
    for (const auto& d : descriptors) boundary_pool.push_back(d.boundary_norm);
    db.partition.boundary = segment_bands(boundary_pool, config.segment);
    for (int k = 0; k < config.hole_count; ++k) {
        std::vector<NormalizedSpectrum> hole_pool;
        for (const auto& d : descriptors)
            hole_pool.push_back(d.holes_norm[static_cast<std::size_t>(k)]);
        db.partition.holes.push_back(segment_bands(hole_pool, config.segment));
    }
    db.bands = flatten_bands(db.partition);

    for (const auto& d : descriptors) db.band_vectors.push_back(slice_bands(d, db.bands));
    db.descriptors = std::move(descriptors);
    return db;
}

std::vector<int> evenly_spaced_shifts(int count, int domain) {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        out.push_back(static_cast<int>(static_cast<long>(i) * domain / count) % domain);
    }
    return out;
}

std::vector<std::vector<std::vector<double>>> make_rotation_training_set(
    const Spectrum& base, const std::vector<int>& shifts, const BandCuts& cuts) {
    std::vector<std::vector<std::vector<double>>> out;
    out.reserve(shifts.size());
    for (int h : shifts) {
        Spectrum shifted = shift_spectrum(base, h);
        out.push_back(apply_bands(normalize_amplitude(shifted), cuts));
    }
    return out;
}

// --- Stage training ------------------------------------------------------------

namespace {

std::vector<int> sorted_class_labels(const std::vector<int>& class_ids) {
    std::set<int> s(class_ids.begin(), class_ids.end());
    return {s.begin(), s.end()};
}

int class_index(const std::vector<int>& labels, int class_id) {
    auto it = std::find(labels.begin(), labels.end(), class_id);
    if (it == labels.end()) throw InputError("unknown class id " + std::to_string(class_id));
    return static_cast<int>(it - labels.begin());
}

}  // namespace

std::vector<Mlp> train_stage1(const Db1& db1, const std::vector<LabeledImage>& dataset,
                              const ModelConfig& config, std::vector<AffineCodec>& codecs,
                              std::vector<double>* mse_out) {
    auto labels = sorted_class_labels(db1.class_ids);
    const std::size_t band_count = db1.bands.size();

    // Base exemplar per class: the lowest exemplar id that survived DB_1.
    std::map<int, std::size_t> base_of;  // class id -> db1 exemplar index
    for (std::size_t e = 0; e < db1.class_ids.size(); ++e) {
        auto it = base_of.find(db1.class_ids[e]);
        if (it == base_of.end() || db1.exemplar_ids[e] < db1.exemplar_ids[it->second])
            base_of[db1.class_ids[e]] = e;
    }

    std::map<int, const BinaryImage*> base_img_of;
    for (int cls : labels) {
        std::size_t base_idx = base_of.at(cls);
        for (const auto& li : dataset) {
            if (li.class_id == cls && li.exemplar_id == db1.exemplar_ids[base_idx]) {
                base_img_of[cls] = &li.image;
                break;
            }
        }
        if (!base_img_of.count(cls))
            throw InputError("train_stage1: base image missing for class");
    }

    // Stage-1 regression targets: per class and band, the mean descriptor of
    // the clean base plus noisy renderings of it (support vectors).
    std::map<int, std::vector<std::vector<double>>> targets;  // class -> per band
    for (int cls : labels) {
        std::size_t base_idx = base_of.at(cls);
        const BinaryImage* base_img = base_img_of.at(cls);

        std::vector<std::vector<std::vector<double>>> pool;  // per realization, per band
        pool.push_back(db1.band_vectors[base_idx]);
        for (int r = 0; r < config.noise_target_realizations; ++r) {
            BinaryImage noisy = add_gaussian_noise(
                *base_img, config.noise_target_snr_db,
                derive_seed(config.seed, 11, static_cast<std::uint64_t>(cls * 100 + r)));
            try {
                ExemplarDescriptor d = compute_descriptor(noisy, config);
                if (static_cast<int>(d.holes.size()) != config.hole_count) continue;
                pool.push_back(slice_bands(d, db1.bands));
            } catch (const Error&) {
                // a noise realization that breaks the contour is just skipped
            }
        }
        std::vector<std::vector<double>> mean(band_count);
        for (std::size_t b = 0; b < band_count; ++b) {
            mean[b].assign(static_cast<std::size_t>(db1.bands[b].width()), 0.0);
            for (const auto& p : pool)
                for (std::size_t i = 0; i < mean[b].size(); ++i) mean[b][i] += p[b][i];
            for (auto& v : mean[b]) v /= static_cast<double>(pool.size());
        }
        targets[cls] = std::move(mean);
    }

    // Affine codec per band: center each coefficient on the mean class
    // target, then gain the band so the largest target deviation lands at
    // the tanh working margin.
    codecs.assign(band_count, AffineCodec{});
    for (std::size_t b = 0; b < band_count; ++b) {
        std::size_t width = static_cast<std::size_t>(db1.bands[b].width());
        codecs[b].center.assign(width, 0.0);
        for (const auto& [cls, t] : targets)
            for (std::size_t i = 0; i < width; ++i) codecs[b].center[i] += t[b][i];
        for (auto& v : codecs[b].center) v /= static_cast<double>(targets.size());
        double max_dev = 0.0;
        for (const auto& [cls, t] : targets)
            for (std::size_t i = 0; i < width; ++i)
                max_dev = std::max(max_dev, std::abs(t[b][i] - codecs[b].center[i]));
        codecs[b].scale = max_dev > 0 ? config.target_margin / max_dev : 1.0;
    }

    // Inputs: analytic rotation variants of each class base, plus every
    // training exemplar of the class; all map to the class target. Inputs
    // share the band codec so every band trains in a well-scaled range.
    std::vector<std::vector<Sample>> samples(band_count);
    auto encode_band = [&](std::size_t b, const std::vector<double>& v) {
        std::vector<double> enc(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) enc[i] = codecs[b].encode(v[i], i);
        return enc;
    };
    auto hole_shift = [&](int h) {
        return static_cast<int>(std::lround(static_cast<double>(h) * config.hole_length /
                                            config.boundary_length)) %
               config.hole_length;
    };
    auto shifts = evenly_spaced_shifts(config.rotation_exemplars_per_class,
                                       config.boundary_length);
    for (int cls : labels) {
        const auto& target = targets.at(cls);
        const auto& base_desc = db1.descriptors[base_of.at(cls)];
        if (config.use_analytic_shifts) {
            for (int h : shifts) {
                ExemplarDescriptor rotated;
                rotated.boundary_norm = normalize_amplitude(shift_spectrum(base_desc.boundary, h));
                for (const auto& hs : base_desc.holes)
                    rotated.holes_norm.push_back(
                        normalize_amplitude(shift_spectrum(hs, hole_shift(h))));
                auto bands = slice_bands(rotated, db1.bands);
                for (std::size_t b = 0; b < band_count; ++b)
                    samples[b].push_back({encode_band(b, bands[b]), encode_band(b, target[b])});
            }
        }
        for (std::size_t e = 0; e < db1.class_ids.size(); ++e) {
            if (db1.class_ids[e] != cls) continue;
            for (std::size_t b = 0; b < band_count; ++b)
                samples[b].push_back(
                    {encode_band(b, db1.band_vectors[e][b]), encode_band(b, target[b])});
        }
        if (config.augment_image_rotations) {
            // Raster rotations of the class base cover the parts of the
            // rotation manifold the spectral shift model renders poorly.
            int count = std::max(1, config.augment_rotation_count);
            for (int k = 0; k < count; ++k) {
                double deg = 360.0 * k / count + 180.0 / count;
                try {
                    BinaryImage rot = rotate_image(*base_img_of.at(cls), deg);
                    // rotations cycle through clean / noisy / blurred variants
                    // so filtering stays stable under test degradations
                    if (k % 2 == 1)
                        rot = add_gaussian_noise(
                            rot, config.noise_target_snr_db,
                            derive_seed(config.seed, 12,
                                        static_cast<std::uint64_t>(cls * 1000 + k)));
                    else if (k % 4 == 2 && config.augment_blur_fraction > 0)
                        rot = add_blur(rot, config.augment_blur_fraction);
                    ExemplarDescriptor d = compute_descriptor(rot, config);
                    if (static_cast<int>(d.holes.size()) != config.hole_count) continue;
                    auto bands = slice_bands(d, db1.bands);
                    for (std::size_t b = 0; b < band_count; ++b)
                        samples[b].push_back(
                            {encode_band(b, bands[b]), encode_band(b, target[b])});
                } catch (const Error&) {
                    // a rotation that breaks the contour is just skipped
                }
            }
        }
    }

    std::vector<Mlp> nets;
    for (std::size_t b = 0; b < band_count; ++b) {
        std::size_t width = static_cast<std::size_t>(db1.bands[b].width());
        Mlp net = mlp_init(width, width, width, derive_seed(config.seed, 1, b),
                           config.stage1_train.weight_init_scale);
        TrainConfig tc = config.stage1_train;
        tc.seed = derive_seed(config.seed, 2, b);
        TrainTrace trace = mlp_train(net, samples[b], tc);
        if (!std::isfinite(trace.final_mse))
            throw Error("train_stage1: divergence in band " + std::to_string(b));
        if (mse_out) mse_out->push_back(trace.final_mse);
        nets.push_back(std::move(net));
    }
    return nets;
}

std::vector<std::vector<std::vector<double>>> run_stage1(const RecognitionModel& model,
                                                         const Db1& db1) {
    std::vector<std::vector<std::vector<double>>> out;
    out.reserve(db1.band_vectors.size());
    for (const auto& bands : db1.band_vectors) {
        std::vector<std::vector<double>> filtered(bands.size());
        for (std::size_t b = 0; b < bands.size(); ++b) {
            std::vector<double> enc(bands[b].size());
            for (std::size_t i = 0; i < enc.size(); ++i) enc[i] = model.codecs[b].encode(bands[b][i], i);
            filtered[b] = mlp_forward(model.stage1[b], enc);
        }
        out.push_back(std::move(filtered));
    }
    return out;
}

std::vector<Mlp> train_stage2(const std::vector<std::vector<std::vector<double>>>& db2,
                              const std::vector<int>& class_ids, const RecognitionModel& model,
                              std::vector<double>* mse_out) {
    const int m = static_cast<int>(model.class_labels.size());
    std::vector<Mlp> nets;
    for (std::size_t b = 0; b < model.bands.size(); ++b) {
        std::vector<Sample> samples;
        for (std::size_t e = 0; e < db2.size(); ++e) {
            samples.push_back(
                {db2[e][b], one_hot(class_index(model.class_labels, class_ids[e]), m)});
        }
        std::size_t width = static_cast<std::size_t>(model.bands[b].width());
        Mlp net = mlp_init(width, static_cast<std::size_t>(model.config.stage2_hidden),
                           static_cast<std::size_t>(m), derive_seed(model.config.seed, 3, b),
                           model.config.stage2_train.weight_init_scale);
        TrainConfig tc = model.config.stage2_train;
        tc.seed = derive_seed(model.config.seed, 4, b);
        TrainTrace trace = mlp_train(net, samples, tc);
        if (mse_out) mse_out->push_back(trace.final_mse);
        nets.push_back(std::move(net));
    }
    return nets;
}

std::vector<std::vector<double>> run_stage2(
    const RecognitionModel& model, const std::vector<std::vector<std::vector<double>>>& db2) {
    std::vector<std::vector<double>> out;
    out.reserve(db2.size());
    for (const auto& bands : db2) {
        std::vector<double> y;
        for (std::size_t b = 0; b < bands.size(); ++b) {
            auto o = mlp_forward(model.stage2[b], bands[b]);
            y.insert(y.end(), o.begin(), o.end());
        }
        out.push_back(std::move(y));
    }
    return out;
}

Mlp train_stage3(const std::vector<std::vector<double>>& db3, const std::vector<int>& class_ids,
                 const RecognitionModel& model, std::vector<double>* mse_out) {
    const int m = static_cast<int>(model.class_labels.size());
    std::vector<Sample> samples;
    for (std::size_t e = 0; e < db3.size(); ++e) {
        samples.push_back({db3[e], one_hot(class_index(model.class_labels, class_ids[e]), m)});
    }
    Mlp net = mlp_init(db3[0].size(), static_cast<std::size_t>(model.config.stage3_hidden),
                       static_cast<std::size_t>(m), derive_seed(model.config.seed, 5, 0),
                       model.config.stage3_train.weight_init_scale);
    TrainConfig tc = model.config.stage3_train;
    tc.seed = derive_seed(model.config.seed, 6, 0);
    TrainTrace trace = mlp_train(net, samples, tc);
    if (mse_out) mse_out->push_back(trace.final_mse);
    return net;
}

RecognitionModel train_mode_a(const std::vector<LabeledImage>& dataset, const ModelConfig& config,
                              StageReport* report, const std::string& db_dir) {
    auto t0 = std::chrono::steady_clock::now();
    RecognitionModel model;
    model.config = config;

    Db1 db1 = build_db1(dataset, config);
    model.partition = db1.partition;
    model.bands = db1.bands;
    model.class_labels = sorted_class_labels(db1.class_ids);
    if (static_cast<int>(model.class_labels.size()) != config.class_count)
        throw InputError("train_mode_a: dataset has " +
                         std::to_string(model.class_labels.size()) + " classes, config expects " +
                         std::to_string(config.class_count));

    std::vector<double> mses;
    if (!db_dir.empty()) {
        std::filesystem::create_directories(db_dir);
        write_records(db1.records(), (std::filesystem::path(db_dir) / "db1.jsonl").string());
    }

    model.stage1 = train_stage1(db1, dataset, config, model.codecs, &mses);
    auto db2 = run_stage1(model, db1);  // T_1
    if (!db_dir.empty()) {
        std::vector<BandRecord> recs;
        for (std::size_t e = 0; e < db2.size(); ++e)
            for (std::size_t b = 0; b < db2[e].size(); ++b)
                recs.push_back({"db2", db1.class_ids[e], db1.exemplar_ids[e],
                                role_name(db1.bands[b].role), db1.bands[b].band_id, db2[e][b]});
        write_records(recs, (std::filesystem::path(db_dir) / "db2.jsonl").string());
    }

    model.stage2 = train_stage2(db2, db1.class_ids, model, &mses);
    auto db3 = run_stage2(model, db2);  // T_2
    if (!db_dir.empty()) {
        std::vector<BandRecord> recs;
        for (std::size_t e = 0; e < db3.size(); ++e)
            recs.push_back({"db3", db1.class_ids[e], db1.exemplar_ids[e], "Y", 0, db3[e]});
        write_records(recs, (std::filesystem::path(db_dir) / "db3.jsonl").string());
    }

    model.stage3 = train_stage3(db3, db1.class_ids, model, &mses);

    if (report) {
        report->stage_mse = mses;
        report->rejected_exemplars = db1.rejected.size();
        report->train_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    return model;
}

Recognition recognize(const RecognitionModel& model, const BinaryImage& image) {
    Recognition out;
    auto t0 = std::chrono::steady_clock::now();
    ExemplarDescriptor desc = compute_descriptor(image, model.config);
    if (static_cast<int>(desc.holes.size()) != model.config.hole_count)
        throw InputError("recognize: hole count " + std::to_string(desc.holes.size()) +
                         " != expected " + std::to_string(model.config.hole_count));
    auto bands = slice_bands(desc, model.bands);
    auto t1 = std::chrono::steady_clock::now();

    std::vector<double> y;
    for (std::size_t b = 0; b < bands.size(); ++b) {
        std::vector<double> enc(bands[b].size());
        for (std::size_t i = 0; i < enc.size(); ++i) enc[i] = model.codecs[b].encode(bands[b][i], i);
        auto filtered = mlp_forward(model.stage1[b], enc);
        auto o = mlp_forward(model.stage2[b], filtered);
        y.insert(y.end(), o.begin(), o.end());
    }
    out.z = mlp_forward(model.stage3, y);
    out.y = std::move(y);

    std::size_t best = 0;
    for (std::size_t i = 1; i < out.z.size(); ++i) {
        if (out.z[i] > out.z[best]) best = i;
    }
    out.tie = std::count(out.z.begin(), out.z.end(), out.z[best]) > 1;
    out.class_label = model.class_labels[best];

    auto t2 = std::chrono::steady_clock::now();
    out.preprocess_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    out.inference_ms = std::chrono::duration<double, std::milli>(t2 - t1).count();
    return out;
}

// --- Serialization --------------------------------------------------------------

namespace {

nlohmann::json train_config_to_json(const TrainConfig& c) {
    return {{"learning_rate", c.learning_rate}, {"momentum", c.momentum},
            {"max_epochs", c.max_epochs},       {"target_mse", c.target_mse},
            {"seed", c.seed},                   {"weight_init_scale", c.weight_init_scale}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.learning_rate = j.at("learning_rate").get<double>();
    c.momentum = j.at("momentum").get<double>();
    c.max_epochs = j.at("max_epochs").get<int>();
    c.target_mse = j.at("target_mse").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.weight_init_scale = j.at("weight_init_scale").get<double>();
    return c;
}

nlohmann::json config_to_json(const ModelConfig& c) {
    nlohmann::json j;
    j["class_count"] = c.class_count;
    j["hole_count"] = c.hole_count;
    j["boundary_length"] = c.boundary_length;
    j["hole_length"] = c.hole_length;
    j["max_denominator"] = c.max_denominator;
    j["rotation_exemplars_per_class"] = c.rotation_exemplars_per_class;
    j["use_analytic_shifts"] = c.use_analytic_shifts;
    j["augment_image_rotations"] = c.augment_image_rotations;
    j["augment_rotation_count"] = c.augment_rotation_count;
    j["augment_blur_fraction"] = c.augment_blur_fraction;
    j["noise_target_realizations"] = c.noise_target_realizations;
    j["noise_target_snr_db"] = c.noise_target_snr_db;
    j["target_margin"] = c.target_margin;
    j["marker_epsilon"] = c.marker_epsilon;
    j["binarize_threshold"] = c.binarize_threshold;
    j["stage2_hidden"] = c.stage2_hidden;
    j["stage3_hidden"] = c.stage3_hidden;
    j["segment"] = {{"tau", c.segment.tau},
                    {"min_band_width", c.segment.min_band_width},
                    {"sigma_floor", c.segment.sigma_floor}};
    j["stage1_train"] = train_config_to_json(c.stage1_train);
    j["stage2_train"] = train_config_to_json(c.stage2_train);
    j["stage3_train"] = train_config_to_json(c.stage3_train);
    j["seed"] = c.seed;
    return j;
}

ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.class_count = j.at("class_count").get<int>();
    c.hole_count = j.at("hole_count").get<int>();
    c.boundary_length = j.at("boundary_length").get<int>();
    c.hole_length = j.at("hole_length").get<int>();
    c.max_denominator = j.at("max_denominator").get<int>();
    c.rotation_exemplars_per_class = j.at("rotation_exemplars_per_class").get<int>();
    c.use_analytic_shifts = j.at("use_analytic_shifts").get<bool>();
    c.augment_image_rotations = j.at("augment_image_rotations").get<bool>();
    c.augment_rotation_count = j.at("augment_rotation_count").get<int>();
    c.augment_blur_fraction = j.at("augment_blur_fraction").get<double>();
    c.noise_target_realizations = j.at("noise_target_realizations").get<int>();
    c.noise_target_snr_db = j.at("noise_target_snr_db").get<double>();
    c.target_margin = j.at("target_margin").get<double>();
    c.marker_epsilon = j.at("marker_epsilon").get<double>();
    c.binarize_threshold = j.at("binarize_threshold").get<int>();
    c.stage2_hidden = j.at("stage2_hidden").get<int>();
    c.stage3_hidden = j.at("stage3_hidden").get<int>();
    c.segment.tau = j.at("segment").at("tau").get<double>();
    c.segment.min_band_width = j.at("segment").at("min_band_width").get<int>();
    c.segment.sigma_floor = j.at("segment").at("sigma_floor").get<double>();
    c.stage1_train = train_config_from_json(j.at("stage1_train"));
    c.stage2_train = train_config_from_json(j.at("stage2_train"));
    c.stage3_train = train_config_from_json(j.at("stage3_train"));
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

nlohmann::json cuts_to_json(const BandCuts& c) {
    return {{"cuts", c.cuts}, {"domain", c.domain}};
}

BandCuts cuts_from_json(const nlohmann::json& j) {
    BandCuts c;
    c.cuts = j.at("cuts").get<std::vector<int>>();
    c.domain = j.at("domain").get<int>();
    return c;
}

void check_known_keys(const nlohmann::json& patch, const nlohmann::json& reference,
                      const std::string& prefix) {
    for (const auto& [key, value] : patch.items()) {
        if (!reference.contains(key))
            throw ParseError("config: unknown key '" + prefix + key + "'");
        if (value.is_object()) check_known_keys(value, reference.at(key), prefix + key + ".");
    }
}

}  // namespace

std::string config_to_text(const ModelConfig& config) { return config_to_json(config).dump(); }

ModelConfig config_with_overrides(const std::string& json_text, const ModelConfig& base) {
    nlohmann::json patch;
    try {
        patch = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("config: malformed JSON: ") + e.what());
    }
    if (!patch.is_object()) throw ParseError("config: expected a JSON object");
    nlohmann::json merged = config_to_json(base);
    check_known_keys(patch, merged, "");
    merged.update(patch, /*merge_objects=*/true);
    try {
        return config_from_json(merged);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("config: bad value: ") + e.what());
    }
}

std::string save_model(const RecognitionModel& model) {
    nlohmann::json j;
    j["schema"] = 1;
    j["config"] = config_to_json(model.config);
    j["partition"]["boundary"] = cuts_to_json(model.partition.boundary);
    j["partition"]["holes"] = nlohmann::json::array();
    for (const auto& h : model.partition.holes) j["partition"]["holes"].push_back(cuts_to_json(h));
    j["stage1"] = nlohmann::json::array();
    for (const auto& n : model.stage1) j["stage1"].push_back(nlohmann::json::parse(mlp_save(n)));
    j["affine_codecs"] = nlohmann::json::array();
    for (const auto& c : model.codecs)
        j["affine_codecs"].push_back({{"scale", c.scale}, {"center", c.center}});
    j["stage2"] = nlohmann::json::array();
    for (const auto& n : model.stage2) j["stage2"].push_back(nlohmann::json::parse(mlp_save(n)));
    j["stage3"] = nlohmann::json::parse(mlp_save(model.stage3));
    j["class_labels"] = model.class_labels;
    return j.dump();
}

RecognitionModel load_model(const std::string& payload) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(payload);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("load_model: malformed payload: ") + e.what());
    }
    try {
        if (j.at("schema").get<int>() != 1) throw ParseError("load_model: unsupported schema");
        RecognitionModel model;
        model.config = config_from_json(j.at("config"));
        model.partition.boundary = cuts_from_json(j.at("partition").at("boundary"));
        for (const auto& h : j.at("partition").at("holes"))
            model.partition.holes.push_back(cuts_from_json(h));
        model.bands = flatten_bands(model.partition);
        for (const auto& n : j.at("stage1")) model.stage1.push_back(mlp_load(n.dump()));
        for (const auto& c : j.at("affine_codecs"))
            model.codecs.push_back({c.at("scale").get<double>(), c.at("center").get<std::vector<double>>()});
        for (const auto& n : j.at("stage2")) model.stage2.push_back(mlp_load(n.dump()));
        model.stage3 = mlp_load(j.at("stage3").dump());
        model.class_labels = j.at("class_labels").get<std::vector<int>>();
        if (model.stage1.size() != model.bands.size() ||
            model.stage2.size() != model.bands.size() ||
            model.codecs.size() != model.bands.size())
            throw ParseError("load_model: stage-incomplete archive");
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("load_model: missing or bad field: ") + e.what());
    }
}

void save_model_file(const RecognitionModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("save_model_file: cannot open " + path);
    out << save_model(model);
}

RecognitionModel load_model_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("load_model_file: cannot open " + path);
    std::string payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return load_model(payload);
}

}  // namespace shaperec
