#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "shaperec/descriptor.hpp"
#include "shaperec/imaging.hpp"
#include "shaperec/mlp.hpp"

namespace shaperec {

struct ModelConfig {
    int class_count = 4;   // m
    int hole_count = 1;    // r, holes required per object
    int boundary_length = 64;  // N for the boundary profile
    int hole_length = 32;      // N for hole profiles
    int max_denominator = 64;
    int rotation_exemplars_per_class = 20;  // |H|
    bool use_analytic_shifts = false;        // spectral shift-model rotation set
    bool augment_image_rotations = true;    // add raster-rotated bases as stage-1 inputs
    int augment_rotation_count = 60;        // raster rotations per class base
    double augment_blur_fraction = 0.05;    // blurred rotation variants; 0 disables
    int noise_target_realizations = 5;      // noisy base objects per class (stage-1 targets)
    double noise_target_snr_db = 25.0;
    double target_margin = 0.8;  // stage-1 targets scaled into +-margin before tanh
    double marker_epsilon = 1e-6;
    int binarize_threshold = 128;
    int stage2_hidden = 16;
    int stage3_hidden = 16;
    SegmentConfig segment;
    TrainConfig stage1_train;
    // Stage 2 is driven close to interpolation so per-class Y clusters
    // collapse; stage 3 stops at a looser error so the class structure of
    // its residuals is not trained away.
    TrainConfig stage2_train{.max_epochs = 20000, .target_mse = 1e-7};
    TrainConfig stage3_train;
    std::uint64_t seed = 1;
};

ModelConfig default_model_config();

/// Invariant object description: raw spectra (with sine parts, for the shift
/// model) and their normalized forms, holes already in marker order.
struct ExemplarDescriptor {
    Spectrum boundary;
    std::vector<Spectrum> holes;
    NormalizedSpectrum boundary_norm;
    std::vector<NormalizedSpectrum> holes_norm;
};

ExemplarDescriptor compute_descriptor(const BinaryImage& image, const ModelConfig& config);

/// One flattened band: role -1 = boundary, otherwise hole index.
struct BandRef {
    int role = -1;
    int band_id = 0;
    int begin = 0;
    int end = 0;
    int width() const { return end - begin; }
};

std::vector<BandRef> flatten_bands(const BandPartition& partition);

/// Band slices of a descriptor in fixed band order (boundary bands low to
/// high, then holes 'first' to 'last').
std::vector<std::vector<double>> slice_bands(const ExemplarDescriptor& desc,
                                             const std::vector<BandRef>& bands);

/// Line-JSON record shared by DB_1 / DB_2 / DB_3 (stage tag tells them apart).
struct BandRecord {
    std::string stage;  // "db1" | "db2" | "db3"
    int class_id = 0;
    int exemplar_id = 0;
    std::string role;  // "boundary" | "hole<k>" | "Y" (db3)
    int band_id = 0;
    std::vector<double> coeffs;
};

void write_records(const std::vector<BandRecord>& records, const std::string& path);
std::vector<BandRecord> read_records(const std::string& path);

struct LabeledImage {
    int class_id = 0;
    int exemplar_id = 0;
    BinaryImage image;
};

struct Db1 {
    BandPartition partition;
    std::vector<BandRef> bands;
    std::vector<int> class_ids;      // per accepted exemplar
    std::vector<int> exemplar_ids;   // per accepted exemplar
    std::vector<std::vector<std::vector<double>>> band_vectors;  // [exemplar][band]
    std::vector<ExemplarDescriptor> descriptors;                 // per accepted exemplar
    std::vector<std::pair<int, std::string>> rejected;           // (exemplar index, reason)
    std::vector<BandRecord> records() const;
};

Db1 build_db1(const std::vector<LabeledImage>& dataset, const ModelConfig& config);

/// Shift set H: `count` shifts evenly spread over [0, N).
std::vector<int> evenly_spaced_shifts(int count, int domain);

/// Normalized band inputs for one base spectrum under every shift in H.
/// Result: [shift][band] vectors over the given single-role cuts.
std::vector<std::vector<std::vector<double>>> make_rotation_training_set(
    const Spectrum& base, const std::vector<int>& shifts, const BandCuts& cuts);

/// Maps one band's spectrum values into the tanh working range. Each
/// coefficient is centered on the mean of the class targets so a large common
/// component (e.g. the DC term of a normalized spectrum) does not pin the
/// scale, then the whole band shares one gain.
struct AffineCodec {
    double scale = 1.0;
    std::vector<double> center;  // per coefficient; empty means all zero
    double at(std::size_t i) const { return i < center.size() ? center[i] : 0.0; }
    double encode(double v, std::size_t i) const { return scale * (v - at(i)); }
    double decode(double v, std::size_t i) const { return v / scale + at(i); }
};

struct StageReport {
    std::vector<double> stage_mse;  // final training MSE per net (stage order)
    double train_seconds = 0.0;
    std::size_t rejected_exemplars = 0;
};

struct RecognitionModel {
    ModelConfig config;
    BandPartition partition;
    std::vector<BandRef> bands;
    std::vector<Mlp> stage1;            // per band (filtering / rotation invariance)
    std::vector<AffineCodec> codecs;    // per band, stage-1 output decoding
    std::vector<Mlp> stage2;            // per band (partial recognition)
    Mlp stage3;                         // general classification
    std::vector<int> class_labels;      // output component -> class id
};

std::vector<Mlp> train_stage1(const Db1& db1, const std::vector<LabeledImage>& dataset,
                              const ModelConfig& config, std::vector<AffineCodec>& codecs,
                              std::vector<double>* mse_out = nullptr);

/// Filtered band vectors for every DB_1 exemplar (DB_2 content), in the
/// band codec's scaled units; decode() maps them back to spectrum values.
std::vector<std::vector<std::vector<double>>> run_stage1(const RecognitionModel& model,
                                                         const Db1& db1);

std::vector<Mlp> train_stage2(
    const std::vector<std::vector<std::vector<double>>>& db2, const std::vector<int>& class_ids,
    const RecognitionModel& model, std::vector<double>* mse_out = nullptr);

/// Y vectors (concatenated per-band stage-2 outputs) for DB_3.
std::vector<std::vector<double>> run_stage2(
    const RecognitionModel& model, const std::vector<std::vector<std::vector<double>>>& db2);

Mlp train_stage3(const std::vector<std::vector<double>>& db3, const std::vector<int>& class_ids,
                 const RecognitionModel& model, std::vector<double>* mse_out = nullptr);

/// Full mode-A protocol: DB_1, stage 1, T_1, stage 2, T_2, stage 3.
/// If db_dir is non-empty, DB_1/DB_2/DB_3 are persisted there as line-JSON.
RecognitionModel train_mode_a(const std::vector<LabeledImage>& dataset, const ModelConfig& config,
                              StageReport* report = nullptr, const std::string& db_dir = "");

struct Recognition {
    int class_label = 0;  // argmax(Z), ties resolved to the lowest class index
    bool tie = false;
    std::vector<double> z;
    std::vector<double> y;
    double preprocess_ms = 0.0;
    double inference_ms = 0.0;
};

Recognition recognize(const RecognitionModel& model, const BinaryImage& image);

/// Deterministic JSON form of a config (report echoing, CLI --config files).
std::string config_to_text(const ModelConfig& config);

/// Applies a partial JSON override object onto `base`. Unknown keys raise
/// ParseError.
ModelConfig config_with_overrides(const std::string& json_text, const ModelConfig& base = {});

std::string save_model(const RecognitionModel& model);
RecognitionModel load_model(const std::string& payload);
void save_model_file(const RecognitionModel& model, const std::string& path);
RecognitionModel load_model_file(const std::string& path);

}  // namespace shaperec
